//! Local times of the centered partial-sum walk behind the integrated
//! empirical process.
//!
//! The value of the integrated empirical process at the right edge has the
//! representation `S_n / sqrt(n)` with `S_n = sum (1/2 - U_i)`, a mean-zero
//! walk whose steps live in `I = [-1/2, 1/2]`.  The module provides that
//! walk, its discrete local time `lambda(x, m)` (visits to `x + I`), the
//! self-intersection local time
//!
//! ```text
//! L_n(t) = sum_{i<j<=floor(nt)} max(0, 1 - |S_i - S_j|),
//! ```
//!
//! the normalized profile `Lambda_n(x, t) = lambda(sqrt(n) x, floor(nt)) /
//! sqrt(n)` with its exact squared-integral identity
//!
//! ```text
//! L_n(t) = n^{3/2}/2 * integral Lambda_n(x,t)^2 dx - floor(nt)/2,
//! ```
//!
//! an occupation-time estimator of Brownian local time for comparison, and
//! the growth experiment that recovers the `n^{3/2}` exponent of `L_n(1)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::report::RateReport;
use crate::seed::{derive_seed, rng_from};
use rand::Rng;

/// Centered partial-sum walk of a uniform sample: `S_k = sum_{i<=k} (1/2 - U_i)`.
///
/// `S_0 = 0` is implicit and does not count as a visit anywhere; every step
/// moves by at most 1/2.
#[derive(Debug, Clone)]
pub struct WalkPath {
    uniforms: Vec<f64>,
    sums: Vec<f64>,
}

impl WalkPath {
    pub fn n(&self) -> usize {
        self.sums.len()
    }

    pub fn uniforms(&self) -> &[f64] {
        &self.uniforms
    }

    /// Partial sums `S_1, ..., S_n`.
    pub fn sums(&self) -> &[f64] {
        &self.sums
    }
}

/// Build the walk, rejecting anything outside the unit interval.
pub fn walk_from_uniforms(uniforms: Vec<f64>) -> Result<WalkPath> {
    if uniforms.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(bad) = uniforms.iter().find(|u| !(0.0..=1.0).contains(*u)) {
        return Err(Error::domain(format!("walk summand {bad} outside [0, 1]")));
    }
    let mut sums = Vec::with_capacity(uniforms.len());
    let mut s = 0.0;
    for &u in &uniforms {
        s += 0.5 - u;
        sums.push(s);
    }
    Ok(WalkPath { uniforms, sums })
}

/// Walk of `n` freshly drawn uniforms.
pub fn sample_walk(n: usize, seed: u64) -> Result<WalkPath> {
    let mut rng = rng_from(seed);
    walk_from_uniforms((0..n).map(|_| rng.random::<f64>()).collect())
}

/// Characteristic function of one walk step: `sin(z/2) / (z/2)`, extended
/// by continuity at zero.  Strictly below 1 in absolute value away from
/// zero, and decaying like `2/|z|` at infinity.
pub fn char_fn(z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    let h = z / 2.0;
    h.sin() / h
}

/// Number of visits of the walk to the window `x + [-1/2, 1/2]` up to time
/// `m`: `#{i <= m : |S_i - x| <= 1/2}`.  The window is closed on both
/// sides, the same convention the overlap formula of
/// [`self_intersection`] uses.
///
/// Panics if `m` is outside `1..=n`.
pub fn local_time(walk: &WalkPath, x: f64, m: usize) -> usize {
    assert!(m >= 1 && m <= walk.n(), "time index {m} outside 1..={}", walk.n());
    walk.sums[..m]
        .iter()
        .filter(|s| (*s - x).abs() <= 0.5)
        .count()
}

/// Piecewise-constant spatial profile of a local time, for exact
/// integration.  The profile equals `values[j]` on the open interval
/// `(breakpoints[j], breakpoints[j+1])` and zero outside
/// `[breakpoints[0], breakpoints[last]]`; the isolated values at the
/// breakpoints themselves carry no mass, so integrals ignore them (point
/// queries with the closed-window convention go through [`local_time`]).
#[derive(Debug, Clone)]
pub struct LocalTimeProfile {
    m: usize,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl LocalTimeProfile {
    /// Time index `m = floor(nt)` the profile was taken at.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Value on each open interval between consecutive breakpoints; one
    /// entry shorter than `breakpoints`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn integral(&self) -> f64 {
        self.piece_sum(|v| v)
    }

    pub fn square_integral(&self) -> f64 {
        self.piece_sum(|v| v * v)
    }

    fn piece_sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (j, v) in self.values.iter().enumerate() {
            acc += f(*v) * (self.breakpoints[j + 1] - self.breakpoints[j]);
        }
        acc
    }
}

/// Sweep a set of equal-amplitude closed intervals `[c - h, c + h]` into a
/// piecewise-constant profile.
fn sweep_profile(centers: &[f64], h: f64, amp: f64, m: usize) -> LocalTimeProfile {
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * centers.len());
    for &c in centers {
        events.push((c - h, amp));
        events.push((c + h, -amp));
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite breakpoints"));
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    let mut level = 0.0;
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        while i < events.len() && events[i].0 == x {
            level += events[i].1;
            i += 1;
        }
        breakpoints.push(x);
        // After absorbing every event at x, the level holds on (x, next).
        if i < events.len() {
            values.push(level);
        }
    }
    LocalTimeProfile { m, breakpoints, values }
}

/// Exact profile of `x -> lambda(x, m)`: unit-amplitude windows of width 1
/// around each of the first `m` partial sums.
///
/// Panics if `m` is outside `1..=n`.
pub fn local_time_profile(walk: &WalkPath, m: usize) -> LocalTimeProfile {
    assert!(m >= 1 && m <= walk.n(), "time index {m} outside 1..={}", walk.n());
    sweep_profile(&walk.sums[..m], 0.5, 1.0, m)
}

/// Profile of `Lambda_n(x, t) = lambda(sqrt(n) x, floor(nt)) / sqrt(n)`:
/// breakpoints `(S_i +- 1/2)/sqrt(n)`, amplitude `1/sqrt(n)` per visit.
/// `t = 0` (or `t < 1/n`) yields an empty profile.
pub fn normalized_local_time_profile(walk: &WalkPath, t: f64) -> Result<LocalTimeProfile> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("time fraction {t} outside [0, 1]")));
    }
    let n = walk.n();
    let m = ((n as f64 * t).floor() as usize).min(n);
    let sqrt_n = (n as f64).sqrt();
    let centers: Vec<f64> = walk.sums[..m].iter().map(|s| s / sqrt_n).collect();
    Ok(sweep_profile(&centers, 0.5 / sqrt_n, 1.0 / sqrt_n, m))
}

/// Self-intersection local time up to the time fraction `t`:
/// `sum_{1<=i<j<=floor(nt)} max(0, 1 - |S_i - S_j|)`.  Each summand is the
/// overlap length of the two unit windows around `S_i` and `S_j`, so the
/// whole sum runs in `O(M log M)` after sorting: for each point, the
/// points within distance 1 below it form a contiguous run, and their
/// contribution is a prefix-sum difference.
///
/// Panics if `t` is outside `[0, 1]`.
pub fn self_intersection(walk: &WalkPath, t: f64) -> f64 {
    assert!((0.0..=1.0).contains(&t), "time fraction {t} outside [0, 1]");
    let n = walk.n();
    let m = ((n as f64 * t).floor() as usize).min(n);
    if m < 2 {
        return 0.0;
    }
    let mut s: Vec<f64> = walk.sums[..m].to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite sums"));
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(0.0);
    for &v in &s {
        prefix.push(prefix.last().expect("nonempty") + v);
    }
    let mut total = 0.0;
    let mut lo = 0usize;
    for b in 1..m {
        while s[b] - s[lo] > 1.0 {
            lo += 1;
        }
        let count = (b - lo) as f64;
        total += count * (1.0 - s[b]) + (prefix[b] - prefix[lo]);
    }
    total
}

/// Both sides of the exact identity
/// `L_n(t) = n^{3/2}/2 * integral Lambda_n^2 dx - floor(nt)/2`,
/// returned as `(lhs, rhs)` so callers can see how far apart float
/// arithmetic lets them drift.
pub fn l2_identity_check(walk: &WalkPath, t: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("time fraction {t} outside [0, 1]")));
    }
    let lhs = self_intersection(walk, t);
    let profile = normalized_local_time_profile(walk, t)?;
    let n = walk.n() as f64;
    let rhs = 0.5 * n.powf(1.5) * profile.square_integral() - 0.5 * profile.m() as f64;
    Ok((lhs, rhs))
}

/// Occupation-time estimate of a Brownian local time at `x` from a path
/// sampled at `times` (strictly increasing from 0): trapezoidal time in
/// the window `[x - eps, x + eps]`, divided by `2 eps`.
///
/// The window must span at least four path steps, otherwise the occupation
/// sum cannot resolve it and the call is rejected.
pub fn brownian_local_time(times: &[f64], values: &[f64], x: f64, eps: f64) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::invalid("path needs matching times and values, length >= 2"));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("path times must be strictly increasing"));
    }
    let max_step = times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max);
    if !(eps > 0.0) || eps < 4.0 * max_step {
        return Err(Error::domain(format!(
            "occupation window {eps} cannot resolve path steps of size {max_step}"
        )));
    }
    let inside = |v: f64| ((v - x).abs() <= eps) as u8 as f64;
    let mut occ = 0.0;
    for i in 0..times.len() - 1 {
        occ += 0.5 * (inside(values[i]) + inside(values[i + 1])) * (times[i + 1] - times[i]);
    }
    Ok(occ / (2.0 * eps))
}

/// Default occupation window: the square root of the coarsest path step,
/// which vanishes with the step while staying far above it.
pub fn default_occupation_epsilon(times: &[f64]) -> f64 {
    times
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max)
        .sqrt()
}

/// Growth of the self-intersection local time: per sample size, the
/// quartiles of `L_n(1)` over fresh walks, with the median normalized by
/// `n^{3/2}`.  The squared-profile integral is pinned to `L_n(1)` by the
/// exact identity, so only `L_n(1)` is tabulated.
pub fn lt_growth_experiment(n_list: &[usize], reps: usize, seed: u64) -> Result<RateReport> {
    if n_list.is_empty() {
        return Err(Error::invalid("growth experiment needs sample sizes"));
    }
    if reps < 50 {
        return Err(Error::invalid("growth experiment needs at least 50 replicates"));
    }
    let mut report = RateReport {
        experiment: "self_intersection_growth".to_string(),
        normalization: "median / n^(3/2)".to_string(),
        reps,
        seed,
        rows: Vec::new(),
    };
    for (i, &n) in n_list.iter().enumerate() {
        if n == 0 {
            return Err(Error::invalid("growth experiment needs positive sizes"));
        }
        let mut values: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let walk = sample_walk(n, derive_seed(seed, (i * reps + r) as u64))?;
                Ok(self_intersection(&walk, 1.0))
            })
            .collect::<Result<_>>()?;
        report.push_row(n, &mut values, |m| m / (n as f64).powf(1.5));
    }
    Ok(report)
}
