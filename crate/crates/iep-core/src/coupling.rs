//! Dyadic quantile coupling of the uniform empirical process with a
//! Brownian bridge.
//!
//! Both objects are built from one stream of standard Gaussians `z`, one
//! per dyadic cell: the bridge midpoint over a cell `[a, b]` is refined as
//!
//! ```text
//! B((a+b)/2) = (B(a) + B(b)) / 2 + sqrt((b - a)/4) z,
//! ```
//!
//! and the number of sample points falling in the left half of the cell is
//! the *quantile coupling* of the same `z`:
//!
//! ```text
//! X = InvCdf_{Binomial(m, 1/2)}( Phi(z) ),     m = points in the cell.
//! ```
//!
//! Splitting from the root `[0, 1]` with all `n` points down to depth `d`
//! gives multinomial cell counts (the exact law of i.i.d. uniforms) whose
//! fluctuations track the bridge at every dyadic scale.  Points are placed
//! i.i.d. uniformly inside their final cells, so the sample is exactly
//! i.i.d. `U(0, 1)` while its empirical process stays within
//! `O(log n / sqrt(n))` of the bridge.

use crate::empirical::{ie_value, Sample};
use crate::error::{Error, Result};
use crate::gaussian::{dyadic_grid, GridPath};
use crate::report::RateReport;
use crate::seed::{derive_seed, rng_from};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};
use statrs::function::gamma::ln_gamma;

/// Largest `m` for which the Binomial(m, 1/2) cdf is evaluated by direct
/// summation of the pmf; beyond it a bracketed search on the regularized
/// incomplete-beta cdf takes over.
const DIRECT_SUM_LIMIT: u64 = 10_000;

/// `P(Binomial(m, 1/2) <= k)`.
pub fn binomial_half_cdf(m: u64, k: u64) -> f64 {
    if k >= m {
        return 1.0;
    }
    if m <= DIRECT_SUM_LIMIT {
        half_cdf_table(m)[k as usize]
    } else {
        Binomial::new(0.5, m).expect("valid parameters").cdf(k)
    }
}

/// Quantile function `min { k : P(Binomial(m, 1/2) <= k) >= u }`.
///
/// For `m` up to [`DIRECT_SUM_LIMIT`] the pmf is accumulated directly (from
/// the mode outward, so no intermediate term underflows); for larger `m`
/// a normal-with-continuity-correction guess is polished by a monotone
/// bracketed search on the exact cdf.
pub fn binomial_half_inverse_cdf(m: u64, u: f64) -> u64 {
    debug_assert!((0.0..=1.0).contains(&u));
    if m == 0 || u <= 0.0 {
        return 0;
    }
    if u >= 1.0 {
        return m;
    }
    if m <= DIRECT_SUM_LIMIT {
        let table = half_cdf_table(m);
        return table.partition_point(|&c| c < u) as u64;
    }

    let dist = Binomial::new(0.5, m).expect("valid parameters");
    let z = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(u);
    let guess = (0.5 * m as f64 + z * (0.25 * m as f64).sqrt() - 0.5).round();
    let mut k = guess.clamp(0.0, m as f64) as u64;
    // Walk to a bracket cdf(lo) < u <= cdf(hi), then binary search.
    let mut step = 1u64;
    let (mut lo, mut hi);
    if dist.cdf(k) >= u {
        hi = k;
        loop {
            if hi == 0 {
                return 0;
            }
            let next = hi.saturating_sub(step);
            if dist.cdf(next) < u {
                lo = next;
                break;
            }
            hi = next;
            step *= 2;
        }
    } else {
        lo = k;
        loop {
            let next = (lo + step).min(m);
            if dist.cdf(next) >= u {
                hi = next;
                break;
            }
            lo = next;
            step *= 2;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if dist.cdf(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    k = hi;
    k
}

/// Binomial(m, 1/2) pmf for all k, computed outward from the mode by the
/// ratio recurrence so no term underflows before it is genuinely
/// negligible.
fn half_pmf_table(m: u64) -> Vec<f64> {
    let mf = m as f64;
    let mode = (m / 2) as usize;
    let mut pmf = vec![0.0; m as usize + 1];
    let ln_mode = ln_gamma(mf + 1.0)
        - ln_gamma(mode as f64 + 1.0)
        - ln_gamma((m as usize - mode) as f64 + 1.0)
        - mf * std::f64::consts::LN_2;
    pmf[mode] = ln_mode.exp();
    for k in (0..mode).rev() {
        // pmf(k) = pmf(k+1) * (k+1) / (m-k)
        pmf[k] = pmf[k + 1] * (k as f64 + 1.0) / (mf - k as f64);
    }
    for k in mode + 1..=m as usize {
        // pmf(k) = pmf(k-1) * (m-k+1) / k
        pmf[k] = pmf[k - 1] * (mf - k as f64 + 1.0) / k as f64;
    }
    pmf
}

/// Kahan-compensated cumulative sums of [`half_pmf_table`], capped at 1.
/// Both the cdf and its inverse read this one table, so the pair stays
/// consistent to the bit.
fn half_cdf_table(m: u64) -> Vec<f64> {
    let pmf = half_pmf_table(m);
    let mut table = Vec::with_capacity(pmf.len());
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for p in pmf {
        let y = p - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        table.push(acc.min(1.0));
    }
    table
}

/// A sample of `n` uniforms and a Brownian bridge coupled through the
/// dyadic construction, plus the full count tree that ties them together.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    n: usize,
    depth: u32,
    uniforms: Sample,
    bridge: GridPath,
    /// `levels[l][c]` = number of sample points in dyadic cell `c` of
    /// level `l` (`2^l` cells per level, level 0 is the root).
    levels: Vec<Vec<u64>>,
}

impl CoupledPair {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn uniforms(&self) -> &Sample {
        &self.uniforms
    }

    /// The coupled bridge on the dyadic grid of the pair's depth.
    pub fn bridge(&self) -> &GridPath {
        &self.bridge
    }

    /// Per-level dyadic cell counts (level 0 = root).
    pub fn levels(&self) -> &[Vec<u64>] {
        &self.levels
    }

    /// Cumulative counts at the finest-grid boundaries: entry `j` is the
    /// number of sample points in cells left of grid point `j`.
    pub fn boundary_counts(&self) -> Vec<u64> {
        let finest = &self.levels[self.depth as usize];
        let mut cum = Vec::with_capacity(finest.len() + 1);
        let mut acc = 0u64;
        cum.push(0);
        for c in finest {
            acc += c;
            cum.push(acc);
        }
        cum
    }
}

/// Build a coupled pair at the given depth (`1 <= depth <= 20`).
pub fn dyadic_coupled_pair(n: usize, depth: u32, seed: u64) -> Result<CoupledPair> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if !(1..=20).contains(&depth) {
        return Err(Error::invalid(format!("depth must be in 1..=20, got {depth}")));
    }
    let mut rng = rng_from(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let grid = dyadic_grid(depth);
    let last = grid.len() - 1;

    let mut bridge_values = vec![0.0; grid.len()];
    let mut levels: Vec<Vec<u64>> = vec![vec![n as u64]];

    for level in 1..=depth {
        let parents = &levels[(level - 1) as usize];
        let mut children = Vec::with_capacity(parents.len() * 2);
        // Parent cells at this refinement step span `stride` finest cells.
        let stride = last >> (level - 1);
        for (c, &m) in parents.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let left_idx = c * stride;
            let right_idx = left_idx + stride;
            let mid_idx = left_idx + stride / 2;
            let half_width = grid[right_idx] - grid[mid_idx];
            bridge_values[mid_idx] = 0.5 * (bridge_values[left_idx] + bridge_values[right_idx])
                + (0.5 * half_width).sqrt() * z;
            let x = binomial_half_inverse_cdf(m, std_normal.cdf(z));
            children.push(x);
            children.push(m - x);
        }
        levels.push(children);
    }

    let finest = &levels[depth as usize];
    let mut uniforms = Vec::with_capacity(n);
    for (c, &count) in finest.iter().enumerate() {
        let (a, b) = (grid[c], grid[c + 1]);
        for _ in 0..count {
            uniforms.push(a + (b - a) * rng.random::<f64>());
        }
    }

    Ok(CoupledPair {
        n,
        depth,
        uniforms: Sample::new(uniforms).expect("n > 0 and values are finite"),
        bridge: GridPath::new(grid, bridge_values).expect("dyadic grid is valid"),
        levels,
    })
}

/// Distance between the coupled pair's empirical processes and their
/// Gaussian counterparts over the dyadic grid, with sample jumps projected
/// to the cell boundaries (the count tree evaluates both one-sided
/// projections exactly).  Returns `(d_plain, d_integrated)`:
///
/// * `d_plain` — sup over grid points of `|beta_n(u) - B(u)|` for the
///   uniform empirical process `beta_n = sqrt(n)(U_n - u)`;
/// * `d_integrated` — sup over grid points of
///   `|ialpha_n(Q(u)) - u B(u)|` for the integrated empirical process of
///   the transformed sample `X_i = Q(U_i)`.
///
/// The counts of `X_i = Q(U_i)` below `Q(u)` coincide with the counts of
/// `U_i` below `u` for any continuous strictly-increasing model cdf, so
/// the distances do not depend on `model`; the parameter fixes which
/// transformed sample the statement is about.
pub fn sup_coupling_distance(
    pair: &CoupledPair,
    model: &crate::model::DistributionModel,
) -> (f64, f64) {
    let _ = model; // counts are invariant under the quantile transform
    let n = pair.n as u64;
    let nf = pair.n as f64;
    let sqrt_n = nf.sqrt();
    let grid = pair.bridge.grid();
    let b = pair.bridge.values();
    let cum = pair.boundary_counts();
    let mut d_plain: f64 = 0.0;
    let mut d_integrated: f64 = 0.0;
    for j in 0..grid.len() {
        let u = grid[j];
        let k = cum[j];
        let beta = sqrt_n * (k as f64 / nf - u);
        d_plain = d_plain.max((beta - b[j]).abs());
        let ialpha = sqrt_n * (ie_value(k, n) - 0.5 * u * u);
        d_integrated = d_integrated.max((ialpha - u * b[j]).abs());
    }
    (d_plain, d_integrated)
}

/// How the dyadic depth is chosen for a given sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthRule {
    /// `ceil(log2 n)`, clamped to `1..=20`.  The finest cells then hold
    /// O(1) points, and the grid bias `sqrt(n) 2^-depth` stays below the
    /// coupling error `log n / sqrt(n)`.
    Log2Ceil,
    Fixed(u32),
}

impl DepthRule {
    pub fn depth_for(&self, n: usize) -> u32 {
        match self {
            DepthRule::Log2Ceil => {
                let d = if n.is_power_of_two() {
                    n.ilog2()
                } else {
                    n.ilog2() + 1
                };
                d.clamp(1, 20)
            }
            DepthRule::Fixed(d) => *d,
        }
    }
}

/// Distances of one replicate: `(d_plain, d_integrated)` at `n` under the
/// uniform model with the given depth rule.
pub fn replicate_distances(n: usize, rule: DepthRule, seed: u64) -> Result<(f64, f64)> {
    let pair = dyadic_coupled_pair(n, rule.depth_for(n), seed)?;
    Ok(sup_coupling_distance(&pair, &crate::model::DistributionModel::Uniform))
}

/// Median coupling distance of the integrated process across sample sizes,
/// with the normalization `median * sqrt(n) / ln(n)` that should stay
/// bounded if the coupling achieves the `log n / sqrt(n)` rate.
pub fn rate_experiment(
    n_list: &[usize],
    reps: usize,
    rule: DepthRule,
    seed: u64,
) -> Result<RateReport> {
    if n_list.is_empty() || reps == 0 {
        return Err(Error::invalid("rate experiment needs sizes and replicates"));
    }
    let mut report = RateReport {
        experiment: "coupling_distance_integrated".to_string(),
        normalization: "median * sqrt(n) / ln(n)".to_string(),
        reps,
        seed,
        rows: Vec::new(),
    };
    for (i, &n) in n_list.iter().enumerate() {
        let mut values: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let s = derive_seed(seed, (i * reps + r) as u64);
                replicate_distances(n, rule, s).map(|(_, d_int)| d_int)
            })
            .collect::<Result<_>>()?;
        report.push_row(n, &mut values, |m| m * (n as f64).sqrt() / (n as f64).ln());
    }
    Ok(report)
}
