//! Two-sample, power-modified, and K-sample tests built on integrated
//! empirical distribution functions.
//!
//! All statistics here compare integrated edfs across samples, so they
//! need no hypothesized cdf for the sup variants; the K-sample integral
//! statistic integrates against a continuous model cdf `F0`.
//!
//! Conventions fixed by this module:
//!
//! * `two_sample_process(x, y, t)` pairs each sample with **its own**
//!   size: `sqrt(mn/(m+n)) (IFx_m(t) - IFy_n(t))` where `m = |x|`,
//!   `n = |y|`.
//! * The two-sample quadratic statistic integrates against the pooled
//!   empirical df (mass `1/(m+n)` per pooled point) — the only computable
//!   plug-in when the common null cdf is unknown.
//! * The K-sample centering `D` is the size-weighted average of the
//!   per-sample integrated edfs, `D = (1/|n|) sum n_k IF^k`.  (For plain
//!   edfs the same expression also equals the pooled-sample edf; for
//!   *integrated* edfs it does not — each `IF^k` integrates against its
//!   own sample — and the weighted average is the centering that makes
//!   the variance decomposition and the K = 2 reduction exact.)

use crate::empirical::{ie_value, Sample};
use crate::error::{Error, Result};
use crate::gaussian::{equispaced_grid, sample_bridge_with, GridPath};
use crate::model::DistributionModel;
use crate::report::TestReport;
use crate::seed::{derive_seed, rng_from};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// K nonempty samples viewed jointly, with their pooled sorted values.
#[derive(Debug, Clone)]
pub struct MultiSample {
    samples: Vec<Sample>,
    pooled: Vec<f64>,
}

impl MultiSample {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        let mut pooled: Vec<f64> = samples
            .iter()
            .flat_map(|s| s.sorted().iter().copied())
            .collect();
        pooled.sort_by(|a, b| a.partial_cmp(b).expect("samples hold no NaN"));
        Ok(MultiSample { samples, pooled })
    }

    pub fn k(&self) -> usize {
        self.samples.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.samples.iter().map(Sample::len).collect()
    }

    /// Total pooled size `|n|`.
    pub fn total(&self) -> usize {
        self.pooled.len()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn pooled_sorted(&self) -> &[f64] {
        &self.pooled
    }

    /// Distinct pooled values with their multiplicities.
    fn distinct_pooled(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &v in &self.pooled {
            match out.last_mut() {
                Some((w, mult)) if *w == v => *mult += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }
}

fn pow_q(v: f64, q: u32) -> f64 {
    if q == 1 {
        v
    } else {
        v.powi(q as i32)
    }
}

/// Integrated two-sample empirical process
/// `sqrt(mn/(m+n)) (IFx_m(t) - IFy_n(t))`.
pub fn two_sample_process(x: &Sample, y: &Sample, t: f64) -> f64 {
    let (m, n) = (x.len() as u64, y.len() as u64);
    let scale = (m as f64 * n as f64 / (m + n) as f64).sqrt();
    scale * (ie_value(x.count_le(t) as u64, m) - ie_value(y.count_le(t) as u64, n))
}

/// Sup and quadratic statistics of the integrated two-sample process:
/// `(sup_t |xi(t)|, sum_z xi(z)^2 / (m+n))` with the sum over all pooled
/// points.  Exact: the process is a step function with jumps only at
/// pooled sample values, so the sup is scanned over those candidates
/// (from both sides).
pub fn two_sample_stats(x: &Sample, y: &Sample) -> (f64, f64) {
    modified_two_sample_stats(x, y, 1).expect("q = 1 is always valid")
}

/// Power-modified two-sample statistics built from
/// `sqrt(mn/(m+n)) (IFx_m(t)^q - IFy_n(t)^q)`; `q = 1` is exactly
/// [`two_sample_stats`].
pub fn modified_two_sample_stats(x: &Sample, y: &Sample, q: u32) -> Result<(f64, f64)> {
    if q == 0 {
        return Err(Error::domain("power q must be >= 1"));
    }
    let (m, n) = (x.len() as u64, y.len() as u64);
    let scale = (m as f64 * n as f64 / (m + n) as f64).sqrt();
    let ms = MultiSample::new(vec![x.clone(), y.clone()])?;
    let xi_at = |kx: u64, ky: u64| scale * (pow_q(ie_value(kx, m), q) - pow_q(ie_value(ky, n), q));
    let mut sup = 0.0f64;
    let mut integral = 0.0f64;
    for &(z, mult) in &ms.distinct_pooled() {
        let left = xi_at(x.count_lt(z) as u64, y.count_lt(z) as u64);
        let at = xi_at(x.count_le(z) as u64, y.count_le(z) as u64);
        sup = sup.max(left.abs()).max(at.abs());
        integral += at * at * mult as f64 / (m + n) as f64;
    }
    Ok((sup, integral))
}

/// One path of the limiting Gaussian process of the power-modified
/// two-sample statistic, in the time scale `u = F(t)`:
///
/// ```text
/// (q / 2^(q-1)) u^(2q-1) ( sqrt(n/(m+n)) B1(u) - sqrt(m/(m+n)) B2(u) )
/// ```
///
/// with independent Brownian bridges `B1`, `B2`.
pub fn limit_two_sample(m: usize, n: usize, q: u32, grid: &[f64], seed: u64) -> Result<GridPath> {
    limit_two_sample_with(m, n, q, grid, &mut rng_from(seed))
}

fn limit_two_sample_with(
    m: usize,
    n: usize,
    q: u32,
    grid: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<GridPath> {
    if q == 0 {
        return Err(Error::domain("power q must be >= 1"));
    }
    if m == 0 || n == 0 {
        return Err(Error::EmptySample);
    }
    let b1 = sample_bridge_with(grid, rng)?;
    let b2 = sample_bridge_with(grid, rng)?;
    let total = (m + n) as f64;
    let (c1, c2) = ((n as f64 / total).sqrt(), (m as f64 / total).sqrt());
    let amp = q as f64 / 2f64.powi(q as i32 - 1);
    let values = grid
        .iter()
        .enumerate()
        .map(|(j, &u)| amp * pow_q(u, 2 * q - 1) * (c1 * b1.values()[j] - c2 * b2.values()[j]))
        .collect();
    GridPath::new(grid.to_vec(), values)
}

/// Size-weighted average of the per-sample integrated edfs at `t`
/// (the K-sample centering `D`).
fn weighted_center(ms: &MultiSample, counts: &[u64]) -> f64 {
    let total = ms.total() as f64;
    ms.samples
        .iter()
        .zip(counts)
        .map(|(s, &k)| s.len() as f64 * ie_value(k, s.len() as u64))
        .sum::<f64>()
        / total
}

fn k_sample_value(ms: &MultiSample, counts: &[u64]) -> f64 {
    let center = weighted_center(ms, counts);
    ms.samples
        .iter()
        .zip(counts)
        .map(|(s, &k)| {
            let d = ie_value(k, s.len() as u64) - center;
            s.len() as f64 * d * d
        })
        .sum()
}

/// Integrated K-sample empirical process
/// `xi_K(t) = sum_k n_k (IF^k(t) - D(t))^2` with the size-weighted
/// centering `D`.  Nonnegative by construction.
pub fn k_sample_process(ms: &MultiSample, t: f64) -> f64 {
    let counts: Vec<u64> = ms.samples.iter().map(|s| s.count_le(t) as u64).collect();
    k_sample_value(ms, &counts)
}

/// Sup and integral statistics of the K-sample process:
/// `(sup_t xi_K(t), int xi_K(t) dF0(t))`.
///
/// The sup is exact over the jump candidates.  The integral is exact for
/// a continuous model: `xi_K` is a step function in `t`, so the integral
/// is a finite sum of `xi_K` values times `F0`-increments, including the
/// piece beyond the largest pooled point where the process settles at
/// `(1/4) sum_k n_k (1/n_k - K/|n|)^2`.
pub fn k_sample_stats(ms: &MultiSample, model: &DistributionModel) -> (f64, f64) {
    let mut sup = 0.0f64;
    let mut integral = 0.0f64;
    let mut left_u = 0.0f64;
    let mut prev_counts: Vec<u64> = vec![0; ms.k()];
    for &(z, _) in &ms.distinct_pooled() {
        let at_counts: Vec<u64> = ms.samples.iter().map(|s| s.count_le(z) as u64).collect();
        let left = k_sample_value(ms, &prev_counts);
        let at = k_sample_value(ms, &at_counts);
        sup = sup.max(left).max(at);
        let u = model.cdf(z);
        integral += left * (u - left_u);
        left_u = u;
        prev_counts = at_counts;
    }
    // Beyond the largest pooled point all counts are saturated.
    let tail = k_sample_value(ms, &ms.samples.iter().map(|s| s.len() as u64).collect::<Vec<_>>());
    sup = sup.max(tail);
    integral += tail * (1.0 - left_u);
    (sup, integral)
}

/// One path of the limiting field of the K-sample process in the scale
/// `u = F0(t)`:
///
/// ```text
/// u^2 [ sum_k B^k(u)^2  -  ( sum_k sqrt(n_k/|n|) B^k(u) )^2 ]
/// ```
///
/// with K independent bridges.  Nonnegative pointwise (Cauchy-Schwarz,
/// since the weights `n_k/|n|` sum to one).
pub fn limit_k_sample(sizes: &[usize], grid: &[f64], seed: u64) -> Result<GridPath> {
    limit_k_sample_with(sizes, grid, &mut rng_from(seed))
}

fn limit_k_sample_with(sizes: &[usize], grid: &[f64], rng: &mut ChaCha8Rng) -> Result<GridPath> {
    if sizes.len() < 2 {
        return Err(Error::invalid("need at least 2 sample sizes"));
    }
    if sizes.iter().any(|&n| n == 0) {
        return Err(Error::EmptySample);
    }
    let total: usize = sizes.iter().sum();
    let bridges: Vec<GridPath> = sizes
        .iter()
        .map(|_| sample_bridge_with(grid, rng))
        .collect::<Result<_>>()?;
    let values = grid
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let mut sum_sq = 0.0;
            let mut weighted = 0.0;
            for (b, &nk) in bridges.iter().zip(sizes) {
                let v = b.values()[j];
                sum_sq += v * v;
                weighted += (nk as f64 / total as f64).sqrt() * v;
            }
            u * u * (sum_sq - weighted * weighted)
        })
        .collect();
    GridPath::new(grid.to_vec(), values)
}

/// Which multisample statistic a test should run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultisampleVariant {
    /// Sup of the (power-modified) two-sample process; requires K = 2.
    TwoSampleSup { q: u32 },
    /// Quadratic statistic against the pooled edf; requires K = 2.
    TwoSampleIntegral { q: u32 },
    /// Sup of the K-sample process.
    KSampleSup,
    /// Integral of the K-sample process against a model cdf.
    KSampleIntegral,
}

impl MultisampleVariant {
    pub fn label(&self) -> String {
        match self {
            MultisampleVariant::TwoSampleSup { q } => format!("two_sample_sup_q{q}"),
            MultisampleVariant::TwoSampleIntegral { q } => format!("two_sample_integral_q{q}"),
            MultisampleVariant::KSampleSup => "k_sample_sup".to_string(),
            MultisampleVariant::KSampleIntegral => "k_sample_integral".to_string(),
        }
    }
}

/// Grid resolution used when simulating limit functionals for p-values.
pub const DEFAULT_LIMIT_GRID_CELLS: usize = 1 << 10;

fn null_functional(
    variant: MultisampleVariant,
    sizes: &[usize],
    grid: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    Ok(match variant {
        MultisampleVariant::TwoSampleSup { q } => {
            limit_two_sample_with(sizes[0], sizes[1], q, grid, rng)?.sup_abs()
        }
        MultisampleVariant::TwoSampleIntegral { q } => {
            let path = limit_two_sample_with(sizes[0], sizes[1], q, grid, rng)?;
            trapezoid(grid, path.values(), |v| v * v)
        }
        MultisampleVariant::KSampleSup => {
            limit_k_sample_with(sizes, grid, rng)?.sup_abs()
        }
        MultisampleVariant::KSampleIntegral => {
            let path = limit_k_sample_with(sizes, grid, rng)?;
            trapezoid(grid, path.values(), |v| v)
        }
    })
}

fn trapezoid(grid: &[f64], values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..grid.len() - 1 {
        acc += 0.5 * (f(values[j]) + f(values[j + 1])) * (grid[j + 1] - grid[j]);
    }
    acc
}

/// Run a multisample test end to end: observed statistic plus a Monte
/// Carlo p-value against `reps` draws of the corresponding limit
/// functional.  `model` is required only by `KSampleIntegral`.
pub fn multisample_test(
    ms: &MultiSample,
    model: Option<&DistributionModel>,
    variant: MultisampleVariant,
    reps: usize,
    seed: u64,
) -> Result<TestReport> {
    let null = simulate_multisample_null(variant, &ms.sizes(), reps, seed)?;
    multisample_test_with_null(ms, model, variant, &null, seed)
}

/// Simulate the sorted null table of the limit functional matching
/// `variant` at the given per-sample sizes (the sizes enter through the
/// weights of the limit process).
pub fn simulate_multisample_null(
    variant: MultisampleVariant,
    sizes: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if reps == 0 {
        return Err(Error::invalid("null simulation needs at least one replicate"));
    }
    match variant {
        MultisampleVariant::TwoSampleSup { .. } | MultisampleVariant::TwoSampleIntegral { .. } => {
            if sizes.len() != 2 {
                return Err(Error::invalid(format!(
                    "two-sample variant needs exactly 2 sample sizes, got {}",
                    sizes.len()
                )));
            }
        }
        _ => {
            if sizes.len() < 2 {
                return Err(Error::invalid("K-sample variant needs at least 2 sample sizes"));
            }
        }
    }
    if sizes.iter().any(|n| *n == 0) {
        return Err(Error::invalid("sample sizes must be positive"));
    }
    let grid = equispaced_grid(DEFAULT_LIMIT_GRID_CELLS);
    let mut null: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from(derive_seed(seed, r as u64));
            null_functional(variant, sizes, &grid, &mut rng)
        })
        .collect::<Result<_>>()?;
    null.sort_by(|a, b| a.partial_cmp(b).expect("draws are finite"));
    Ok(null)
}

/// Same as [`multisample_test`] but reusing an existing **sorted** null
/// table (e.g. loaded from a cache).  The table must have been simulated
/// for the same variant and sample sizes.
pub fn multisample_test_with_null(
    ms: &MultiSample,
    model: Option<&DistributionModel>,
    variant: MultisampleVariant,
    sorted_null: &[f64],
    seed: u64,
) -> Result<TestReport> {
    if sorted_null.is_empty() {
        return Err(Error::invalid("null table is empty"));
    }
    let sizes = ms.sizes();
    let value = match variant {
        MultisampleVariant::TwoSampleSup { q } | MultisampleVariant::TwoSampleIntegral { q } => {
            if ms.k() != 2 {
                return Err(Error::invalid(format!(
                    "two-sample variant needs exactly 2 samples, got {}",
                    ms.k()
                )));
            }
            let (sup, integral) = modified_two_sample_stats(&ms.samples[0], &ms.samples[1], q)?;
            match variant {
                MultisampleVariant::TwoSampleSup { .. } => sup,
                _ => integral,
            }
        }
        MultisampleVariant::KSampleSup => {
            let (sup, _) = k_sample_stats(ms, model.unwrap_or(&DistributionModel::Uniform));
            sup
        }
        MultisampleVariant::KSampleIntegral => {
            let model = model.ok_or_else(|| {
                Error::invalid("the K-sample integral statistic needs a model cdf to integrate against")
            })?;
            let (_, integral) = k_sample_stats(ms, model);
            integral
        }
    };
    Ok(TestReport::from_null_table(
        variant.label(),
        value,
        sorted_null,
        sizes,
        seed,
    ))
}
