//! One-sample goodness-of-fit tests built on the integrated empirical
//! distribution function.
//!
//! Under a continuous null cdf `F0`, the integrated empirical df converges
//! to `F0^2 / 2`, and the scaled discrepancy converges in law to the
//! weighted bridge `u B(u)` after the time change `u = F0(t)`.  Two
//! statistics measure that discrepancy:
//!
//! * `ks_integrated` — the sup-norm statistic
//!   `sqrt(n) sup_t |IF_n(t) - F0(t)^2 / 2|`, limiting law
//!   `sup_u |u B(u)|`;
//! * `cvm_integrated` — the quadratic statistic
//!   `n  int (IF_n - F0^2/2)^2 dF0`, limiting law `int_0^1 u^2 B(u)^2 du`
//!   (mean 1/20).
//!
//! Both are distribution-free: the observed value depends on the data only
//! through the null-cdf images `F0(X_i)`, so the same simulated null table
//! serves every continuous model.

use crate::empirical::{ie_value, Sample};
use crate::error::{Error, Result};
use crate::gaussian::{equispaced_grid, sample_bridge_with, weight_path};
use crate::model::DistributionModel;
use crate::report::TestReport;
use crate::seed::{derive_seed, rng_from};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which integrated goodness-of-fit statistic to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GofStatistic {
    IntegratedKs,
    IntegratedCvm,
}

impl GofStatistic {
    pub fn label(&self) -> &'static str {
        match self {
            GofStatistic::IntegratedKs => "integrated_ks",
            GofStatistic::IntegratedCvm => "integrated_cvm",
        }
    }
}

/// Distinct null-cdf images `u_j = F0(x_j)` of the sorted sample paired
/// with the counts `k_j = #{i : X_i <= x_j}`.  Everything downstream sees
/// the data only through this list, which is what makes the statistics
/// distribution-free.
fn distinct_images(sample: &Sample, model: &DistributionModel) -> Vec<(f64, u64)> {
    let sorted = sample.sorted();
    let mut out: Vec<(f64, u64)> = Vec::new();
    let mut i = 0usize;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        out.push((model.cdf(v), j as u64));
        i = j;
    }
    out
}

/// Sup-norm statistic `sqrt(n) sup_t |IF_n(t) - F0(t)^2 / 2|`.
///
/// Between jumps `IF_n` is constant and `F0^2/2` is monotone, so the
/// supremum is attained at a jump point (from either side) or in the
/// upper tail, where the gap settles at `1 / (2 sqrt(n))`.
pub fn ks_integrated(sample: &Sample, model: &DistributionModel) -> f64 {
    let n = sample.len() as u64;
    let sqrt_n = (n as f64).sqrt();
    // Upper tail: IF_n -> (1 + 1/n)/2 while F0^2/2 -> 1/2.
    let mut sup = 0.5 * (ie_value(n, n) - 0.5).abs();
    let mut prev_k = 0u64;
    for &(u, k) in &distinct_images(sample, model) {
        let half_u2 = 0.5 * u * u;
        let from_left = (ie_value(prev_k, n) - half_u2).abs();
        let at_point = (ie_value(k, n) - half_u2).abs();
        sup = sup.max(from_left).max(at_point);
        prev_k = k;
    }
    sqrt_n * sup
}

/// Quadratic statistic `n  int (IF_n(t) - F0(t)^2 / 2)^2 dF0(t)`.
///
/// After the substitution `u = F0(t)` the integrand is piecewise
/// `(c - u^2/2)^2` with `c` constant between jump images, which integrates
/// in closed form to `c^2 u - c u^3 / 3 + u^5 / 20`.
pub fn cvm_integrated(sample: &Sample, model: &DistributionModel) -> f64 {
    let n = sample.len() as u64;
    let piece = |c: f64, a: f64, b: f64| {
        let anti = |u: f64| c * c * u - c * u.powi(3) / 3.0 + u.powi(5) / 20.0;
        anti(b) - anti(a)
    };
    let mut total = 0.0;
    let mut left = 0.0;
    let mut prev_k = 0u64;
    for &(u, k) in &distinct_images(sample, model) {
        total += piece(ie_value(prev_k, n), left, u);
        left = u;
        prev_k = k;
    }
    total += piece(ie_value(n, n), left, 1.0);
    n as f64 * total
}

/// Draw `reps` replicates of the limiting null law of `statistic` on an
/// equispaced grid with `grid_cells` cells, returned sorted ascending.
///
/// * `IntegratedKs` — `sup_u |u B(u)|` over the grid points;
/// * `IntegratedCvm` — trapezoid rule for `int_0^1 (u B(u))^2 du`.
pub fn simulate_null(
    statistic: GofStatistic,
    grid_cells: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if reps == 0 {
        return Err(Error::invalid("null simulation needs at least one replicate"));
    }
    if grid_cells < 2 {
        return Err(Error::invalid("null simulation grid needs at least 2 cells"));
    }
    let grid = equispaced_grid(grid_cells);
    let mut draws: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from(derive_seed(seed, r as u64));
            let bridge = sample_bridge_with(&grid, &mut rng).expect("grid is valid");
            let path = weight_path(&bridge);
            match statistic {
                GofStatistic::IntegratedKs => path.sup_abs(),
                GofStatistic::IntegratedCvm => {
                    let v = path.values();
                    let g = path.grid();
                    let mut acc = 0.0;
                    for j in 0..g.len() - 1 {
                        acc += 0.5 * (v[j] * v[j] + v[j + 1] * v[j + 1]) * (g[j + 1] - g[j]);
                    }
                    acc
                }
            }
        })
        .collect();
    draws.sort_by(|a, b| a.partial_cmp(b).expect("draws are finite"));
    Ok(draws)
}

/// Default grid resolution for null simulation: fine enough that the grid
/// bias of the sup is far below Monte Carlo noise at any realistic `reps`.
pub const DEFAULT_NULL_GRID_CELLS: usize = 1 << 10;

/// Run the goodness-of-fit test end to end: observed statistic, simulated
/// null table of `reps` replicates, Monte Carlo p-value.
pub fn gof_test(
    sample: &Sample,
    model: &DistributionModel,
    statistic: GofStatistic,
    reps: usize,
    seed: u64,
) -> Result<TestReport> {
    let null = simulate_null(statistic, DEFAULT_NULL_GRID_CELLS, reps, seed)?;
    gof_test_with_null(sample, model, statistic, &null, seed)
}

/// Same as [`gof_test`] but reusing an existing **sorted** null table
/// (e.g. loaded from a cache).
pub fn gof_test_with_null(
    sample: &Sample,
    model: &DistributionModel,
    statistic: GofStatistic,
    sorted_null: &[f64],
    seed: u64,
) -> Result<TestReport> {
    if sorted_null.is_empty() {
        return Err(Error::invalid("null table is empty"));
    }
    let value = match statistic {
        GofStatistic::IntegratedKs => ks_integrated(sample, model),
        GofStatistic::IntegratedCvm => cvm_integrated(sample, model),
    };
    Ok(TestReport::from_null_table(
        statistic.label(),
        value,
        sorted_null,
        vec![sample.len()],
        seed,
    ))
}
