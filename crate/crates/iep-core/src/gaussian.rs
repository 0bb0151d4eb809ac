//! Grid samplers for the Gaussian limit processes.
//!
//! All samplers produce exact finite-dimensional laws on their grids (no
//! time-discretization error): paths are built from independent Gaussian
//! increments with the exact increment variances, so refining the grid does
//! not change the law at shared points.  Values *between* grid points are
//! obtained by linear interpolation where needed; that is the only
//! approximation, and callers choose grids fine enough for their tolerance.
//!
//! Processes on the unit interval or unit square:
//!
//! * Wiener process `W(u)`, `u in [0, 1]`;
//! * Brownian bridge `B(u) = W(u) - u W(1)` — pinned to 0 at both ends
//!   exactly, covariance `u ^ v - u v`;
//! * Kiefer sheet `K(k, u)` over integer first argument — independent
//!   bridge increments in `k`, covariance `(j ^ k)(u ^ v - u v)`;
//! * tied-down Kiefer sheet
//!   `K0(s, u) = K(s, u) - s K(1, u)` built from a Brownian sheet via
//!   `K(s, u) = W(s, u) - u W(s, 1)`, covariance
//!   `(s ^ s' - s s')(u ^ v - u v)`; it vanishes on the whole boundary of
//!   the unit square exactly;
//! * the `u`-weighted versions of both (multiplication by the second
//!   argument), which are the actual limits of the integrated empirical
//!   processes.

use crate::error::{Error, Result};
use crate::seed::rng_from;
use rand::Rng;
use rand_distr::StandardNormal;

/// A process sampled on a grid over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_unit_grid(&grid)?;
        if grid.len() != values.len() {
            return Err(Error::invalid("grid and values must have equal length"));
        }
        Ok(GridPath { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Value at `u` by linear interpolation between grid points.
    pub fn interp(&self, u: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&u));
        let i = self.grid.partition_point(|g| *g <= u);
        if i == 0 {
            return self.values[0];
        }
        if i == self.grid.len() {
            return *self.values.last().expect("nonempty grid");
        }
        let (g0, g1) = (self.grid[i - 1], self.grid[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (u - g0) / (g1 - g0)
    }

    /// Supremum of `|path|` over the grid.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// A field sampled on a product grid, stored row-major in the first index:
/// `value(i, j)` is the field at `(grid_s[i], grid_u[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSheet {
    grid_s: Vec<f64>,
    grid_u: Vec<f64>,
    values: Vec<f64>,
}

impl GaussianSheet {
    /// Assemble a sheet from explicit grids and row-major values.
    pub fn new(grid_s: Vec<f64>, grid_u: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid_s.len() * grid_u.len() {
            return Err(Error::invalid(format!(
                "sheet needs {} x {} values, got {}",
                grid_s.len(),
                grid_u.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sheet values must be finite"));
        }
        Ok(GaussianSheet { grid_s, grid_u, values })
    }

    pub fn grid_s(&self) -> &[f64] {
        &self.grid_s
    }

    pub fn grid_u(&self) -> &[f64] {
        &self.grid_u
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid_u.len() + j]
    }

    /// Supremum of `|field|` over the grid.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Row `i` as a slice over `grid_u`.
    pub fn row(&self, i: usize) -> &[f64] {
        let nu = self.grid_u.len();
        &self.values[i * nu..(i + 1) * nu]
    }
}

/// Check that a grid is strictly increasing from exactly 0 to exactly 1.
pub fn validate_unit_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::domain("grid needs at least the two endpoints"));
    }
    if grid[0] != 0.0 || *grid.last().expect("nonempty") != 1.0 {
        return Err(Error::domain("grid must contain 0 and 1 as endpoints"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    Ok(())
}

/// Equispaced grid of `2^depth` cells (so `2^depth + 1` points).
pub fn dyadic_grid(depth: u32) -> Vec<f64> {
    equispaced_grid(1usize << depth)
}

/// Equispaced grid with `cells >= 1` cells.
pub fn equispaced_grid(cells: usize) -> Vec<f64> {
    (0..=cells).map(|i| i as f64 / cells as f64).collect()
}

/// Wiener process on a unit grid: independent `N(0, du)` increments.
pub fn sample_wiener(grid: &[f64], seed: u64) -> Result<GridPath> {
    sample_wiener_with(grid, &mut rng_from(seed))
}

pub fn sample_wiener_with<R: Rng>(grid: &[f64], rng: &mut R) -> Result<GridPath> {
    validate_unit_grid(grid)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut w = 0.0;
    values.push(0.0);
    for pair in grid.windows(2) {
        let z: f64 = rng.sample(StandardNormal);
        w += (pair[1] - pair[0]).sqrt() * z;
        values.push(w);
    }
    Ok(GridPath { grid: grid.to_vec(), values })
}

/// Brownian bridge `B(u) = W(u) - u W(1)`; exactly 0 at both endpoints.
pub fn sample_bridge(grid: &[f64], seed: u64) -> Result<GridPath> {
    sample_bridge_with(grid, &mut rng_from(seed))
}

pub fn sample_bridge_with<R: Rng>(grid: &[f64], rng: &mut R) -> Result<GridPath> {
    let mut path = sample_wiener_with(grid, rng)?;
    let w1 = *path.values.last().expect("nonempty grid");
    for (u, v) in path.grid.iter().zip(path.values.iter_mut()) {
        *v -= u * w1;
    }
    Ok(path)
}

/// Kiefer sheet over integer first argument `k = 0, ..., k_max`: row 0 is
/// identically zero and each subsequent row adds an independent Brownian
/// bridge, giving covariance `(j ^ k)(u ^ v - u v)`.
pub fn sample_kiefer(k_max: usize, grid_u: &[f64], seed: u64) -> Result<GaussianSheet> {
    if k_max == 0 {
        return Err(Error::invalid("Kiefer sheet needs k_max >= 1"));
    }
    validate_unit_grid(grid_u)?;
    let mut rng = rng_from(seed);
    let nu = grid_u.len();
    let mut values = vec![0.0; (k_max + 1) * nu];
    for k in 1..=k_max {
        let bridge = sample_bridge_with(grid_u, &mut rng)?;
        for j in 0..nu {
            values[k * nu + j] = values[(k - 1) * nu + j] + bridge.values[j];
        }
    }
    Ok(GaussianSheet {
        grid_s: (0..=k_max).map(|k| k as f64).collect(),
        grid_u: grid_u.to_vec(),
        values,
    })
}

/// Tied-down Kiefer sheet `K0(s, u) = K(s, u) - s K(1, u)` on a product of
/// unit grids, built from a Brownian sheet with independent cell increments
/// `N(0, ds du)`.  Vanishes exactly on the boundary of the unit square;
/// covariance `(s ^ s' - s s')(u ^ v - u v)`.
pub fn sample_tied_down_kiefer(
    grid_s: &[f64],
    grid_u: &[f64],
    seed: u64,
) -> Result<GaussianSheet> {
    sample_tied_down_kiefer_with(grid_s, grid_u, &mut rng_from(seed))
}

pub fn sample_tied_down_kiefer_with<R: Rng>(
    grid_s: &[f64],
    grid_u: &[f64],
    rng: &mut R,
) -> Result<GaussianSheet> {
    validate_unit_grid(grid_s)?;
    validate_unit_grid(grid_u)?;
    let ns = grid_s.len();
    let nu = grid_u.len();

    // Brownian sheet by cumulative summation of independent cell increments.
    let mut w = vec![0.0; ns * nu];
    for i in 1..ns {
        let ds = grid_s[i] - grid_s[i - 1];
        for j in 1..nu {
            let du = grid_u[j] - grid_u[j - 1];
            let z: f64 = rng.sample(StandardNormal);
            w[i * nu + j] =
                w[(i - 1) * nu + j] + w[i * nu + j - 1] - w[(i - 1) * nu + j - 1]
                    + (ds * du).sqrt() * z;
        }
    }

    // Tie down in u: K(s, u) = W(s, u) - u W(s, 1).
    let mut k = vec![0.0; ns * nu];
    for i in 0..ns {
        let w_end = w[i * nu + nu - 1];
        for j in 0..nu {
            k[i * nu + j] = w[i * nu + j] - grid_u[j] * w_end;
        }
    }

    // Tie down in s: K0(s, u) = K(s, u) - s K(1, u).
    let mut values = vec![0.0; ns * nu];
    for i in 0..ns {
        let s = grid_s[i];
        for j in 0..nu {
            values[i * nu + j] = k[i * nu + j] - s * k[(ns - 1) * nu + j];
        }
    }

    Ok(GaussianSheet { grid_s: grid_s.to_vec(), grid_u: grid_u.to_vec(), values })
}

/// Multiply a path by its argument: `u B(u)`.  This is the one-sample limit
/// of the integrated empirical process.
pub fn weight_path(path: &GridPath) -> GridPath {
    let values = path
        .grid
        .iter()
        .zip(&path.values)
        .map(|(u, v)| u * v)
        .collect();
    GridPath { grid: path.grid.clone(), values }
}

/// Multiply a sheet by its second argument: `u K0(s, u)`.  This is the
/// change-point limit field.
pub fn weight_sheet(sheet: &GaussianSheet) -> GaussianSheet {
    let nu = sheet.grid_u.len();
    let mut values = sheet.values.clone();
    for i in 0..sheet.grid_s.len() {
        for j in 0..nu {
            values[i * nu + j] *= sheet.grid_u[j];
        }
    }
    GaussianSheet {
        grid_s: sheet.grid_s.clone(),
        grid_u: sheet.grid_u.clone(),
        values,
    }
}

/// Pointwise variance of the weighted bridge: `Var(u B(u)) = u^3 (1 - u)`.
pub fn var_weighted_bridge(u: f64) -> f64 {
    u * u * u * (1.0 - u)
}

/// Maximizer and maximum of `Var(u B(u))` over `[0, 1]`, located
/// numerically: a grid scan brackets the maximum, then bisection on the
/// derivative `3u^2 - 4u^3` polishes it.  (The exact answer is `u = 3/4`
/// with value `27/256`; it is computed rather than hard-coded so the
/// formula and the optimum stay in sync.)
pub fn weighted_bridge_sup_var() -> (f64, f64) {
    let cells = 4096;
    let mut best_i = 0usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=cells {
        let u = i as f64 / cells as f64;
        let v = var_weighted_bridge(u);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let dv = |u: f64| 3.0 * u * u - 4.0 * u * u * u;
    let mut lo = (best_i.saturating_sub(1)) as f64 / cells as f64;
    let mut hi = ((best_i + 1).min(cells)) as f64 / cells as f64;
    debug_assert!(dv(lo) > 0.0 && dv(hi) < 0.0, "derivative must change sign in bracket");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let u_star = 0.5 * (lo + hi);
    (u_star, var_weighted_bridge(u_star))
}

/// The constant in the law of the iterated logarithm for the weighted
/// bridge supremum: `sqrt(2 sup_u Var(u B(u)))`, equal in closed form to
/// `3 sqrt(3) / (8 sqrt(2))`.
pub fn lil_constant() -> f64 {
    let (_, sup_var) = weighted_bridge_sup_var();
    (2.0 * sup_var).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_seed;
    use crate::stats;
    use rayon::prelude::*;

    #[test]
    fn grids_are_validated() {
        assert!(validate_unit_grid(&[0.0, 0.5, 1.0]).is_ok());
        assert!(validate_unit_grid(&[0.1, 0.5, 1.0]).is_err());
        assert!(validate_unit_grid(&[0.0, 0.5, 0.9]).is_err());
        assert!(validate_unit_grid(&[0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(validate_unit_grid(&[0.0]).is_err());
        assert_eq!(dyadic_grid(1), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn bridge_is_pinned_exactly() {
        for seed in 0..50 {
            let b = sample_bridge(&dyadic_grid(5), seed).unwrap();
            assert_eq!(b.values()[0], 0.0);
            assert_eq!(*b.values().last().unwrap(), 0.0);
        }
    }

    #[test]
    fn kiefer_row_zero_is_zero_and_rows_accumulate() {
        let sheet = sample_kiefer(4, &dyadic_grid(4), 3).unwrap();
        assert!(sheet.row(0).iter().all(|v| *v == 0.0));
        // Each row is pinned at u = 0 and u = 1.
        for i in 0..=4 {
            assert_eq!(sheet.value(i, 0), 0.0);
            assert_eq!(sheet.value(i, 16), 0.0);
        }
        assert!(sample_kiefer(0, &dyadic_grid(2), 3).is_err());
    }

    #[test]
    fn tied_down_sheet_vanishes_on_the_whole_boundary() {
        let g = dyadic_grid(4);
        for seed in 0..20 {
            let sheet = sample_tied_down_kiefer(&g, &g, seed).unwrap();
            let last = g.len() - 1;
            for i in 0..g.len() {
                assert_eq!(sheet.value(i, 0), 0.0, "u = 0 edge");
                assert_eq!(sheet.value(i, last), 0.0, "u = 1 edge");
                assert_eq!(sheet.value(0, i), 0.0, "s = 0 edge");
                assert_eq!(sheet.value(last, i), 0.0, "s = 1 edge");
            }
        }
    }

    /// Draw `reps` replicates of a functional of a seeded sampler.
    fn replicate<T: Send, F: Sync + Fn(u64) -> T>(reps: usize, root: u64, f: F) -> Vec<T> {
        (0..reps)
            .into_par_iter()
            .map(|r| f(derive_seed(root, r as u64)))
            .collect()
    }

    #[test]
    fn bridge_covariance_matches_closed_form() {
        let grid = dyadic_grid(3);
        let reps = 6000;
        let paths = replicate(reps, 101, |s| sample_bridge(&grid, s).unwrap());
        for (a, u) in [(2usize, 0.25f64), (4, 0.5), (6, 0.75)] {
            for (b, v) in [(2usize, 0.25f64), (4, 0.5), (6, 0.75)] {
                let xs: Vec<f64> = paths.iter().map(|p| p.values()[a]).collect();
                let ys: Vec<f64> = paths.iter().map(|p| p.values()[b]).collect();
                let (est, se) = stats::cov_zero_mean(&xs, &ys);
                let want = u.min(v) - u * v;
                assert!(
                    (est - want).abs() <= 5.0 * se,
                    "cov B({u}) B({v}): est {est}, want {want}, se {se}"
                );
            }
        }
    }

    #[test]
    fn kiefer_covariance_and_slice_variance() {
        let grid = dyadic_grid(3);
        let reps = 6000;
        let sheets = replicate(reps, 202, |s| sample_kiefer(5, &grid, s).unwrap());
        // Covariance across integer slices: (j ^ k)(u ^ v - uv).
        for ((j, a), (k, b)) in [((2usize, 2usize), (5usize, 4usize)), ((3, 6), (3, 2))] {
            let xs: Vec<f64> = sheets.iter().map(|s| s.value(j, a)).collect();
            let ys: Vec<f64> = sheets.iter().map(|s| s.value(k, b)).collect();
            let (est, se) = stats::cov_zero_mean(&xs, &ys);
            let (u, v) = (grid[a], grid[b]);
            let want = (j.min(k)) as f64 * (u.min(v) - u * v);
            assert!(
                (est - want).abs() <= 5.0 * se,
                "cov K({j},{u}) K({k},{v}): est {est}, want {want}, se {se}"
            );
        }
        // Normalized slice K(k, .)/sqrt(k) has the bridge variance profile.
        let k = 4;
        for (a, u) in [(2usize, 0.25), (4, 0.5), (6, 0.75)] {
            let xs: Vec<f64> = sheets
                .iter()
                .map(|s| s.value(k, a) / (k as f64).sqrt())
                .collect();
            let (est, se) = stats::cov_zero_mean(&xs, &xs);
            let want = u * (1.0 - u);
            assert!((est - want).abs() <= 5.0 * se, "slice var at {u}: {est} vs {want}");
        }
    }

    #[test]
    fn tied_down_covariance_matches_closed_form() {
        let g = equispaced_grid(8);
        let reps = 6000;
        let sheets = replicate(reps, 303, |s| sample_tied_down_kiefer(&g, &g, s).unwrap());
        for ((i, a), (j, b)) in [
            ((2usize, 4usize), (6usize, 4usize)),
            ((4, 2), (4, 6)),
            ((3, 3), (5, 5)),
        ] {
            let xs: Vec<f64> = sheets.iter().map(|s| s.value(i, a)).collect();
            let ys: Vec<f64> = sheets.iter().map(|s| s.value(j, b)).collect();
            let (est, se) = stats::cov_zero_mean(&xs, &ys);
            let (s1, s2, u, v) = (g[i], g[j], g[a], g[b]);
            let want = (s1.min(s2) - s1 * s2) * (u.min(v) - u * v);
            assert!(
                (est - want).abs() <= 5.0 * se,
                "cov K0({s1},{u}) K0({s2},{v}): est {est}, want {want}, se {se}"
            );
        }
    }

    #[test]
    fn weighted_bridge_variance_profile() {
        // Closed form at the optimum.
        assert!((var_weighted_bridge(0.75) - 27.0 / 256.0).abs() < 1e-16);
        // Monte Carlo check of Var(u B(u)) = u^3(1-u) at u = 1/2.
        let grid = dyadic_grid(3);
        let reps = 6000;
        let vals: Vec<f64> = replicate(reps, 404, |s| {
            let wb = weight_path(&sample_bridge(&grid, s).unwrap());
            wb.values()[4]
        });
        let (est, se) = stats::cov_zero_mean(&vals, &vals);
        assert!((est - var_weighted_bridge(0.5)).abs() <= 5.0 * se);
    }

    #[test]
    fn sup_var_optimum_is_located_not_hard_coded() {
        let (u_star, v_star) = weighted_bridge_sup_var();
        assert!((u_star - 0.75).abs() < 1e-12);
        assert!((v_star - 27.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn lil_constant_agrees_with_both_closed_forms() {
        let c = lil_constant();
        let closed = 3.0 * 3.0f64.sqrt() / (8.0 * 2.0f64.sqrt());
        assert!((c - closed).abs() < 1e-14);
        assert!((c - (2.0 * 27.0 / 256.0f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn marginals_are_gaussian_to_third_and_fourth_moment() {
        let grid = vec![0.0, 0.5, 1.0];
        let reps = 10_000;
        let vals: Vec<f64> = replicate(reps, 505, |s| sample_bridge(&grid, s).unwrap().values()[1]);
        let se_skew = (6.0 / reps as f64).sqrt();
        let se_kurt = (24.0 / reps as f64).sqrt();
        assert!(stats::skewness(&vals).abs() <= 5.0 * se_skew);
        assert!((stats::kurtosis(&vals) - 3.0).abs() <= 5.0 * se_kurt);
    }

    #[test]
    fn refining_the_grid_does_not_change_the_law_at_shared_points() {
        // Same marginal at u = 1/2 from a coarse and a refined grid
        // (different seeds; equality in law, checked by two-sample KS).
        let coarse = dyadic_grid(6);
        let fine = dyadic_grid(7);
        let reps = 4000;
        let a: Vec<f64> = replicate(reps, 606, |s| sample_bridge(&coarse, s).unwrap().values()[32]);
        let b: Vec<f64> = replicate(reps, 707, |s| sample_bridge(&fine, s).unwrap().values()[64]);
        let d = stats::ks_distance_two_sample(&a, &b);
        let p = stats::ks_p_value_two_sample(d, reps, reps);
        assert!(p > 0.001, "KS distance {d}, p = {p}");
    }

    #[test]
    fn interpolation_is_exact_at_grid_points_and_linear_between() {
        let path = GridPath::new(vec![0.0, 0.5, 1.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(path.interp(0.5), 2.0);
        assert_eq!(path.interp(0.25), 1.0);
        assert_eq!(path.interp(1.0), 0.0);
        assert_eq!(path.sup_abs(), 2.0);
    }
}
