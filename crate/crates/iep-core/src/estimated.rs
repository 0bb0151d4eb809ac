//! Integrated empirical process with a fitted model parameter.
//!
//! When the hypothesized distribution is a parametric family rather than a
//! single cdf, the integrated empirical d.f. is compared against
//! `F(., theta_hat)^2 / 2` with the parameter estimated from the same data.
//! The centered process is
//!
//! ```text
//! abar_n(t) = sqrt(n) * (IF_n(t) - F(t, theta_hat)^2 / 2).
//! ```
//!
//! Estimating the parameter injects an extra fluctuation, so the Gaussian
//! stand-in is no longer the weighted bridge alone: it becomes
//! `Gbar_n = F * G_n` with
//!
//! ```text
//! G_n(t) = B(F(t, theta0)) - (W(n)/sqrt(n)) * grad F(t, theta0),
//! ```
//!
//! where `B` is a Brownian bridge and `W(n)` integrates the estimator's
//! score transform against the same bridge, making the two terms correlated
//! exactly as the empirical process and the estimator are.  This module
//! provides the family abstraction, the built-in exponential/maximum-
//! likelihood instance, the approximant paths for the true and the fitted
//! parameter, and a coupled Monte Carlo experiment for
//! `sup |abar_n - Gbar_n|`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::coupling::{dyadic_coupled_pair, DepthRule};
use crate::empirical::{ie_value, Sample};
use crate::error::{Error, Result};
use crate::gaussian::{equispaced_grid, sample_bridge_with, validate_unit_grid, GridPath};
use crate::report::{EstimatedReport, RateReport, TestReport};
use crate::seed::{derive_seed, rng_from};

/// Grid resolution used by [`estimated_exp_test`] for its null paths.
pub const DEFAULT_ESTIMATED_GRID_CELLS: usize = 1 << 10;

type Curve = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type ScoreFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Estimator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type SupportTest = Arc<dyn Fn(f64) -> bool + Send + Sync>;

/// A one-parameter family of distributions together with everything the
/// approximants need: cdf and its parameter derivative, quantile, the
/// estimator's influence function `l` and score transform
/// `score(s) = l(quantile(s, theta0))`, the estimator rule itself, and a
/// support test for ingesting data.
///
/// The influence function and score transform are anchored at the family's
/// true parameter `theta0`; the cdf, gradient and quantile take the
/// parameter as an explicit second argument so the same family can be
/// evaluated at a fitted value.
#[derive(Clone)]
pub struct ParametricFamily {
    label: String,
    theta0: f64,
    cdf: Curve,
    grad: Curve,
    quantile: Curve,
    influence: ScoreFn,
    score: ScoreFn,
    estimate: Estimator,
    in_support: SupportTest,
}

impl fmt::Debug for ParametricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricFamily")
            .field("label", &self.label)
            .field("theta0", &self.theta0)
            .finish_non_exhaustive()
    }
}

impl ParametricFamily {
    /// Assemble a family from raw closures.  `cdf`, `grad` and `quantile`
    /// take `(t, theta)`; `influence` takes an observation and `score` a
    /// point of `(0, 1)`, both already anchored at `theta0`.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        label: impl Into<String>,
        theta0: f64,
        cdf: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        quantile: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        influence: impl Fn(f64) -> f64 + Send + Sync + 'static,
        score: impl Fn(f64) -> f64 + Send + Sync + 'static,
        estimate: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        in_support: impl Fn(f64) -> bool + Send + Sync + 'static,
    ) -> Result<Self> {
        if !theta0.is_finite() {
            return Err(Error::invalid("family parameter must be finite"));
        }
        Ok(ParametricFamily {
            label: label.into(),
            theta0,
            cdf: Arc::new(cdf),
            grad: Arc::new(grad),
            quantile: Arc::new(quantile),
            influence: Arc::new(influence),
            score: Arc::new(score),
            estimate: Arc::new(estimate),
            in_support: Arc::new(in_support),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The parameter the family is anchored at (true value under the null).
    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// `F(t, theta)`.
    pub fn cdf(&self, t: f64, theta: f64) -> f64 {
        (self.cdf)(t, theta)
    }

    /// `dF/dtheta (t, theta)`.
    pub fn grad(&self, t: f64, theta: f64) -> f64 {
        (self.grad)(t, theta)
    }

    /// `F^{-1}(u, theta)`.
    pub fn quantile(&self, u: f64, theta: f64) -> f64 {
        (self.quantile)(u, theta)
    }

    /// Influence function of the estimator at `theta0`.
    pub fn influence(&self, x: f64) -> f64 {
        (self.influence)(x)
    }

    /// Score transform `influence(quantile(s, theta0))` for `s` in `(0,1)`.
    pub fn score(&self, s: f64) -> f64 {
        (self.score)(s)
    }

    pub fn in_support(&self, x: f64) -> bool {
        (self.in_support)(x)
    }

    /// Reject any observation outside the family's support.  The error
    /// reports the 1-based position of the first offender, in insertion
    /// order, so a data file can be corrected.
    pub fn check_support(&self, sample: &Sample) -> Result<()> {
        for (i, &x) in sample.observations().iter().enumerate() {
            if !self.in_support(x) {
                return Err(Error::Ingestion {
                    line: i + 1,
                    message: format!("observation {x} outside the {} family support", self.label),
                });
            }
        }
        Ok(())
    }

    /// Estimate the parameter from a sample after validating its support.
    pub fn fit(&self, sample: &Sample) -> Result<f64> {
        self.check_support(sample)?;
        let theta = (self.estimate)(sample.observations());
        if !theta.is_finite() {
            return Err(Error::domain(format!(
                "estimator for the {} family returned {theta}",
                self.label
            )));
        }
        Ok(theta)
    }
}

/// Exponential family `F(t, theta) = 1 - exp(-theta t)` on `t >= 0`, with
/// the rate estimated by maximum likelihood, `theta_hat = 1 / mean`.
///
/// The pieces in closed form:
/// `dF/dtheta = t exp(-theta t)`, `quantile(u) = -ln(1-u)/theta`,
/// `influence(x) = theta0 - theta0^2 x` and
/// `score(s) = theta0 (1 + ln(1-s))`.
pub fn exp_family(theta0: f64) -> Result<ParametricFamily> {
    if !theta0.is_finite() || theta0 <= 0.0 {
        return Err(Error::domain("exponential rate must be positive"));
    }
    ParametricFamily::custom(
        "exp",
        theta0,
        |t, th| if t <= 0.0 { 0.0 } else { -(-th * t).exp_m1() },
        |t, th| {
            if t <= 0.0 {
                return 0.0;
            }
            let e = (-th * t).exp();
            // Once the exponential underflows the product is zero anyway;
            // skipping it keeps t = +inf from producing inf * 0.
            if e == 0.0 {
                0.0
            } else {
                t * e
            }
        },
        |u, th| -f64::ln_1p(-u) / th,
        move |x| theta0 - theta0 * theta0 * x,
        move |s| theta0 * (1.0 + f64::ln_1p(-s)),
        |xs| xs.len() as f64 / xs.iter().sum::<f64>(),
        |x| x.is_finite() && x >= 0.0,
    )
}

/// `abar_n(t) = sqrt(n) (IF_n(t) - F(t, theta_hat)^2 / 2)` with the
/// parameter refitted from the sample.
pub fn estimated_process(sample: &Sample, family: &ParametricFamily, t: f64) -> Result<f64> {
    let theta_hat = family.fit(sample)?;
    Ok(estimated_process_at(sample, family, theta_hat, t))
}

fn estimated_process_at(sample: &Sample, family: &ParametricFamily, theta_hat: f64, t: f64) -> f64 {
    let n = sample.len() as u64;
    let k = sample.count_le(t) as u64;
    let f = family.cdf(t, theta_hat);
    (n as f64).sqrt() * (ie_value(k, n) - 0.5 * f * f)
}

/// Exact supremum of `|abar_n|` over all of `t`, together with the fitted
/// parameter.  The candidates are the at-point and left-limit values at
/// each distinct observation plus the upper-tail limit `1/(2 sqrt n)`;
/// between observations `F^2` is monotone, so nothing larger hides there.
pub fn estimated_sup_statistic(sample: &Sample, family: &ParametricFamily) -> Result<(f64, f64)> {
    let theta_hat = family.fit(sample)?;
    let n = sample.len() as u64;
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    // t -> +inf: IF_n -> (n+1)/(2n) while F^2/2 -> 1/2.
    let mut sup = (ie_value(n, n) - 0.5).abs();
    let mut prev_k = 0u64;
    let sorted = sample.sorted();
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let k = j as u64;
        let half_f2 = 0.5 * family.cdf(x, theta_hat).powi(2);
        sup = sup.max((ie_value(prev_k, n) - half_f2).abs());
        sup = sup.max((ie_value(k, n) - half_f2).abs());
        prev_k = k;
        i = j;
    }
    Ok((sqrt_n * sup, theta_hat))
}

/// Gaussian approximant path on a `u`-grid, assembled for one parameter
/// value: the values of `G_n`, the damped version `Gbar_n = F * G_n`, and
/// the Brownian functional `W(n)` that both share.
#[derive(Debug, Clone)]
pub struct ApproximantPath {
    theta: f64,
    n: u64,
    w: f64,
    grid_u: Vec<f64>,
    grid_t: Vec<f64>,
    g: Vec<f64>,
    gbar: Vec<f64>,
}

impl ApproximantPath {
    /// Parameter plugged into `F` and `grad F`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// The Brownian functional `W(n)`; `G_n` uses `W(n)/sqrt(n)`.
    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn grid_u(&self) -> &[f64] {
        &self.grid_u
    }

    /// Evaluation points in `t`, the `theta0`-quantile image of the grid.
    pub fn grid_t(&self) -> &[f64] {
        &self.grid_t
    }

    /// Values of `G_n` at the grid points.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// Values of `Gbar_n = F(., theta) G_n` at the grid points.
    pub fn gbar(&self) -> &[f64] {
        &self.gbar
    }

    pub fn sup_abs_g(&self) -> f64 {
        self.g.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn sup_abs_gbar(&self) -> f64 {
        self.gbar.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Closed-form variance of the discretized integral
/// `sum_k score(u_k) (B(u_{k+1}) - B(u_k))` over the cells of `grid_u`
/// inside `[trim, 1 - trim]`.  For a Brownian bridge this is
/// `sum a_k^2 du_k - (sum a_k du_k)^2`.
pub fn w_increment_variance(family: &ParametricFamily, grid_u: &[f64], trim: f64) -> f64 {
    let mut sq = 0.0;
    let mut lin = 0.0;
    for k in 0..grid_u.len().saturating_sub(1) {
        if grid_u[k] < trim || grid_u[k + 1] > 1.0 - trim {
            continue;
        }
        let a = family.score(grid_u[k]);
        let du = grid_u[k + 1] - grid_u[k];
        sq += a * a * du;
        lin += a * du;
    }
    sq - lin * lin
}

/// Endpoint trim for the score integral, refined until it stops mattering:
/// starting from `2^-4`, the trim is halved until the closed-form variance
/// of the discretized integral changes by less than 1%.  On a finite grid
/// this always terminates — once the trim passes the first interior grid
/// point the sum no longer changes at all.
pub fn refined_trim(family: &ParametricFamily, grid_u: &[f64]) -> f64 {
    let mut d = 4i32;
    let mut prev = w_increment_variance(family, grid_u, 2f64.powi(-d));
    while d < 60 {
        let trim = 2f64.powi(-(d + 1));
        let next = w_increment_variance(family, grid_u, trim);
        if (next - prev).abs() <= 0.01 * next.abs().max(f64::MIN_POSITIVE) {
            return trim;
        }
        prev = next;
        d += 1;
    }
    2f64.powi(-60)
}

/// Left-point Riemann–Stieltjes sum of the score transform against the
/// bridge over the trimmed grid; this is `W(n)/sqrt(n)`.
fn stieltjes_sum(family: &ParametricFamily, bridge: &GridPath, trim: f64) -> f64 {
    let grid = bridge.grid();
    let b = bridge.values();
    let mut acc = 0.0;
    for k in 0..grid.len() - 1 {
        if grid[k] < trim || grid[k + 1] > 1.0 - trim {
            continue;
        }
        acc += family.score(grid[k]) * (b[k + 1] - b[k]);
    }
    acc
}

fn assemble_approximant(
    family: &ParametricFamily,
    theta: f64,
    n: u64,
    bridge: &GridPath,
) -> ApproximantPath {
    let grid_u = bridge.grid();
    let b = bridge.values();
    let trim = refined_trim(family, grid_u);
    let w_over_sqrt_n = stieltjes_sum(family, bridge, trim);
    let theta0 = family.theta0();
    let mut grid_t = Vec::with_capacity(grid_u.len());
    let mut g = Vec::with_capacity(grid_u.len());
    let mut gbar = Vec::with_capacity(grid_u.len());
    for (j, &u) in grid_u.iter().enumerate() {
        let t = family.quantile(u, theta0);
        // The grid point is its own image under the anchoring parameter by
        // construction, so skip the quantile/cdf float round-trip there.
        let (f, bridge_at) = if theta == theta0 {
            (u, b[j])
        } else {
            let f = family.cdf(t, theta);
            (f, bridge.interp(f))
        };
        let gj = bridge_at - w_over_sqrt_n * family.grad(t, theta);
        grid_t.push(t);
        g.push(gj);
        gbar.push(f * gj);
    }
    ApproximantPath {
        theta,
        n,
        w: (n as f64).sqrt() * w_over_sqrt_n,
        grid_u: grid_u.to_vec(),
        grid_t,
        g,
        gbar,
    }
}

/// Approximant at the family's own parameter: `G_n` built from a fresh
/// Brownian bridge on `grid_u` and the score integral `W(n)` it drives.
pub fn gbar_path(
    family: &ParametricFamily,
    n: u64,
    grid_u: &[f64],
    seed: u64,
) -> Result<ApproximantPath> {
    if n == 0 {
        return Err(Error::invalid("approximant needs n >= 1"));
    }
    validate_unit_grid(grid_u)?;
    let mut rng = rng_from(seed);
    let bridge = sample_bridge_with(grid_u, &mut rng)?;
    Ok(assemble_approximant(family, family.theta0(), n, &bridge))
}

/// Approximant with a fitted parameter plugged into `F` and `grad F`.  The
/// underlying bridge and `W(n)` are drawn exactly as in [`gbar_path`], so
/// calling both with the same seed yields the coupled pair
/// `(G_n, Ghat_n)`; with `theta_hat == theta0` the two paths coincide
/// bitwise.
pub fn ghat_path(
    family: &ParametricFamily,
    theta_hat: f64,
    n: u64,
    grid_u: &[f64],
    seed: u64,
) -> Result<ApproximantPath> {
    if n == 0 {
        return Err(Error::invalid("approximant needs n >= 1"));
    }
    if !theta_hat.is_finite() {
        return Err(Error::invalid("fitted parameter must be finite"));
    }
    validate_unit_grid(grid_u)?;
    let mut rng = rng_from(seed);
    let bridge = sample_bridge_with(grid_u, &mut rng)?;
    Ok(assemble_approximant(family, theta_hat, n, &bridge))
}

fn require_same_grid(a: &ApproximantPath, b: &ApproximantPath) -> Result<()> {
    if a.grid_u != b.grid_u || a.n != b.n {
        return Err(Error::invalid(
            "approximant paths must share a grid and sample size",
        ));
    }
    Ok(())
}

/// `sup_j |G_a(t_j) - G_b(t_j)|` over the shared grid.
pub fn sup_g_distance(a: &ApproximantPath, b: &ApproximantPath) -> Result<f64> {
    require_same_grid(a, b)?;
    Ok(a.g
        .iter()
        .zip(&b.g)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

/// `sup_j |Gbar_a(t_j) - Gbar_b(t_j)|` over the shared grid.
pub fn sup_gbar_distance(a: &ApproximantPath, b: &ApproximantPath) -> Result<f64> {
    require_same_grid(a, b)?;
    Ok(a.gbar
        .iter()
        .zip(&b.gbar)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

/// One coupled replicate of `sup_t |abar_n(t) - Gbar_n(t)|`.
///
/// The sample and the approximant share their randomness through the
/// dyadic coupling: the bridge refined to `depth_for(n)` drives both the
/// binomial counts (hence the sample, pushed through the family's
/// quantile) and `G_n`.  The supremum is evaluated at the grid boundaries,
/// the same convention the coupling distances use.
pub fn epsilon_bar_replicate(
    family: &ParametricFamily,
    n: usize,
    rule: DepthRule,
    seed: u64,
) -> Result<f64> {
    let pair = dyadic_coupled_pair(n, rule.depth_for(n), seed)?;
    let theta0 = family.theta0();
    let xs: Vec<f64> = pair
        .uniforms()
        .observations()
        .iter()
        .map(|&u| family.quantile(u, theta0))
        .collect();
    let sample = Sample::new(xs)?;
    let theta_hat = family.fit(&sample)?;
    let path = assemble_approximant(family, theta0, n as u64, pair.bridge());
    let nu = n as u64;
    let sqrt_n = (n as f64).sqrt();
    let mut sup = 0.0f64;
    for (j, (&u, &t)) in path.grid_u.iter().zip(path.grid_t.iter()).enumerate() {
        let k = sample.count_le(t) as u64;
        let f = if theta_hat == theta0 {
            u
        } else {
            family.cdf(t, theta_hat)
        };
        let abar = sqrt_n * (ie_value(k, nu) - 0.5 * f * f);
        sup = sup.max((abar - path.gbar[j]).abs());
    }
    Ok(sup)
}

/// Median of the coupled distance `sup |abar_n - Gbar_n|` across sample
/// sizes.  No rate is attached to the decay, so the normalized column
/// just repeats the median.
pub fn epsilon_bar_experiment(
    family: &ParametricFamily,
    n_list: &[usize],
    reps: usize,
    seed: u64,
) -> Result<RateReport> {
    if n_list.is_empty() || reps == 0 {
        return Err(Error::invalid("rate experiment needs sizes and replicates"));
    }
    let mut report = RateReport {
        experiment: format!("epsilon_bar_{}", family.label()),
        normalization: "none".to_string(),
        reps,
        seed,
        rows: Vec::new(),
    };
    for (i, &n) in n_list.iter().enumerate() {
        let mut values: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let s = derive_seed(seed, (i * reps + r) as u64);
                epsilon_bar_replicate(family, n, DepthRule::Log2Ceil, s)
            })
            .collect::<Result<_>>()?;
        report.push_row(n, &mut values, |m| m);
    }
    Ok(report)
}

/// Null distribution of `sup |Gbar_n|` for a family anchored at a fitted
/// parameter, sorted ascending.
pub fn simulate_estimated_null(
    family: &ParametricFamily,
    n: u64,
    grid_cells: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if grid_cells < 2 {
        return Err(Error::invalid("null simulation needs at least 2 grid cells"));
    }
    if reps == 0 {
        return Err(Error::invalid("null simulation needs at least 1 replicate"));
    }
    let grid = equispaced_grid(grid_cells);
    let mut values: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let path = gbar_path(family, n, &grid, derive_seed(seed, r as u64))?;
            Ok(path.sup_abs_gbar())
        })
        .collect::<Result<_>>()?;
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite sups"));
    Ok(values)
}

/// Goodness-of-fit test against the exponential family with the rate
/// fitted by maximum likelihood.  The observed statistic is the exact
/// `sup |abar_n|`; the reference distribution is `sup |Gbar_n|` simulated
/// with the family re-anchored at the fitted rate, which is the plug-in
/// version of the approximant a practitioner can actually draw.
pub fn estimated_exp_test(sample: &Sample, reps: usize, seed: u64) -> Result<EstimatedReport> {
    let anchored = exp_family(fit_exp_rate(sample)?)?;
    let null = simulate_estimated_null(
        &anchored,
        sample.len() as u64,
        DEFAULT_ESTIMATED_GRID_CELLS,
        reps,
        seed,
    )?;
    estimated_exp_test_with_null(sample, &null, seed)
}

/// Maximum-likelihood rate of the exponential family (the reciprocal of
/// the sample mean), with support and degeneracy checks.
pub fn fit_exp_rate(sample: &Sample) -> Result<f64> {
    let probe = exp_family(1.0)?;
    let theta_hat = probe.fit(sample)?;
    if theta_hat <= 0.0 {
        return Err(Error::domain(
            "fitted exponential rate must be positive; is the data degenerate?",
        ));
    }
    Ok(theta_hat)
}

/// Same as [`estimated_exp_test`] but reusing an existing **sorted** null
/// table (e.g. loaded from a cache).  The table must have been simulated
/// from the family anchored at this sample's fitted rate, at this sample
/// size — the fitted rate enters the null law, so a cache key must cover
/// both.
pub fn estimated_exp_test_with_null(
    sample: &Sample,
    sorted_null: &[f64],
    seed: u64,
) -> Result<EstimatedReport> {
    if sorted_null.is_empty() {
        return Err(Error::invalid("null table is empty"));
    }
    let theta_hat = fit_exp_rate(sample)?;
    let anchored = exp_family(theta_hat)?;
    let (value, _) = estimated_sup_statistic(sample, &anchored)?;
    let report =
        TestReport::from_null_table("estimated_sup", value, sorted_null, vec![sample.len()], seed);
    Ok(EstimatedReport {
        family: "exp".to_string(),
        theta_hat,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::replicate_distances;
    use crate::model::DistributionModel;
    use crate::stats::{mean, variance};

    fn zero_influence_family(theta0: f64) -> ParametricFamily {
        ParametricFamily::custom(
            "exp_zero_influence",
            theta0,
            |t, th| if t <= 0.0 { 0.0 } else { -(-th * t).exp_m1() },
            |t, th| {
                if t <= 0.0 {
                    return 0.0;
                }
                let e = (-th * t).exp();
                if e == 0.0 {
                    0.0
                } else {
                    t * e
                }
            },
            |u, th| -f64::ln_1p(-u) / th,
            |_| 0.0,
            |_| 0.0,
            move |_| theta0,
            |x| x.is_finite() && x >= 0.0,
        )
        .unwrap()
    }

    #[test]
    fn exp_family_validates_and_evaluates() {
        assert!(exp_family(0.0).is_err());
        assert!(exp_family(-1.0).is_err());
        assert!(exp_family(f64::NAN).is_err());
        let f = exp_family(2.0).unwrap();
        assert_eq!(f.theta0(), 2.0);
        assert!((f.cdf(1.0, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(f.cdf(-3.0, 1.0), 0.0);
        assert_eq!(f.cdf(f64::INFINITY, 2.0), 1.0);
        // Quantile round-trip and the gradient guard at the right edge.
        let u = 0.37;
        assert!((f.cdf(f.quantile(u, 2.0), 2.0) - u).abs() < 1e-14);
        assert_eq!(f.quantile(0.0, 2.0), 0.0);
        assert_eq!(f.grad(f64::INFINITY, 2.0), 0.0);
        assert!(!f.in_support(-0.1));
        assert!(f.in_support(0.0));
    }

    #[test]
    fn influence_mean_and_information_match_moments() {
        let theta0 = 1.7;
        let f = exp_family(theta0).unwrap();
        let model = DistributionModel::Exponential { theta: theta0 };
        let xs = model.sample(10_000, 01_7114).unwrap();
        let ls: Vec<f64> = xs.iter().map(|&x| f.influence(x)).collect();
        let m = mean(&ls);
        let v = variance(&ls);
        let se_mean = (v / ls.len() as f64).sqrt();
        // The estimator's influence function is centered under the family.
        assert!(m.abs() < 4.0 * se_mean, "mean {m} vs se {se_mean}");
        // Its second moment is the information theta0^2.
        let centered_sq: Vec<f64> = ls.iter().map(|&l| (l - m) * (l - m)).collect();
        let se_var = (variance(&centered_sq) / ls.len() as f64).sqrt();
        assert!(
            (v - theta0 * theta0).abs() < 4.0 * se_var,
            "var {v} vs {} (se {se_var})",
            theta0 * theta0
        );
    }

    #[test]
    fn gradient_sup_and_score_derivative_bound() {
        let theta0 = 1.3;
        let f = exp_family(theta0).unwrap();
        let bound = 1.0 / (theta0 * std::f64::consts::E);
        let mut sup = 0.0f64;
        for i in 0..=4000 {
            let t = i as f64 * 0.005;
            sup = sup.max(f.grad(t, theta0));
        }
        assert!(sup <= bound + 1e-12);
        // The maximizer 1/theta0 lies on this grid only approximately, but
        // the peak is quadratic, so the sup is within O(step^2) of it.
        assert!(bound - sup < 1e-4);
        // (1-s)|d score/ds| is the constant theta0.
        let h = 1e-6;
        for s in [0.05, 0.2, 0.5, 0.8, 0.95, 0.99] {
            let deriv = (f.score(s + h) - f.score(s - h)) / (2.0 * h);
            let val = (1.0 - s) * deriv.abs();
            assert!((val - theta0).abs() < 1e-5 * theta0, "s={s} val={val}");
        }
    }

    #[test]
    fn score_tail_conditions_decay_monotonically() {
        let f = exp_family(1.0).unwrap();
        let weighted = |s: f64| {
            let side = s.min(1.0 - s);
            (side * (1.0 / side).ln().ln()).sqrt() * f.score(s).abs()
        };
        let mut prev_low = f64::INFINITY;
        let mut prev_high = f64::INFINITY;
        for j in 8..=28 {
            let eps = 2f64.powi(-j);
            let low = weighted(eps);
            let high = weighted(1.0 - eps);
            assert!(low < prev_low, "lower tail grew at j={j}");
            assert!(high < prev_high, "upper tail grew at j={j}");
            prev_low = low;
            prev_high = high;
        }
        assert!(prev_low < 1e-3);
        assert!(prev_high < 5e-2);
    }

    #[test]
    fn estimated_process_hand_values_and_decomposition() {
        let f = exp_family(1.0).unwrap();
        // A single observation at 1 fits theta_hat = 1, so at t = 1 the
        // process is 1 - (1 - 1/e)^2 / 2.
        let one = Sample::new(vec![1.0]).unwrap();
        let expected = 1.0 - 0.5 * (1.0 - (-1.0f64).exp()).powi(2);
        assert!((estimated_process(&one, &f, 1.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.8002117995531359).abs() < 1e-15);
        assert_eq!(estimated_process(&one, &f, 0.0).unwrap(), 0.0);

        // The process splits into a damped estimated empirical process, a
        // quadratic remainder and the edf correction, exactly.
        let model = DistributionModel::Exponential { theta: 1.0 };
        let sample = Sample::new(model.sample(200, 42).unwrap()).unwrap();
        let theta_hat = f.fit(&sample).unwrap();
        let n = sample.len() as f64;
        let sqrt_n = n.sqrt();
        let mut ts: Vec<f64> = sample.observations().to_vec();
        ts.extend([0.0, 0.01, 0.5, 1.0, 2.5, 7.0, 1e6]);
        for t in ts {
            let lhs = estimated_process_at(&sample, &f, theta_hat, t);
            let edf = sample.count_le(t) as f64 / n;
            let fhat = f.cdf(t, theta_hat);
            let alpha_hat = sqrt_n * (edf - fhat);
            let rhs = fhat * alpha_hat
                + alpha_hat * alpha_hat / (2.0 * sqrt_n)
                + edf / (2.0 * sqrt_n);
            assert!((lhs - rhs).abs() < 1e-12, "t={t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn support_violation_is_an_ingestion_error() {
        let f = exp_family(1.0).unwrap();
        let bad = Sample::new(vec![0.5, -0.2, 1.0]).unwrap();
        match estimated_process(&bad, &f, 1.0) {
            Err(Error::Ingestion { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn zero_influence_family_reduces_g_to_the_bridge() {
        let zf = zero_influence_family(1.0);
        let grid = equispaced_grid(64);
        let seed = 9001;
        let path = gbar_path(&zf, 50, &grid, seed).unwrap();
        let mut rng = rng_from(seed);
        let bridge = sample_bridge_with(&grid, &mut rng).unwrap();
        assert_eq!(path.w(), 0.0);
        for (gj, bj) in path.g().iter().zip(bridge.values()) {
            assert_eq!(gj, bj);
        }
        // Gbar vanishes where F does.
        assert_eq!(path.gbar()[0], 0.0);
        assert_eq!(*path.gbar().last().unwrap(), 0.0);
    }

    #[test]
    fn w_variance_matches_closed_form_and_information() {
        let theta0 = 1.0;
        let f = exp_family(theta0).unwrap();
        let grid = crate::gaussian::dyadic_grid(13);
        let trim = refined_trim(&f, &grid);
        let closed = w_increment_variance(&f, &grid, trim);
        // Trimming and the left-point rule shave only a little off the
        // information.
        assert!((closed - theta0 * theta0).abs() < 0.02 * theta0 * theta0);
        let reps = 10_000;
        let ws: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_from(derive_seed(31_337, r as u64));
                let bridge = sample_bridge_with(&grid, &mut rng).unwrap();
                stieltjes_sum(&f, &bridge, trim)
            })
            .collect();
        let v = variance(&ws);
        let se = v * (2.0 / reps as f64).sqrt();
        assert!((v - closed).abs() < 4.0 * se, "mc {v} vs closed {closed}");
        assert!(
            (v - theta0 * theta0).abs() < 4.0 * se + 0.02 * theta0 * theta0,
            "mc {v} vs information {}",
            theta0 * theta0
        );
    }

    #[test]
    fn true_parameter_makes_ghat_equal_gbar() {
        let f = exp_family(0.7).unwrap();
        let grid = equispaced_grid(256);
        let a = gbar_path(&f, 300, &grid, 5).unwrap();
        let b = ghat_path(&f, 0.7, 300, &grid, 5).unwrap();
        assert_eq!(sup_g_distance(&a, &b).unwrap(), 0.0);
        assert_eq!(sup_gbar_distance(&a, &b).unwrap(), 0.0);
        assert_eq!(a.w(), b.w());
        // Mismatched grids are rejected rather than silently compared.
        let c = ghat_path(&f, 0.7, 300, &equispaced_grid(128), 5).unwrap();
        assert!(sup_g_distance(&a, &c).is_err());
    }

    #[test]
    fn ghat_gbar_distance_shrinks_and_triangle_bound_holds() {
        let theta0 = 1.0;
        let f = exp_family(theta0).unwrap();
        let model = DistributionModel::Exponential { theta: theta0 };
        let grid = equispaced_grid(512);
        let mut medians = Vec::new();
        for (i, &n) in [200usize, 800, 3200].iter().enumerate() {
            let mut dists = Vec::new();
            for r in 0..60 {
                let seed = derive_seed(777, (i * 60 + r) as u64);
                let xs = model.sample(n, derive_seed(seed, 0)).unwrap();
                let sample = Sample::new(xs).unwrap();
                let theta_hat = f.fit(&sample).unwrap();
                let path_seed = derive_seed(seed, 1);
                let gbar = gbar_path(&f, n as u64, &grid, path_seed).unwrap();
                let ghat = ghat_path(&f, theta_hat, n as u64, &grid, path_seed).unwrap();
                let dg = sup_g_distance(&gbar, &ghat).unwrap();
                let dgbar = sup_gbar_distance(&gbar, &ghat).unwrap();
                // |Gbar_hat - Gbar| <= |Ghat - G| + sup|F_hat - F| sup|G|,
                // realization by realization.
                let sup_df = gbar
                    .grid_t()
                    .iter()
                    .zip(gbar.grid_u())
                    .fold(0.0f64, |m, (&t, &u)| {
                        m.max((f.cdf(t, theta_hat) - u).abs())
                    });
                assert!(
                    dgbar <= dg + sup_df * gbar.sup_abs_g() + 1e-9,
                    "triangle bound violated at n={n}"
                );
                dists.push(dg);
            }
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(crate::stats::median_sorted(&dists));
        }
        assert!(
            medians[0] > medians[1] && medians[1] > medians[2],
            "medians {medians:?}"
        );
    }

    #[test]
    fn zero_influence_epsilon_matches_coupling_distance() {
        let zf = zero_influence_family(1.0);
        for seed in 0..5 {
            let eps = epsilon_bar_replicate(&zf, 256, DepthRule::Log2Ceil, seed).unwrap();
            let (_, d_int) = replicate_distances(256, DepthRule::Log2Ceil, seed).unwrap();
            assert!(
                (eps - d_int).abs() < 1e-12,
                "seed {seed}: {eps} vs {d_int}"
            );
        }
    }

    #[test]
    fn epsilon_bar_medians_decrease() {
        let f = exp_family(1.0).unwrap();
        let report = epsilon_bar_experiment(&f, &[200, 800, 3200], 60, 2024).unwrap();
        let med: Vec<f64> = report.rows.iter().map(|r| r.median).collect();
        assert!(med[0] > med[1] && med[1] > med[2], "medians {med:?}");
        let again = epsilon_bar_experiment(&f, &[200, 800, 3200], 60, 2024).unwrap();
        for (a, b) in report.rows.iter().zip(&again.rows) {
            assert_eq!(a.median, b.median);
            assert_eq!(a.q25, b.q25);
            assert_eq!(a.q75, b.q75);
        }
        assert!(epsilon_bar_experiment(&f, &[], 60, 0).is_err());
        assert!(epsilon_bar_experiment(&f, &[100], 0, 0).is_err());
    }

    #[test]
    fn estimated_exp_test_reports() {
        let model = DistributionModel::Exponential { theta: 2.0 };
        let sample = Sample::new(model.sample(50, 11).unwrap()).unwrap();
        let out = estimated_exp_test(&sample, 400, 99).unwrap();
        assert_eq!(out.family, "exp");
        assert!(out.theta_hat > 0.5 && out.theta_hat < 8.0);
        assert_eq!(out.report.statistic, "estimated_sup");
        assert!(out.report.p_value > 0.0 && out.report.p_value <= 1.0);
        assert!(out.report.low_reps_warning);
        let again = estimated_exp_test(&sample, 400, 99).unwrap();
        assert_eq!(out.report.value, again.report.value);
        assert_eq!(out.report.p_value, again.report.p_value);
    }
}
