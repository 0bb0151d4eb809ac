//! Hypothesized distributions: cdf / quantile / density triples used as the
//! null `F_0` in tests and as sampling distributions in experiments.
//!
//! Quantiles follow the generalized-inverse convention
//! `Q(p) = inf { x : F(x) >= p }` for `p` in `(0, 1)`, extended to the
//! endpoints by their limits, so `Q(0)` / `Q(1)` may be `-inf` / `+inf` for
//! unbounded supports.  Downstream statistics only ever evaluate cdfs at
//! observation points, so those infinities never enter arithmetic.

use crate::error::{Error, Result};
use crate::seed::rng_from;
use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// A continuous distribution model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DistributionModel {
    /// Uniform on `[0, 1]`.
    Uniform,
    /// Normal with mean `mu` and standard deviation `sigma > 0`.
    Normal { mu: f64, sigma: f64 },
    /// Exponential with rate `theta > 0`: `F(t) = 1 - exp(-theta t)`.
    Exponential { theta: f64 },
    /// Piecewise-linear cdf through user-supplied knots.
    PiecewiseLinear(PiecewiseCdf),
}

/// Knots of a piecewise-linear cdf: strictly increasing abscissae `xs` with
/// nondecreasing levels `ps`, starting at 0 and ending at 1.  Repeated
/// levels produce flat regions; the quantile of a flat level is the left
/// endpoint of the region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCdf {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl PiecewiseCdf {
    pub fn new(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        if xs.len() != ps.len() || xs.len() < 2 {
            return Err(Error::invalid(
                "piecewise cdf needs at least two (x, p) knots of equal length",
            ));
        }
        if xs.iter().any(|x| !x.is_finite()) || ps.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("piecewise cdf knots must be finite"));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("piecewise cdf abscissae must be strictly increasing"));
        }
        if ps.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("piecewise cdf levels must be nondecreasing"));
        }
        if ps[0] != 0.0 || *ps.last().expect("nonempty") != 1.0 {
            return Err(Error::invalid("piecewise cdf levels must run from 0 to 1"));
        }
        Ok(PiecewiseCdf { xs, ps })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ps)
    }

    fn cdf(&self, t: f64) -> f64 {
        if t <= self.xs[0] {
            return if t == self.xs[0] { self.ps[0] } else { 0.0 };
        }
        if t >= *self.xs.last().expect("nonempty") {
            return 1.0;
        }
        // Last knot index with xs[i] <= t; t is interior so 0 <= i < len-1.
        let i = self.xs.partition_point(|x| *x <= t) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (p0, p1) = (self.ps[i], self.ps[i + 1]);
        p0 + (p1 - p0) * (t - x0) / (x1 - x0)
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.xs[0];
        }
        if p >= 1.0 {
            // Left endpoint of the terminal flat region, if any.
            let j = self.ps.partition_point(|q| *q < 1.0);
            return self.xs[j];
        }
        // First knot index with ps[j] >= p.
        let j = self.ps.partition_point(|q| *q < p);
        if self.ps[j] == p {
            return self.xs[j];
        }
        // p lies strictly inside the segment (j-1, j); ps[j-1] < p < ps[j]
        // implies the segment is not flat.
        let (x0, x1) = (self.xs[j - 1], self.xs[j]);
        let (p0, p1) = (self.ps[j - 1], self.ps[j]);
        x0 + (x1 - x0) * (p - p0) / (p1 - p0)
    }

    fn density(&self, t: f64) -> f64 {
        if t < self.xs[0] || t > *self.xs.last().expect("nonempty") {
            return 0.0;
        }
        let i = (self.xs.partition_point(|x| *x <= t)).clamp(1, self.xs.len() - 1) - 1;
        (self.ps[i + 1] - self.ps[i]) / (self.xs[i + 1] - self.xs[i])
    }
}

impl DistributionModel {
    pub fn uniform() -> Self {
        DistributionModel::Uniform
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::invalid(format!(
                "normal model needs finite mu and sigma > 0, got mu={mu}, sigma={sigma}"
            )));
        }
        Ok(DistributionModel::Normal { mu, sigma })
    }

    pub fn exponential(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta <= 0.0 {
            return Err(Error::invalid(format!(
                "exponential model needs rate theta > 0, got {theta}"
            )));
        }
        Ok(DistributionModel::Exponential { theta })
    }

    pub fn piecewise(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self> {
        Ok(DistributionModel::PiecewiseLinear(PiecewiseCdf::new(xs, ps)?))
    }

    /// Distribution function `F(t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            DistributionModel::Uniform => t.clamp(0.0, 1.0),
            DistributionModel::Normal { mu, sigma } => {
                Normal::new(*mu, *sigma).expect("validated at construction").cdf(t)
            }
            DistributionModel::Exponential { theta } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(-theta * t).exp_m1()
                }
            }
            DistributionModel::PiecewiseLinear(pw) => pw.cdf(t),
        }
    }

    /// Generalized inverse `Q(p) = inf { x : F(x) >= p }`, extended to
    /// `p = 0, 1` by limits (possibly infinite).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("quantile level {p} outside [0, 1]")));
        }
        Ok(match self {
            DistributionModel::Uniform => p,
            DistributionModel::Normal { mu, sigma } => {
                if p == 0.0 {
                    f64::NEG_INFINITY
                } else if p == 1.0 {
                    f64::INFINITY
                } else {
                    Normal::new(*mu, *sigma).expect("validated at construction").inverse_cdf(p)
                }
            }
            DistributionModel::Exponential { theta } => {
                if p == 1.0 {
                    f64::INFINITY
                } else {
                    -(-p).ln_1p() / theta
                }
            }
            DistributionModel::PiecewiseLinear(pw) => pw.quantile(p),
        })
    }

    /// Density `f(t)` (piecewise constant for the piecewise-linear model).
    pub fn density(&self, t: f64) -> f64 {
        match self {
            DistributionModel::Uniform => {
                if (0.0..=1.0).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionModel::Normal { mu, sigma } => {
                let z = (t - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            DistributionModel::Exponential { theta } => {
                if t < 0.0 {
                    0.0
                } else {
                    theta * (-theta * t).exp()
                }
            }
            DistributionModel::PiecewiseLinear(pw) => pw.density(t),
        }
    }

    /// Draw `n` observations by inverse transform of open-interval uniforms.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let mut rng = rng_from(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                self.quantile(u)
            })
            .collect()
    }

    /// Short display name used in configs and reports.
    pub fn label(&self) -> String {
        match self {
            DistributionModel::Uniform => "uniform".to_string(),
            DistributionModel::Normal { mu, sigma } => format!("normal({mu},{sigma})"),
            DistributionModel::Exponential { theta } => format!("exp({theta})"),
            DistributionModel::PiecewiseLinear(pw) => {
                format!("piecewise({} knots)", pw.xs.len())
            }
        }
    }
}
