//! Empirical and integrated empirical distribution functions and processes.
//!
//! For a sample `X_1, ..., X_n` with empirical d.f. `F_n`, the integrated
//! empirical d.f. is
//!
//! ```text
//! IF_n(t) = (1/2) (F_n(t)^2 + F_n(t)/n),
//! ```
//!
//! i.e. the running Stieltjes integral of `F_n` against itself, which counts
//! index pairs: with `k = n F_n(t)`, `IF_n(t) = C(k+1, 2) / n^2`
//! ([`integrated_edf_by_counting`] evaluates exactly that as a rational and
//! is the oracle for [`integrated_edf`]).  The centered, rescaled versions
//! are the empirical process `alpha_n = sqrt(n) (F_n - F)` and the
//! integrated empirical process `ialpha_n = sqrt(n) (IF_n - F^2/2)`, tied
//! together by the exact algebraic decomposition
//!
//! ```text
//! ialpha_n = F alpha_n + alpha_n^2 / (2 sqrt(n)) + F_n / (2 sqrt(n)).
//! ```

use crate::error::{Error, Result};
use crate::model::DistributionModel;
use crate::seed::derive_seed;
use num_rational::Ratio;
use rayon::prelude::*;
use std::io::BufRead;

/// An observed sample.  Keeps both insertion order (sequential statistics
/// depend on it) and a sorted copy (everything else does).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    obs: Vec<f64>,
    sorted: Vec<f64>,
}

impl Sample {
    /// Build a sample, rejecting empty input and non-finite values.
    pub fn new(obs: Vec<f64>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(bad) = obs.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite observation {bad}")));
        }
        let mut sorted = obs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        Ok(Sample { obs, sorted })
    }

    /// Observations in insertion order.
    pub fn observations(&self) -> &[f64] {
        &self.obs
    }

    /// Observations in nondecreasing order.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty samples
    }

    /// Number of observations `<= t`.
    pub fn count_le(&self, t: f64) -> usize {
        self.sorted.partition_point(|x| *x <= t)
    }

    /// Number of observations `< t`.
    pub fn count_lt(&self, t: f64) -> usize {
        self.sorted.partition_point(|x| *x < t)
    }

    /// Sub-sample of the first `k` observations in insertion order.
    pub fn head(&self, k: usize) -> Result<Sample> {
        Sample::new(self.obs[..k].to_vec())
    }

    /// Sub-sample of everything after the first `k` observations.
    pub fn tail(&self, k: usize) -> Result<Sample> {
        Sample::new(self.obs[k..].to_vec())
    }
}

/// Read one observation per line.  Lines starting with `#` are skipped;
/// empty lines and unparseable or non-finite numbers are ingestion errors
/// carrying the 1-based line number.
pub fn read_observations<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Ingestion {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        if trimmed.is_empty() {
            return Err(Error::Ingestion {
                line: idx + 1,
                message: "empty line".to_string(),
            });
        }
        let value: f64 = trimmed.parse().map_err(|_| Error::Ingestion {
            line: idx + 1,
            message: format!("cannot parse '{trimmed}' as a number"),
        })?;
        if !value.is_finite() {
            return Err(Error::Ingestion {
                line: idx + 1,
                message: format!("non-finite value {value}"),
            });
        }
        out.push(value);
    }
    Ok(out)
}

/// A right-continuous step function: `eval(t)` is `values[i]` for the last
/// knot `knots[i] <= t`, and `tail` left of every knot.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    tail: f64,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, tail: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::invalid("knots and values must have equal length"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("step function knots must be strictly increasing"));
        }
        Ok(StepFunction { knots, values, tail })
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.knots.partition_point(|k| *k <= t) {
            0 => self.tail,
            i => self.values[i - 1],
        }
    }

    /// Left limit `f(t-)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        match self.knots.partition_point(|k| *k < t) {
            0 => self.tail,
            i => self.values[i - 1],
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Integrated empirical d.f. value from a count: `k (k+1) / (2 n^2)`.
/// One shared routine so every code path produces bit-identical values.
pub(crate) fn ie_value(k: u64, n: u64) -> f64 {
    (k * (k + 1)) as f64 / (2 * n * n) as f64
}

/// Empirical distribution function as a step function.  Tied observations
/// aggregate into a single knot carrying the full jump.
pub fn edf(sample: &Sample) -> StepFunction {
    let n = sample.len() as f64;
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let sorted = sample.sorted();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        knots.push(sorted[i]);
        values.push(j as f64 / n);
        i = j;
    }
    StepFunction { knots, values, tail: 0.0 }
}

/// Integrated empirical distribution function
/// `IF_n(t) = (1/2)(F_n(t)^2 + F_n(t)/n)`, a step function with the same
/// knots as [`edf`].
pub fn integrated_edf(sample: &Sample) -> StepFunction {
    let n = sample.len() as u64;
    let e = edf(sample);
    let values = e
        .knots
        .iter()
        .map(|t| ie_value(sample.count_le(*t) as u64, n))
        .collect();
    StepFunction { knots: e.knots, values, tail: 0.0 }
}

/// Exact rational value of the integrated empirical d.f. at `t`, evaluated
/// by the pair-counting identity `C(k+1, 2) / n^2` with `k = n F_n(t)`.
/// This is the oracle [`integrated_edf`] is tested against.
pub fn integrated_edf_by_counting(sample: &Sample, t: f64) -> Ratio<u64> {
    let n = sample.len() as u64;
    let k = sample.count_le(t) as u64;
    Ratio::new(k * (k + 1) / 2, n * n)
}

/// Empirical process `alpha_n(t) = sqrt(n) (F_n(t) - F(t))`.
pub fn empirical_process(sample: &Sample, model: &DistributionModel, t: f64) -> f64 {
    let n = sample.len() as f64;
    n.sqrt() * (sample.count_le(t) as f64 / n - model.cdf(t))
}

/// Integrated empirical process
/// `ialpha_n(t) = sqrt(n) (IF_n(t) - F(t)^2 / 2)`.
pub fn integrated_empirical_process(sample: &Sample, model: &DistributionModel, t: f64) -> f64 {
    let n = sample.len() as u64;
    let k = sample.count_le(t) as u64;
    let f = model.cdf(t);
    (n as f64).sqrt() * (ie_value(k, n) - f * f / 2.0)
}

/// The three terms of the decomposition
/// `ialpha_n = F alpha_n + alpha_n^2/(2 sqrt n) + F_n/(2 sqrt n)`,
/// returned in that order.  Their sum reproduces
/// [`integrated_empirical_process`] up to floating-point rounding.
pub fn hn_decomposition(
    sample: &Sample,
    model: &DistributionModel,
    t: f64,
) -> (f64, f64, f64) {
    let n = sample.len() as f64;
    let fn_t = sample.count_le(t) as f64 / n;
    let f = model.cdf(t);
    let alpha = n.sqrt() * (fn_t - f);
    (
        f * alpha,
        alpha * alpha / (2.0 * n.sqrt()),
        fn_t / (2.0 * n.sqrt()),
    )
}

/// Exact Kolmogorov-Smirnov distance `sup_t |F_n(t) - F(t)|` for a
/// continuous model, computed over the jump points.
pub fn ks_sup(sample: &Sample, model: &DistributionModel) -> f64 {
    let n = sample.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, x) in sample.sorted().iter().enumerate() {
        let f = model.cdf(*x);
        sup = sup.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    sup
}

/// Monte Carlo exceedance probability of the Dvoretzky-Kiefer-Wolfowitz
/// bound with the sharp constant: estimates
/// `P( sup_t |F_n(t) - F(t)| > sqrt(x/n) )` over `reps` replicates and
/// returns `(estimate, 2 exp(-2x))`.  The estimate should sit below the
/// bound up to Monte Carlo error.
pub fn dkw_exceedance(
    model: &DistributionModel,
    n: usize,
    x: f64,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if !(x > 0.0) {
        return Err(Error::domain(format!("DKW exceedance needs x > 0, got {x}")));
    }
    if reps < 100 {
        return Err(Error::invalid(format!("need at least 100 replicates, got {reps}")));
    }
    let threshold = (x / n as f64).sqrt();
    let exceed: usize = (0..reps)
        .into_par_iter()
        .map(|r| {
            let xs = model
                .sample(n, derive_seed(seed, r as u64))
                .expect("n > 0 and model validated");
            let sample = Sample::new(xs).expect("model samples are finite");
            usize::from(ks_sup(&sample, model) > threshold)
        })
        .sum();
    Ok((exceed as f64 / reps as f64, 2.0 * (-2.0 * x).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(xs: &[f64]) -> Sample {
        Sample::new(xs.to_vec()).unwrap()
    }

    /// Brute-force pair enumeration oracle: counts index pairs
    /// `1 <= i <= j <= k` with `k = n F_n(t)` one by one.
    fn pair_count_oracle(s: &Sample, t: f64) -> Ratio<u64> {
        let k = s.count_le(t) as u64;
        let mut pairs = 0u64;
        for i in 1..=k {
            for j in i..=k {
                let _ = (i, j);
                pairs += 1;
            }
        }
        Ratio::new(pairs, (s.len() * s.len()) as u64)
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
        assert!(Sample::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn edf_known_values() {
        let s = sample(&[0.2, 0.5, 0.9]);
        let e = edf(&s);
        assert_eq!(e.eval(0.6), 2.0 / 3.0);
        assert_eq!(e.eval(0.1), 0.0);
        assert_eq!(e.eval(0.9), 1.0);
        assert_eq!(e.eval(2.0), 1.0);
        assert_eq!(e.left_limit(0.5), 1.0 / 3.0);
    }

    #[test]
    fn edf_aggregates_ties_into_one_jump() {
        let s = sample(&[1.0, 1.0, 2.0]);
        let e = edf(&s);
        assert_eq!(e.knots(), &[1.0, 2.0]);
        assert_eq!(e.eval(1.0), 2.0 / 3.0);
        assert_eq!(e.left_limit(1.0), 0.0);
    }

    #[test]
    fn integrated_edf_known_values() {
        let s = sample(&[0.2, 0.5, 0.9]);
        let ie = integrated_edf(&s);
        // k = 2 of n = 3: pairs (1,1), (1,2), (2,2) out of 9.
        assert_eq!(ie.eval(0.6), 1.0 / 3.0);
        assert_eq!(ie.eval(0.1), 0.0);
        // Terminal value (1/2)(1 + 1/n).
        assert_eq!(ie.eval(5.0), 0.5 * (1.0 + 1.0 / 3.0));
    }

    #[test]
    fn counting_oracle_fixed_example() {
        let s = sample(&[0.2, 0.5, 0.9]);
        let r = integrated_edf_by_counting(&s, 0.6);
        assert_eq!(r, Ratio::new(3u64, 9u64));
        assert_eq!(pair_count_oracle(&s, 0.6), r);
    }

    proptest! {
        #[test]
        fn counting_oracle_matches_integrated_edf(
            xs in proptest::collection::vec(0.0f64..1.0, 1..40),
            t in -0.2f64..1.2,
        ) {
            let s = Sample::new(xs).unwrap();
            let by_formula = integrated_edf(&s).eval(t);
            let by_counting = integrated_edf_by_counting(&s, t);
            let enumerated = pair_count_oracle(&s, t);
            // Exact rational agreement between the two counting routes...
            prop_assert_eq!(by_counting, enumerated);
            // ...and exact float agreement with the formula route (both
            // are correctly rounded quotients of the same integers).
            let as_float = *by_counting.numer() as f64 / *by_counting.denom() as f64;
            prop_assert_eq!(by_formula, as_float);
        }

        #[test]
        fn integrated_edf_monotone_and_bounded(
            xs in proptest::collection::vec(-5.0f64..5.0, 1..30),
        ) {
            let s = Sample::new(xs).unwrap();
            let ie = integrated_edf(&s);
            let n = s.len() as f64;
            let mut prev = 0.0;
            for t in ie.knots() {
                let v = ie.eval(*t);
                prop_assert!(v >= prev);
                prop_assert!(v <= 0.5 * (1.0 + 1.0 / n) + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn empirical_process_point_value() {
        let s = sample(&[0.5]);
        let m = DistributionModel::uniform();
        assert_eq!(empirical_process(&s, &m, 0.5), 0.5);
        assert_eq!(integrated_empirical_process(&s, &m, 1.0), 0.5);
    }

    #[test]
    fn decomposition_reconstructs_the_process() {
        let m = DistributionModel::uniform();
        let s = sample(&[0.5]);
        let (a, b, c) = hn_decomposition(&s, &m, 0.5);
        assert_eq!((a, b), (0.25, 0.125));
        assert_eq!(c, 0.5);
        let total = a + b + c;
        assert!((total - integrated_empirical_process(&s, &m, 0.5)).abs() < 1e-15);
        assert!((total - 0.875).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn decomposition_identity_holds_everywhere(
            xs in proptest::collection::vec(0.0f64..1.0, 1..50),
            t in 0.0f64..1.0,
        ) {
            let s = Sample::new(xs).unwrap();
            let m = DistributionModel::uniform();
            let (a, b, c) = hn_decomposition(&s, &m, t);
            let direct = integrated_empirical_process(&s, &m, t);
            prop_assert!((a + b + c - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn ks_sup_exact_on_small_sample() {
        // Single point at 0.3 under uniform: sup is max(0.7, 0.3) at the jump.
        let s = sample(&[0.3]);
        assert!((ks_sup(&s, &DistributionModel::uniform()) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn dkw_bound_holds_at_moderate_size() {
        let m = DistributionModel::uniform();
        let (p, bound) = dkw_exceedance(&m, 50, 1.0, 2000, 11).unwrap();
        let se = (p * (1.0 - p) / 2000.0).sqrt().max(1e-3);
        assert!(p <= bound + 4.0 * se, "p = {p}, bound = {bound}");
        assert!(dkw_exceedance(&m, 50, 0.0, 2000, 11).is_err());
        assert!(dkw_exceedance(&m, 50, 1.0, 10, 11).is_err());
    }

    #[test]
    fn ingestion_reads_comments_and_reports_lines() {
        let good = "# header\n1.5\n2.5\n# trailing\n3.5\n";
        assert_eq!(read_observations(good.as_bytes()).unwrap(), vec![1.5, 2.5, 3.5]);

        let empty_line = "1.0\n\n2.0\n";
        match read_observations(empty_line.as_bytes()) {
            Err(Error::Ingestion { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ingestion error, got {other:?}"),
        }

        let bad_number = "1.0\nabc\n";
        match read_observations(bad_number.as_bytes()) {
            Err(Error::Ingestion { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ingestion error, got {other:?}"),
        }

        let nan = "1.0\nNaN\n";
        assert!(read_observations(nan.as_bytes()).is_err());
    }

    #[test]
    fn head_and_tail_preserve_insertion_order() {
        let s = sample(&[0.9, 0.1, 0.5]);
        assert_eq!(s.head(2).unwrap().observations(), &[0.9, 0.1]);
        assert_eq!(s.tail(2).unwrap().observations(), &[0.5]);
        assert!(s.head(0).is_err());
    }
}
