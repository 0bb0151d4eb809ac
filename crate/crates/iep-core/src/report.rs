//! Serializable result types produced by tests and experiments.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Result of a single hypothesis test with a Monte Carlo null table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    /// Name of the statistic (e.g. `"integrated_ks"`).
    pub statistic: String,
    /// Observed value of the statistic.
    pub value: f64,
    /// Monte Carlo p-value with the add-one correction:
    /// `(1 + #{null >= observed}) / (reps + 1)`.
    pub p_value: f64,
    /// Upper critical values of the simulated null, keyed by confidence
    /// level formatted with two decimals (`"0.90"`, `"0.95"`, `"0.99"`).
    pub critical_values: BTreeMap<String, f64>,
    /// Sample size(s) the statistic was computed from.
    pub sample_sizes: Vec<usize>,
    /// Number of null replicates behind `p_value` / `critical_values`.
    pub null_reps: usize,
    /// Root seed of the null simulation.
    pub seed: u64,
    /// Set when the null table is too small (< 1000 replicates) for the
    /// reported critical values to be taken seriously.
    pub low_reps_warning: bool,
}

impl TestReport {
    /// Assemble a report from an observed value and a **sorted** null table.
    pub fn from_null_table(
        statistic: impl Into<String>,
        value: f64,
        sorted_null: &[f64],
        sample_sizes: Vec<usize>,
        seed: u64,
    ) -> Self {
        let reps = sorted_null.len();
        let above = sorted_null.partition_point(|v| *v < value);
        let exceed = reps - above;
        let p_value = (1 + exceed) as f64 / (reps + 1) as f64;
        let mut critical_values = BTreeMap::new();
        for level in [0.90, 0.95, 0.99] {
            critical_values.insert(
                format!("{level:.2}"),
                crate::stats::quantile_sorted(sorted_null, level),
            );
        }
        TestReport {
            statistic: statistic.into(),
            value,
            p_value,
            critical_values,
            sample_sizes,
            null_reps: reps,
            seed,
            low_reps_warning: reps < 1000,
        }
    }
}

/// [`TestReport`] extended with the fitted parameter, for tests where the
/// hypothesized distribution is a family rather than a single cdf.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatedReport {
    /// Which family was fitted (e.g. `"exp"`).
    pub family: String,
    /// Parameter estimate the null simulation was anchored at.
    pub theta_hat: f64,
    #[serde(flatten)]
    pub report: TestReport,
}

/// One row of a rate experiment: the distribution of some statistic at a
/// given sample size, summarized by quartiles, plus a normalized version
/// of the median (what "normalized" means is experiment-specific and
/// recorded in [`RateReport::normalization`]).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub normalized_median: f64,
}

/// Result of a rate experiment over a list of sample sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    /// What was measured (e.g. `"coupling_distance_integrated"`).
    pub experiment: String,
    /// What `normalized_median` divides or multiplies by.
    pub normalization: String,
    pub reps: usize,
    pub seed: u64,
    pub rows: Vec<RateRow>,
}

impl RateReport {
    /// Summarize raw replicate values into a row.  `values` need not be
    /// sorted; `normalize` maps the median to its normalized version.
    pub fn push_row(&mut self, n: usize, values: &mut [f64], normalize: impl Fn(f64) -> f64) {
        values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        let median = crate::stats::median_sorted(values);
        self.rows.push(RateRow {
            n,
            median,
            q25: crate::stats::quantile_sorted(values, 0.25),
            q75: crate::stats::quantile_sorted(values, 0.75),
            normalized_median: normalize(median),
        });
    }
}

/// Result of a change-point test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChangePointReport {
    /// `"cp_sup"` for the plain statistic, `"cp_sup_weighted"` for the
    /// weighted one.
    pub statistic: String,
    pub value: f64,
    pub p_value: f64,
    /// Estimated change location as a fraction of the sample size.
    pub s_hat: f64,
    /// Observation value at which the inner supremum is attained.
    pub t_hat: f64,
    pub n: usize,
    pub null_reps: usize,
    pub seed: u64,
}
