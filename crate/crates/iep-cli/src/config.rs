//! The experiment configuration echoed into every report.
//!
//! Every numeric in a report is a pure function of this struct, so carrying
//! it in the output closes the reproducibility loop: the report alone is
//! enough to rerun the experiment.  Fields irrelevant to a subcommand stay
//! `None` and are skipped during serialization.  The parallelism degree is
//! deliberately *not* recorded: outputs are identical for any degree, and
//! recording it would break byte-identity across `IEP_THREADS` settings.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_col: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_col: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub statistic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// `None` when caching is disabled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        ExperimentConfig {
            subcommand: subcommand.to_string(),
            data: None,
            x: None,
            y: None,
            value_col: None,
            group_col: None,
            model: None,
            family: None,
            statistic: None,
            experiment: None,
            depth: None,
            q: None,
            weighted: None,
            sizes: None,
            n: None,
            grid_cells: None,
            reps: None,
            seed,
            out: None,
            cache_dir: None,
        }
    }
}
