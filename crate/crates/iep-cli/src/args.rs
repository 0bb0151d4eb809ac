//! Command-line surface: the clap tree plus parsers for the small spec
//! strings (`--model`, `--family`, `--depth`) that don't fit a flat flag.

use clap::{Args, Parser, Subcommand, ValueEnum};

use iep_core::coupling::DepthRule;
use iep_core::estimated::{exp_family, ParametricFamily};
use iep_core::gof::GofStatistic;
use iep_core::model::DistributionModel;

use crate::error::{CliError, Result};
use crate::ingest::read_knot_file;

#[derive(Parser)]
#[command(
    name = "iep",
    version,
    about = "Integrated empirical process statistics: goodness-of-fit, multi-sample and \
             change-point tests, coupling and local-time experiments",
    disable_help_subcommand = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Test a sample against a fully specified model distribution
    Gof(GofArgs),
    /// Compare two samples through their integrated empirical processes
    Twosample(TwoSampleArgs),
    /// Joint equality test for K samples in one long-format file
    Ksample(KSampleArgs),
    /// Scan a sequence for a distributional change at an unknown position
    Changepoint(ChangePointArgs),
    /// Goodness-of-fit to a parametric family with the parameter fitted
    Estimated(EstimatedArgs),
    /// Random-walk self-intersection growth experiment
    Localtime(LocalTimeArgs),
    /// Simulate and persist a null table for later reuse
    SimulateNull(SimulateNullArgs),
    /// Measure how a statistic scales with the sample size
    RateExperiment(RateExperimentArgs),
}

/// Flags shared by every null-calibrated test subcommand.
#[derive(Args)]
pub struct NullArgs {
    /// Replicates for the simulated null distribution
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Root seed; all randomness derives from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here as well as to stdout
    #[arg(long)]
    pub out: Option<String>,
    /// Directory for cached null tables (`null_<hash>.csv`)
    #[arg(long, default_value = ".")]
    pub cache_dir: String,
    /// Do not read or write cached null tables
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Args)]
pub struct GofArgs {
    /// Input file: one observation per line, `#` comments allowed
    #[arg(long)]
    pub data: String,
    /// Model: uniform | normal:MU,SIGMA | exp:THETA | file:PATH
    #[arg(long)]
    pub model: String,
    /// Which functional of the integrated process to test with
    #[arg(long, value_enum, default_value_t = GofStatChoice::IntegratedKs)]
    pub statistic: GofStatChoice,
    /// Grid cells when simulating the weighted-bridge null
    #[arg(long, default_value_t = iep_core::gof::DEFAULT_NULL_GRID_CELLS)]
    pub grid_cells: usize,
    #[command(flatten)]
    pub null: NullArgs,
}

#[derive(Args)]
pub struct TwoSampleArgs {
    /// First sample, one observation per line
    #[arg(long)]
    pub x: String,
    /// Second sample, one observation per line
    #[arg(long)]
    pub y: String,
    /// Power applied to both distribution functions before contrasting
    #[arg(long, default_value_t = 1)]
    pub q: u32,
    #[arg(long, value_enum, default_value_t = FunctionalChoice::Sup)]
    pub statistic: FunctionalChoice,
    #[command(flatten)]
    pub null: NullArgs,
}

#[derive(Args)]
pub struct KSampleArgs {
    /// Long-format CSV with a header naming the value and group columns
    #[arg(long)]
    pub data: String,
    /// Header name of the numeric column
    #[arg(long, default_value = "value")]
    pub value_col: String,
    /// Header name of the group label column
    #[arg(long, default_value = "group")]
    pub group_col: String,
    /// Common null model (required by the integral statistic)
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_enum, default_value_t = FunctionalChoice::Sup)]
    pub statistic: FunctionalChoice,
    #[command(flatten)]
    pub null: NullArgs,
}

#[derive(Args)]
pub struct ChangePointArgs {
    /// Input sequence in observation order, one value per line
    #[arg(long)]
    pub data: String,
    /// Use the variance-compensating weight on the segment fraction
    #[arg(long)]
    pub weighted: bool,
    /// Grid cells per axis when simulating the limit sheet
    #[arg(long, default_value_t = iep_core::changepoint::DEFAULT_CP_GRID_CELLS)]
    pub grid_cells: usize,
    #[command(flatten)]
    pub null: NullArgs,
}

#[derive(Args)]
pub struct EstimatedArgs {
    /// Input file: one observation per line
    #[arg(long)]
    pub data: String,
    /// Parametric family to fit; currently only `exp`
    #[arg(long, default_value = "exp")]
    pub family: String,
    /// Grid cells when simulating the plug-in limit approximant
    #[arg(long, default_value_t = iep_core::estimated::DEFAULT_ESTIMATED_GRID_CELLS)]
    pub grid_cells: usize,
    #[command(flatten)]
    pub null: NullArgs,
}

#[derive(Args)]
pub struct LocalTimeArgs {
    /// Walk lengths, comma separated
    #[arg(long, value_delimiter = ',', default_value = "4096")]
    pub n: Vec<usize>,
    /// Replicates per walk length (at least 50)
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the rows here; `.csv` gets a plain table, anything else JSON
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct SimulateNullArgs {
    /// Which null table to simulate
    #[arg(long, value_enum)]
    pub statistic: NullStatChoice,
    /// Per-sample sizes (two-sample and K-sample statistics)
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Power for the two-sample statistics
    #[arg(long, default_value_t = 1)]
    pub q: u32,
    /// Anchored family for estimated_sup, e.g. exp:1.5
    #[arg(long)]
    pub family: Option<String>,
    /// Sample size the estimated_sup table is scaled for
    #[arg(long)]
    pub n: Option<usize>,
    /// Grid cells; defaults to the statistic's own default
    #[arg(long)]
    pub grid_cells: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the table here as CSV
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, default_value = ".")]
    pub cache_dir: String,
    #[arg(long)]
    pub no_cache: bool,
}

#[derive(Args)]
pub struct RateExperimentArgs {
    #[arg(long, value_enum)]
    pub experiment: ExperimentChoice,
    /// Sample sizes, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dyadic depth rule for the coupling experiment: log2 | fixed:D
    #[arg(long, default_value = "log2")]
    pub depth: String,
    /// Anchored family for the epsilon-bar experiment
    #[arg(long, default_value = "exp:1")]
    pub family: String,
    /// Write the rows here; `.csv` gets a plain table, anything else JSON
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum GofStatChoice {
    #[value(name = "integrated_ks", alias = "ks")]
    IntegratedKs,
    #[value(name = "integrated_cvm", alias = "cvm")]
    IntegratedCvm,
}

impl GofStatChoice {
    pub fn to_core(self) -> GofStatistic {
        match self {
            GofStatChoice::IntegratedKs => GofStatistic::IntegratedKs,
            GofStatChoice::IntegratedCvm => GofStatistic::IntegratedCvm,
        }
    }
}

/// Sup-norm versus integrated-square functional of a test process.
#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum FunctionalChoice {
    Sup,
    Integral,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum NullStatChoice {
    #[value(name = "integrated_ks")]
    IntegratedKs,
    #[value(name = "integrated_cvm")]
    IntegratedCvm,
    #[value(name = "two_sample_sup")]
    TwoSampleSup,
    #[value(name = "two_sample_integral")]
    TwoSampleIntegral,
    #[value(name = "k_sample_sup")]
    KSampleSup,
    #[value(name = "k_sample_integral")]
    KSampleIntegral,
    #[value(name = "cp_sup")]
    CpSup,
    #[value(name = "cp_sup_weighted")]
    CpSupWeighted,
    #[value(name = "estimated_sup")]
    EstimatedSup,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum ExperimentChoice {
    Coupling,
    #[value(name = "epsilon_bar", alias = "epsilon-bar")]
    EpsilonBar,
}

/// Parse a model spec: `uniform` (or `unif`), `normal:MU,SIGMA`,
/// `exp:THETA`, or `file:PATH` pointing at piecewise-linear cdf knots.
pub fn parse_model(spec: &str) -> Result<DistributionModel> {
    let (head, tail) = match spec.split_once(':') {
        Some((h, t)) => (h, Some(t)),
        None => (spec, None),
    };
    let bad = |msg: String| Err(CliError::Usage(msg));
    match head {
        "uniform" | "unif" => match tail {
            None => Ok(DistributionModel::Uniform),
            Some(_) => bad(format!("the uniform model takes no parameters: '{spec}'")),
        },
        "normal" => {
            let args = tail.unwrap_or("");
            let (mu, sigma) = args.split_once(',').ok_or_else(|| {
                CliError::Usage(format!("normal model needs 'normal:MU,SIGMA', got '{spec}'"))
            })?;
            let mu = parse_float("normal mean", mu)?;
            let sigma = parse_float("normal standard deviation", sigma)?;
            DistributionModel::normal(mu, sigma).map_err(crate::error::usage)
        }
        "exp" => {
            let theta = parse_float(
                "exponential rate",
                tail.ok_or_else(|| {
                    CliError::Usage(format!("exponential model needs 'exp:THETA', got '{spec}'"))
                })?,
            )?;
            DistributionModel::exponential(theta).map_err(crate::error::usage)
        }
        "file" => {
            let path = tail.filter(|t| !t.is_empty()).ok_or_else(|| {
                CliError::Usage(format!("file model needs 'file:PATH', got '{spec}'"))
            })?;
            let (xs, ps) = read_knot_file(path)?;
            DistributionModel::piecewise(xs, ps).map_err(|e| CliError::Data(format!("{path}: {e}")))
        }
        _ => bad(format!(
            "unknown model '{spec}' (expected uniform, normal:MU,SIGMA, exp:THETA, or file:PATH)"
        )),
    }
}

/// Parse an anchored family spec: `exp:THETA`, or bare `exp` for rate 1.
pub fn parse_family(spec: &str) -> Result<ParametricFamily> {
    let (head, tail) = match spec.split_once(':') {
        Some((h, t)) => (h, Some(t)),
        None => (spec, None),
    };
    match head {
        "exp" => {
            let theta = match tail {
                Some(t) => parse_float("exponential rate", t)?,
                None => 1.0,
            };
            exp_family(theta).map_err(crate::error::usage)
        }
        _ => Err(CliError::Usage(format!(
            "unknown family '{spec}' (expected exp or exp:THETA)"
        ))),
    }
}

/// Parse a depth rule: `log2` or `fixed:D` with D in 1..=20.
pub fn parse_depth(spec: &str) -> Result<DepthRule> {
    if spec == "log2" {
        return Ok(DepthRule::Log2Ceil);
    }
    if let Some(d) = spec.strip_prefix("fixed:") {
        let depth: u32 = d
            .parse()
            .map_err(|_| CliError::Usage(format!("cannot parse depth '{d}' as an integer")))?;
        return Ok(DepthRule::Fixed(depth));
    }
    Err(CliError::Usage(format!(
        "unknown depth rule '{spec}' (expected log2 or fixed:D)"
    )))
}

fn parse_float(what: &str, text: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("cannot parse {what} '{text}' as a number")))
}
