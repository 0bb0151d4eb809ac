//! One run function per subcommand.
//!
//! Each builds the [`ExperimentConfig`] echoed into its report, obtains the
//! null table through the cache (fresh simulation on a miss), computes the
//! observed statistic, and emits the JSON document.  Cached and uncached
//! runs produce identical bytes because tables round-trip exactly.

use serde::Serialize;

use iep_core::changepoint::{cp_test_with_null, simulate_cp_limit, WeightFunction};
use iep_core::empirical::Sample;
use iep_core::estimated::{
    epsilon_bar_experiment, estimated_exp_test_with_null, exp_family, fit_exp_rate,
    simulate_estimated_null,
};
use iep_core::gaussian::equispaced_grid;
use iep_core::gof::{gof_test_with_null, simulate_null as simulate_gof_null};
use iep_core::localtime::lt_growth_experiment;
use iep_core::multisample::{
    multisample_test_with_null, simulate_multisample_null, MultiSample, MultisampleVariant,
};
use iep_core::stats::quantile_sorted;

use crate::args::{
    parse_depth, parse_family, parse_model, ChangePointArgs, Command, EstimatedArgs,
    ExperimentChoice, FunctionalChoice, GofArgs, KSampleArgs, LocalTimeArgs, NullStatChoice,
    RateExperimentArgs, SimulateNullArgs, TwoSampleArgs,
};
use crate::config::ExperimentConfig;
use crate::error::{data_in, usage, CliError, Result};
use crate::ingest::{load_groups, load_sample};
use crate::output::{display_path, emit, emit_rate, null_csv, write_file, NullCache};

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gof(args) => run_gof(args),
        Command::Twosample(args) => run_twosample(args),
        Command::Ksample(args) => run_ksample(args),
        Command::Changepoint(args) => run_changepoint(args),
        Command::Estimated(args) => run_estimated(args),
        Command::Localtime(args) => run_localtime(args),
        Command::SimulateNull(args) => run_simulate_null(args),
        Command::RateExperiment(args) => run_rate_experiment(args),
    }
}

fn validate_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".to_string()));
    }
    Ok(())
}

fn validate_grid(cells: usize) -> Result<()> {
    if cells < 2 {
        return Err(CliError::Usage(format!(
            "--grid-cells must be at least 2, got {cells}"
        )));
    }
    Ok(())
}

// Canonical cache keys.  `simulate-null` builds the same strings, so its
// tables are found by the test subcommands and vice versa.

fn key_gof(label: &str, grid: usize, reps: usize, seed: u64) -> String {
    format!("iep-null;v1;statistic={label};grid={grid};reps={reps};seed={seed}")
}

fn key_multisample(label: &str, sizes: &[usize], grid: usize, reps: usize, seed: u64) -> String {
    let sizes = sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
    format!("iep-null;v1;statistic={label};sizes={sizes};grid={grid};reps={reps};seed={seed}")
}

fn key_cp(label: &str, grid: usize, reps: usize, seed: u64) -> String {
    format!("iep-null;v1;statistic={label};grid={grid};reps={reps};seed={seed}")
}

fn key_estimated(theta: f64, n: u64, grid: usize, reps: usize, seed: u64) -> String {
    format!(
        "iep-null;v1;statistic=estimated_sup;family=exp;theta={theta:.16e};n={n};\
         grid={grid};reps={reps};seed={seed}"
    )
}

fn run_gof(args: GofArgs) -> Result<()> {
    validate_reps(args.null.reps)?;
    validate_grid(args.grid_cells)?;
    let sample = load_sample(&args.data)?;
    let model = parse_model(&args.model)?;
    let statistic = args.statistic.to_core();

    let mut config = ExperimentConfig::new("gof", args.null.seed);
    config.data = Some(args.data.clone());
    config.model = Some(args.model.clone());
    config.statistic = Some(statistic.label().to_string());
    config.grid_cells = Some(args.grid_cells);
    config.reps = Some(args.null.reps);
    config.out = args.null.out.clone();
    config.cache_dir = (!args.null.no_cache).then(|| args.null.cache_dir.clone());

    let cache = NullCache::new(&args.null.cache_dir, args.null.no_cache);
    let key = key_gof(statistic.label(), args.grid_cells, args.null.reps, args.null.seed);
    let null = cache.fetch(&key, args.null.reps, || {
        simulate_gof_null(statistic, args.grid_cells, args.null.reps, args.null.seed).map_err(usage)
    })?;
    let report =
        gof_test_with_null(&sample, &model, statistic, &null, args.null.seed).map_err(usage)?;
    emit(&config, report, args.null.out.as_deref())
}

fn run_twosample(args: TwoSampleArgs) -> Result<()> {
    validate_reps(args.null.reps)?;
    let x = load_sample(&args.x)?;
    let y = load_sample(&args.y)?;
    let variant = match args.statistic {
        FunctionalChoice::Sup => MultisampleVariant::TwoSampleSup { q: args.q },
        FunctionalChoice::Integral => MultisampleVariant::TwoSampleIntegral { q: args.q },
    };
    let ms = MultiSample::new(vec![x, y]).map_err(usage)?;
    let sizes = ms.sizes();

    let mut config = ExperimentConfig::new("twosample", args.null.seed);
    config.x = Some(args.x.clone());
    config.y = Some(args.y.clone());
    config.q = Some(args.q);
    config.statistic = Some(variant.label());
    config.reps = Some(args.null.reps);
    config.out = args.null.out.clone();
    config.cache_dir = (!args.null.no_cache).then(|| args.null.cache_dir.clone());

    let cache = NullCache::new(&args.null.cache_dir, args.null.no_cache);
    let grid = iep_core::multisample::DEFAULT_LIMIT_GRID_CELLS;
    let key = key_multisample(&variant.label(), &sizes, grid, args.null.reps, args.null.seed);
    let null = cache.fetch(&key, args.null.reps, || {
        simulate_multisample_null(variant, &sizes, args.null.reps, args.null.seed).map_err(usage)
    })?;
    let report =
        multisample_test_with_null(&ms, None, variant, &null, args.null.seed).map_err(usage)?;
    emit(&config, report, args.null.out.as_deref())
}

fn run_ksample(args: KSampleArgs) -> Result<()> {
    validate_reps(args.null.reps)?;
    let model = args.model.as_deref().map(parse_model).transpose()?;
    let variant = match args.statistic {
        FunctionalChoice::Sup => MultisampleVariant::KSampleSup,
        FunctionalChoice::Integral => MultisampleVariant::KSampleIntegral,
    };
    if variant == MultisampleVariant::KSampleIntegral && model.is_none() {
        return Err(CliError::Usage(
            "the K-sample integral statistic needs --model to integrate against".to_string(),
        ));
    }
    let groups = load_groups(&args.data, &args.value_col, &args.group_col)?;
    let samples = groups
        .into_iter()
        .map(|(_, values)| Sample::new(values).map_err(|e| data_in(&args.data, e)))
        .collect::<Result<Vec<_>>>()?;
    let ms = MultiSample::new(samples).map_err(|e| data_in(&args.data, e))?;
    let sizes = ms.sizes();

    let mut config = ExperimentConfig::new("ksample", args.null.seed);
    config.data = Some(args.data.clone());
    config.value_col = Some(args.value_col.clone());
    config.group_col = Some(args.group_col.clone());
    config.model = args.model.clone();
    config.statistic = Some(variant.label());
    config.reps = Some(args.null.reps);
    config.out = args.null.out.clone();
    config.cache_dir = (!args.null.no_cache).then(|| args.null.cache_dir.clone());

    let cache = NullCache::new(&args.null.cache_dir, args.null.no_cache);
    let grid = iep_core::multisample::DEFAULT_LIMIT_GRID_CELLS;
    let key = key_multisample(&variant.label(), &sizes, grid, args.null.reps, args.null.seed);
    let null = cache.fetch(&key, args.null.reps, || {
        simulate_multisample_null(variant, &sizes, args.null.reps, args.null.seed).map_err(usage)
    })?;
    let report = multisample_test_with_null(&ms, model.as_ref(), variant, &null, args.null.seed)
        .map_err(usage)?;
    emit(&config, report, args.null.out.as_deref())
}

fn run_changepoint(args: ChangePointArgs) -> Result<()> {
    validate_reps(args.null.reps)?;
    validate_grid(args.grid_cells)?;
    let sample = load_sample(&args.data)?;
    // Surface the size precondition before paying for the null simulation.
    if args.weighted && sample.len() < 4 {
        return Err(CliError::Usage(
            "weighted change-point test needs n >= 4".to_string(),
        ));
    }
    let label = if args.weighted { "cp_sup_weighted" } else { "cp_sup" };

    let mut config = ExperimentConfig::new("changepoint", args.null.seed);
    config.data = Some(args.data.clone());
    config.weighted = Some(args.weighted);
    config.statistic = Some(label.to_string());
    config.grid_cells = Some(args.grid_cells);
    config.reps = Some(args.null.reps);
    config.out = args.null.out.clone();
    config.cache_dir = (!args.null.no_cache).then(|| args.null.cache_dir.clone());

    let cache = NullCache::new(&args.null.cache_dir, args.null.no_cache);
    let key = key_cp(label, args.grid_cells, args.null.reps, args.null.seed);
    let null = cache.fetch(&key, args.null.reps, || {
        let grid = equispaced_grid(args.grid_cells);
        let builtin = WeightFunction::builtin();
        let weight = if args.weighted { Some(&builtin) } else { None };
        simulate_cp_limit(&grid, &grid, args.null.reps, args.null.seed, weight).map_err(usage)
    })?;
    let report = cp_test_with_null(&sample, &null, args.null.seed, args.weighted).map_err(usage)?;
    emit(&config, report, args.null.out.as_deref())
}

fn run_estimated(args: EstimatedArgs) -> Result<()> {
    validate_reps(args.null.reps)?;
    validate_grid(args.grid_cells)?;
    if args.family != "exp" {
        return Err(CliError::Usage(format!(
            "only the exp family supports fitting, got '{}'",
            args.family
        )));
    }
    let sample = load_sample(&args.data)?;
    // Fitting touches every observation, so its failures are data errors
    // (out-of-support values, degenerate samples), not flag mistakes.
    let theta_hat = fit_exp_rate(&sample).map_err(|e| data_in(&args.data, e))?;
    let anchored = exp_family(theta_hat).map_err(usage)?;

    let mut config = ExperimentConfig::new("estimated", args.null.seed);
    config.data = Some(args.data.clone());
    config.family = Some(args.family.clone());
    config.statistic = Some("estimated_sup".to_string());
    config.grid_cells = Some(args.grid_cells);
    config.reps = Some(args.null.reps);
    config.out = args.null.out.clone();
    config.cache_dir = (!args.null.no_cache).then(|| args.null.cache_dir.clone());

    let cache = NullCache::new(&args.null.cache_dir, args.null.no_cache);
    let n = sample.len() as u64;
    let key = key_estimated(theta_hat, n, args.grid_cells, args.null.reps, args.null.seed);
    let null = cache.fetch(&key, args.null.reps, || {
        simulate_estimated_null(&anchored, n, args.grid_cells, args.null.reps, args.null.seed)
            .map_err(usage)
    })?;
    let report = estimated_exp_test_with_null(&sample, &null, args.null.seed)
        .map_err(|e| data_in(&args.data, e))?;
    emit(&config, report, args.null.out.as_deref())
}

fn run_localtime(args: LocalTimeArgs) -> Result<()> {
    validate_reps(args.reps)?;
    let mut config = ExperimentConfig::new("localtime", args.seed);
    config.n = Some(args.n.clone());
    config.reps = Some(args.reps);
    config.out = args.out.clone();

    let report = lt_growth_experiment(&args.n, args.reps, args.seed).map_err(usage)?;
    emit_rate(&config, &report, args.out.as_deref())
}

#[derive(Serialize)]
struct NullTableReport {
    statistic: String,
    grid_cells: usize,
    rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    q90: f64,
    q95: f64,
    q99: f64,
}

fn run_simulate_null(args: SimulateNullArgs) -> Result<()> {
    validate_reps(args.reps)?;
    let reps = args.reps;
    let seed = args.seed;

    let sizes_for = |what: &str, want_two: bool| -> Result<Vec<usize>> {
        let sizes = args
            .sizes
            .clone()
            .ok_or_else(|| CliError::Usage(format!("{what} needs --sizes")))?;
        if want_two && sizes.len() != 2 {
            return Err(CliError::Usage(format!(
                "{what} needs exactly 2 sizes, got {}",
                sizes.len()
            )));
        }
        Ok(sizes)
    };

    let mut config = ExperimentConfig::new("simulate-null", seed);
    config.reps = Some(reps);
    config.out = args.out.clone();
    config.cache_dir = (!args.no_cache).then(|| args.cache_dir.clone());
    let cache = NullCache::new(&args.cache_dir, args.no_cache);

    // Resolve the statistic to its core label, grid, cache key, and
    // simulation closure, then run the shared fetch/report tail.
    let (label, grid, key, table): (String, usize, String, Vec<f64>) = match args.statistic {
        NullStatChoice::IntegratedKs | NullStatChoice::IntegratedCvm => {
            let statistic = match args.statistic {
                NullStatChoice::IntegratedKs => iep_core::gof::GofStatistic::IntegratedKs,
                _ => iep_core::gof::GofStatistic::IntegratedCvm,
            };
            let grid = args.grid_cells.unwrap_or(iep_core::gof::DEFAULT_NULL_GRID_CELLS);
            validate_grid(grid)?;
            let key = key_gof(statistic.label(), grid, reps, seed);
            let table = cache.fetch(&key, reps, || {
                simulate_gof_null(statistic, grid, reps, seed).map_err(usage)
            })?;
            (statistic.label().to_string(), grid, key, table)
        }
        NullStatChoice::TwoSampleSup
        | NullStatChoice::TwoSampleIntegral
        | NullStatChoice::KSampleSup
        | NullStatChoice::KSampleIntegral => {
            let (variant, sizes) = match args.statistic {
                NullStatChoice::TwoSampleSup => (
                    MultisampleVariant::TwoSampleSup { q: args.q },
                    sizes_for("two_sample_sup", true)?,
                ),
                NullStatChoice::TwoSampleIntegral => (
                    MultisampleVariant::TwoSampleIntegral { q: args.q },
                    sizes_for("two_sample_integral", true)?,
                ),
                NullStatChoice::KSampleSup => {
                    (MultisampleVariant::KSampleSup, sizes_for("k_sample_sup", false)?)
                }
                _ => (
                    MultisampleVariant::KSampleIntegral,
                    sizes_for("k_sample_integral", false)?,
                ),
            };
            config.sizes = Some(sizes.clone());
            if matches!(
                args.statistic,
                NullStatChoice::TwoSampleSup | NullStatChoice::TwoSampleIntegral
            ) {
                config.q = Some(args.q);
            }
            let grid = iep_core::multisample::DEFAULT_LIMIT_GRID_CELLS;
            let key = key_multisample(&variant.label(), &sizes, grid, reps, seed);
            let table = cache.fetch(&key, reps, || {
                simulate_multisample_null(variant, &sizes, reps, seed).map_err(usage)
            })?;
            (variant.label(), grid, key, table)
        }
        NullStatChoice::CpSup | NullStatChoice::CpSupWeighted => {
            let weighted = args.statistic == NullStatChoice::CpSupWeighted;
            let label = if weighted { "cp_sup_weighted" } else { "cp_sup" };
            let grid = args
                .grid_cells
                .unwrap_or(iep_core::changepoint::DEFAULT_CP_GRID_CELLS);
            validate_grid(grid)?;
            let key = key_cp(label, grid, reps, seed);
            let table = cache.fetch(&key, reps, || {
                let points = equispaced_grid(grid);
                let builtin = WeightFunction::builtin();
                let weight = if weighted { Some(&builtin) } else { None };
                simulate_cp_limit(&points, &points, reps, seed, weight).map_err(usage)
            })?;
            (label.to_string(), grid, key, table)
        }
        NullStatChoice::EstimatedSup => {
            let spec = args.family.clone().ok_or_else(|| {
                CliError::Usage("estimated_sup needs --family exp:THETA".to_string())
            })?;
            let family = parse_family(&spec)?;
            let n = args.n.ok_or_else(|| {
                CliError::Usage("estimated_sup needs --n (the sample size)".to_string())
            })? as u64;
            config.family = Some(spec);
            config.n = Some(vec![n as usize]);
            let grid = args
                .grid_cells
                .unwrap_or(iep_core::estimated::DEFAULT_ESTIMATED_GRID_CELLS);
            validate_grid(grid)?;
            let key = key_estimated(family.theta0(), n, grid, reps, seed);
            let table = cache.fetch(&key, reps, || {
                simulate_estimated_null(&family, n, grid, reps, seed).map_err(usage)
            })?;
            ("estimated_sup".to_string(), grid, key, table)
        }
    };
    config.statistic = Some(label.clone());
    config.grid_cells = Some(grid);

    if let Some(out) = &args.out {
        write_file(out, &null_csv(&table))?;
    }
    let path = args
        .out
        .clone()
        .or_else(|| cache.path_for(&key).map(|p| display_path(&p)));
    let report = NullTableReport {
        statistic: label,
        grid_cells: grid,
        rows: table.len(),
        path,
        q90: quantile_sorted(&table, 0.90),
        q95: quantile_sorted(&table, 0.95),
        q99: quantile_sorted(&table, 0.99),
    };
    emit(&config, report, None)
}

fn run_rate_experiment(args: RateExperimentArgs) -> Result<()> {
    validate_reps(args.reps)?;
    let mut config = ExperimentConfig::new("rate-experiment", args.seed);
    config.n = Some(args.n.clone());
    config.reps = Some(args.reps);
    config.out = args.out.clone();

    let report = match args.experiment {
        ExperimentChoice::Coupling => {
            let rule = parse_depth(&args.depth)?;
            config.experiment = Some("coupling".to_string());
            config.depth = Some(args.depth.clone());
            iep_core::coupling::rate_experiment(&args.n, args.reps, rule, args.seed)
                .map_err(usage)?
        }
        ExperimentChoice::EpsilonBar => {
            let family = parse_family(&args.family)?;
            config.experiment = Some("epsilon_bar".to_string());
            config.family = Some(args.family.clone());
            epsilon_bar_experiment(&family, &args.n, args.reps, args.seed).map_err(usage)?
        }
    };
    emit_rate(&config, &report, args.out.as_deref())
}
