//! End-to-end tests of the `iep` binary: report shape, determinism, the
//! null-table cache, exit codes, and error context.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_iep")
}

/// Fresh scratch directory per test so cache files never cross-talk.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("iep-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    run_with_env(dir, args, &[])
}

fn run_with_env(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.current_dir(dir).args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

fn write_uniform(dir: &Path, name: &str, n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for _ in 0..n {
        text.push_str(&format!("{}\n", rng.random::<f64>()));
    }
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn report_half(stdout: &str) -> &str {
    stdout
        .split_once("\"report\":")
        .expect("document has a report")
        .1
}

#[test]
fn gof_report_shape_and_determinism() {
    let dir = scratch("gof-shape");
    let data = write_uniform(&dir, "d.csv", 150, 5);
    let args = [
        "gof", "--data", &data, "--model", "uniform", "--reps", "300", "--grid-cells", "256",
        "--seed", "7", "--out", "r.json", "--no-cache",
    ];
    let first = run_in(&dir, &args);
    assert_eq!(first.status.code(), Some(0), "stderr: {}", stderr_of(&first));
    let text = stdout_of(&first);
    assert!(text.starts_with("{\"schema_version\":1,\"config\":"), "got: {text}");
    assert!(text.contains("\"subcommand\":\"gof\""));
    assert!(text.contains("\"statistic\":\"integrated_ks\""));
    assert!(text.contains("\"critical_values\":{\"0.90\":"));

    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let p = doc["report"]["p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0, "p-value {p}");
    assert_eq!(doc["report"]["sample_sizes"][0].as_u64(), Some(150));
    assert_eq!(doc["report"]["null_reps"].as_u64(), Some(300));
    assert_eq!(doc["report"]["low_reps_warning"].as_bool(), Some(true));

    // The --out file holds exactly the stdout bytes.
    assert_eq!(fs::read_to_string(dir.join("r.json")).unwrap(), text);

    // Same config, same bytes.
    let second = run_in(&dir, &args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn cache_round_trips_to_identical_reports() {
    let dir = scratch("gof-cache");
    let data = write_uniform(&dir, "d.csv", 100, 9);
    let args = [
        "gof", "--data", &data, "--model", "uniform", "--reps", "200", "--grid-cells", "128",
        "--seed", "3",
    ];
    let cold = run_in(&dir, &args);
    assert_eq!(cold.status.code(), Some(0), "stderr: {}", stderr_of(&cold));
    let caches: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            (name.starts_with("null_") && name.ends_with(".csv")).then_some(name)
        })
        .collect();
    assert_eq!(caches.len(), 1, "one cache file, got {caches:?}");
    let table = fs::read_to_string(dir.join(&caches[0])).unwrap();
    assert!(table.starts_with("value\n"));
    assert_eq!(table.lines().count(), 201, "header plus one row per replicate");

    let warm = run_in(&dir, &args);
    assert_eq!(cold.stdout, warm.stdout, "cache hit changed the report");

    // A corrupt cache file is resimulated, not trusted.
    fs::write(dir.join(&caches[0]), "value\nnot-a-number\n").unwrap();
    let healed = run_in(&dir, &args);
    assert_eq!(cold.stdout, healed.stdout);
    let restored = fs::read_to_string(dir.join(&caches[0])).unwrap();
    assert_eq!(restored, table, "cache file was rewritten with the simulated table");
}

#[test]
fn simulate_null_seeds_the_test_cache() {
    let dir = scratch("simnull");
    let data = write_uniform(&dir, "d.csv", 80, 2);
    let pre = run_in(
        &dir,
        &[
            "simulate-null", "--statistic", "integrated_ks", "--grid-cells", "128", "--reps",
            "250", "--seed", "11", "--out", "table.csv",
        ],
    );
    assert_eq!(pre.status.code(), Some(0), "stderr: {}", stderr_of(&pre));
    assert!(stdout_of(&pre).contains("\"q95\":"));
    let table = fs::read_to_string(dir.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 251);

    let cache_files = || {
        fs::read_dir(&dir)
            .unwrap()
            .filter(|e| {
                let name = e.as_ref().unwrap().file_name().into_string().unwrap();
                name.starts_with("null_")
            })
            .count()
    };
    assert_eq!(cache_files(), 1);

    // The gof run must pick up the presimulated table: same key, no new
    // cache file, and a report identical to an uncached run.
    let cached = run_in(
        &dir,
        &[
            "gof", "--data", &data, "--model", "uniform", "--reps", "250", "--grid-cells", "128",
            "--seed", "11",
        ],
    );
    assert_eq!(cached.status.code(), Some(0));
    assert_eq!(cache_files(), 1, "gof reused the simulate-null table");

    let fresh = run_in(
        &dir,
        &[
            "gof", "--data", &data, "--model", "uniform", "--reps", "250", "--grid-cells", "128",
            "--seed", "11", "--no-cache",
        ],
    );
    assert_eq!(
        report_half(&stdout_of(&cached)),
        report_half(&stdout_of(&fresh)),
        "cached and fresh runs disagree"
    );
}

#[test]
fn parallelism_degree_never_changes_bytes() {
    let dir = scratch("threads");
    let x = write_uniform(&dir, "x.csv", 90, 4);
    let y = write_uniform(&dir, "y.csv", 110, 5);
    let args = [
        "twosample", "--x", &x, "--y", &y, "--q", "2", "--reps", "400", "--seed", "1",
        "--no-cache",
    ];
    let one = run_with_env(&dir, &args, &[("IEP_THREADS", "1")]);
    let eight = run_with_env(&dir, &args, &[("IEP_THREADS", "8")]);
    assert_eq!(one.status.code(), Some(0), "stderr: {}", stderr_of(&one));
    assert_eq!(one.stdout, eight.stdout);
}

#[test]
fn ksample_reads_long_format_and_orders_groups_by_appearance() {
    let dir = scratch("ksample");
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut text = String::from("value,group\n");
    for i in 0..240 {
        let g = ["b", "a", "c"][i % 3];
        text.push_str(&format!("{},{g}\n", rng.random::<f64>()));
    }
    fs::write(dir.join("long.csv"), text).unwrap();
    let out = run_in(
        &dir,
        &["ksample", "--data", "long.csv", "--reps", "200", "--seed", "6", "--no-cache"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["report"]["statistic"].as_str(), Some("k_sample_sup"));
    assert_eq!(doc["report"]["sample_sizes"].as_array().unwrap().len(), 3);
}

#[test]
fn model_file_defines_a_piecewise_cdf() {
    let dir = scratch("modelfile");
    let data = write_uniform(&dir, "d.csv", 60, 8);
    fs::write(dir.join("knots.csv"), "x,p\n0,0\n0.5,0.6\n1,1\n").unwrap();
    let out = run_in(
        &dir,
        &[
            "gof", "--data", &data, "--model", "file:knots.csv", "--reps", "150", "--grid-cells",
            "64", "--seed", "2", "--no-cache",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
}

#[test]
fn localtime_writes_a_csv_table() {
    let dir = scratch("localtime");
    let out = run_in(
        &dir,
        &["localtime", "--n", "128,256", "--reps", "50", "--seed", "7", "--out", "growth.csv"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("\"experiment\":\"self_intersection_growth\""));
    let table = fs::read_to_string(dir.join("growth.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "n,median,q25,q75,normalized_median");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("128,"));
    assert!(lines[2].starts_with("256,"));
}

#[test]
fn rate_experiment_runs_both_experiments() {
    let dir = scratch("rate");
    let coupling = run_in(
        &dir,
        &[
            "rate-experiment", "--experiment", "coupling", "--n", "64,256", "--reps", "40",
            "--seed", "3",
        ],
    );
    assert_eq!(coupling.status.code(), Some(0), "stderr: {}", stderr_of(&coupling));
    assert!(stdout_of(&coupling).contains("\"experiment\":\"coupling_distance_integrated\""));

    let eps = run_in(
        &dir,
        &[
            "rate-experiment", "--experiment", "epsilon_bar", "--n", "64,128", "--reps", "30",
            "--seed", "4", "--family", "exp:1.5",
        ],
    );
    assert_eq!(eps.status.code(), Some(0), "stderr: {}", stderr_of(&eps));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&eps)).unwrap();
    assert_eq!(doc["report"]["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn estimated_fits_and_reports_theta_hat() {
    let dir = scratch("estimated");
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut text = String::new();
    for _ in 0..120 {
        let u: f64 = rng.random();
        text.push_str(&format!("{}\n", -(1.0 - u).ln() / 2.0));
    }
    fs::write(dir.join("e.csv"), text).unwrap();
    let out = run_in(
        &dir,
        &["estimated", "--data", "e.csv", "--reps", "200", "--seed", "5", "--no-cache"],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let theta = doc["report"]["theta_hat"].as_f64().unwrap();
    assert!((theta - 2.0).abs() < 0.6, "fitted rate {theta} far from 2");
    assert_eq!(doc["report"]["statistic"].as_str(), Some("estimated_sup"));
}

#[test]
fn exit_codes_separate_usage_data_and_parse_errors() {
    let dir = scratch("exits");
    let data = write_uniform(&dir, "d.csv", 30, 1);

    // Missing file: data error naming the path.
    let missing = run_in(&dir, &["gof", "--data", "absent.csv", "--model", "uniform"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr_of(&missing).contains("absent.csv"));

    // Zero replicates: usage error before any computation.
    let zero = run_in(&dir, &["gof", "--data", &data, "--model", "uniform", "--reps", "0"]);
    assert_eq!(zero.status.code(), Some(1));
    assert!(stderr_of(&zero).contains("--reps"));

    // Unknown model spec: usage error.
    let model = run_in(&dir, &["gof", "--data", &data, "--model", "pareto:3"]);
    assert_eq!(model.status.code(), Some(1));

    // Unknown flag: usage error (clap's default would be 2; ours is 1).
    let flag = run_in(&dir, &["gof", "--data", &data, "--model", "uniform", "--frobnicate"]);
    assert_eq!(flag.status.code(), Some(1));

    // Malformed data line: data error with file and line.
    fs::write(dir.join("bad.csv"), "0.4\nnope\n").unwrap();
    let bad = run_in(&dir, &["gof", "--data", "bad.csv", "--model", "uniform"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr_of(&bad).contains("bad.csv:2"));

    // Long CSV without the group column: data error naming the column.
    fs::write(dir.join("narrow.csv"), "value,cohort\n0.5,a\n0.6,b\n").unwrap();
    let col = run_in(&dir, &["ksample", "--data", "narrow.csv"]);
    assert_eq!(col.status.code(), Some(2));
    assert!(stderr_of(&col).contains("'group'"));

    // Out-of-support observation for the fitted family: data error.
    fs::write(dir.join("neg.csv"), "1.0\n-2.0\n0.5\n").unwrap();
    let neg = run_in(&dir, &["estimated", "--data", "neg.csv", "--reps", "100"]);
    assert_eq!(neg.status.code(), Some(2));
    assert!(stderr_of(&neg).contains("neg.csv:2"));

    // Weighted change-point scan needs four observations.
    fs::write(dir.join("three.csv"), "0.1\n0.5\n0.9\n").unwrap();
    let small = run_in(&dir, &["changepoint", "--data", "three.csv", "--weighted"]);
    assert_eq!(small.status.code(), Some(1));

    // Replicate floor for the growth experiment comes from the library.
    let lt = run_in(&dir, &["localtime", "--n", "64", "--reps", "10"]);
    assert_eq!(lt.status.code(), Some(1));
    assert!(stderr_of(&lt).contains("50"));

    // Bad thread cap: usage error.
    let threads = run_with_env(
        &dir,
        &["localtime", "--n", "64", "--reps", "50"],
        &[("IEP_THREADS", "none")],
    );
    assert_eq!(threads.status.code(), Some(1));
    assert!(stderr_of(&threads).contains("IEP_THREADS"));
}

#[test]
fn help_and_version_exit_cleanly() {
    let dir = scratch("help");
    let help = run_in(&dir, &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout_of(&help).contains("Usage"));
    let version = run_in(&dir, &["--version"]);
    assert_eq!(version.status.code(), Some(0));

    let sub = run_in(&dir, &["gof", "--help"]);
    assert_eq!(sub.status.code(), Some(0));
    assert!(stdout_of(&sub).contains("--model"));
}
