//! Report serialization and the null-table cache.
//!
//! JSON floats are written with 17 significant digits (`{:.16e}`), enough
//! for an exact `f64` round trip, so a report -- or a cached null table --
//! reloads to bit-identical values.  The same formatting feeds the CSV
//! writers, which keeps cached and freshly simulated runs byte-identical.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use iep_core::report::RateReport;
use iep_core::seed::content_hash;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level shape of every JSON report.
#[derive(Serialize)]
pub struct Document<'a, R: Serialize> {
    pub schema_version: u32,
    pub config: &'a ExperimentConfig,
    pub report: R,
}

struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        debug_assert!(value.is_finite(), "reports never carry non-finite floats");
        write!(writer, "{value:.16e}")
    }
}

/// Serialize to a single JSON line with round-trippable floats.
pub fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Internal(format!("serializing report: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Internal(format!("report is not utf-8: {e}")))
}

/// Print a document to stdout and, when requested, into `out`.  Report
/// files always hold the same bytes as stdout.
pub fn emit<R: Serialize>(config: &ExperimentConfig, report: R, out: Option<&str>) -> Result<()> {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        config,
        report,
    };
    let text = to_json_line(&doc)?;
    print!("{text}");
    if let Some(path) = out {
        write_file(path, &text)?;
    }
    Ok(())
}

/// Like [`emit`], but a `.csv` output path gets a plain table of the rate
/// rows instead of the JSON document (stdout still gets the JSON).
pub fn emit_rate(config: &ExperimentConfig, report: &RateReport, out: Option<&str>) -> Result<()> {
    if let Some(path) = out {
        if path.ends_with(".csv") {
            let doc = Document {
                schema_version: SCHEMA_VERSION,
                config,
                report,
            };
            print!("{}", to_json_line(&doc)?);
            return write_file(path, &rate_csv(report));
        }
    }
    emit(config, report, out)
}

pub fn rate_csv(report: &RateReport) -> String {
    let mut text = String::from("n,median,q25,q75,normalized_median\n");
    for row in &report.rows {
        text.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            row.n, row.median, row.q25, row.q75, row.normalized_median
        ));
    }
    text
}

pub fn null_csv(values: &[f64]) -> String {
    let mut text = String::with_capacity(values.len() * 26 + 8);
    text.push_str("value\n");
    for v in values {
        text.push_str(&format!("{v:.16e}\n"));
    }
    text
}

fn parse_null_csv(text: &str) -> Option<Vec<f64>> {
    let mut lines = text.lines();
    if lines.next()? != "value" {
        return None;
    }
    let mut values = Vec::new();
    for line in lines {
        let v: f64 = line.trim().parse().ok()?;
        if !v.is_finite() {
            return None;
        }
        values.push(v);
    }
    Some(values)
}

pub fn write_file(path: &str, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::Internal(format!("writing {path}: {e}")))
}

/// Null-table cache.  Keys are canonical parameter strings; the file name
/// is `null_<hash>.csv` with the first eight bytes of the key's SHA-256.
pub struct NullCache {
    dir: Option<PathBuf>,
}

impl NullCache {
    pub fn new(dir: &str, disabled: bool) -> Self {
        NullCache {
            dir: (!disabled).then(|| PathBuf::from(dir)),
        }
    }

    pub fn path_for(&self, key: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("null_{:016x}.csv", content_hash(key.as_bytes()))))
    }

    /// Return the sorted table for `key`, reading the cache when a valid
    /// file with exactly `reps` rows exists and simulating (then caching)
    /// otherwise.  A stale or unparsable cache file is overwritten.
    pub fn fetch(
        &self,
        key: &str,
        reps: usize,
        simulate: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let path = match self.path_for(key) {
            Some(p) => p,
            None => return simulate(),
        };
        if let Ok(text) = fs::read_to_string(&path) {
            if let Some(values) = parse_null_csv(&text) {
                if values.len() == reps {
                    return Ok(values);
                }
            }
        }
        let values = simulate()?;
        if let Err(e) = fs::write(&path, null_csv(&values)) {
            // The cache is an optimization; a read-only directory should
            // not fail the run.
            eprintln!("warning: cannot write cache file {}: {e}", path.display());
        }
        Ok(values)
    }
}

/// Best-effort display form for a cache path in reports.
pub fn display_path(path: &Path) -> String {
    path.to_string_lossy().into_owned()
}
