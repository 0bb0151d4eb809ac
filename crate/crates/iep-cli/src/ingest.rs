//! Input-file loading with file/line context on every failure.

use std::fs::File;
use std::io::{BufRead, BufReader};

use iep_core::empirical::{read_observations, Sample};

use crate::error::{data_in, CliError, Result};

/// Load a single-column observation file into a validated sample.
pub fn load_sample(path: &str) -> Result<Sample> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    let obs = read_observations(BufReader::new(file)).map_err(|e| data_in(path, e))?;
    Sample::new(obs).map_err(|e| data_in(path, e))
}

/// Load a long-format CSV (`value_col`, `group_col` named in the header
/// line) into per-group observation vectors, ordered by each group's first
/// appearance.
pub fn load_groups(path: &str, value_col: &str, group_col: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| CliError::Data(format!("{path}:1: {e}")))?,
        None => return Err(CliError::Data(format!("{path}: file is empty"))),
    };
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        columns.iter().position(|c| *c == name).ok_or_else(|| {
            CliError::Data(format!(
                "{path}:1: no column '{name}' in header ({})",
                columns.join(", ")
            ))
        })
    };
    let value_idx = find(value_col)?;
    let group_idx = find(group_col)?;

    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| CliError::Data(format!("{path}:{lineno}: {e}")))?;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(CliError::Data(format!(
                "{path}:{lineno}: expected {} cells, got {}",
                columns.len(),
                cells.len()
            )));
        }
        let value: f64 = cells[value_idx].parse().map_err(|_| {
            CliError::Data(format!(
                "{path}:{lineno}: cannot parse '{}' as a number",
                cells[value_idx]
            ))
        })?;
        if !value.is_finite() {
            return Err(CliError::Data(format!(
                "{path}:{lineno}: non-finite value {value}"
            )));
        }
        let group = cells[group_idx];
        match groups.iter_mut().find(|(g, _)| g == group) {
            Some((_, values)) => values.push(value),
            None => groups.push((group.to_string(), vec![value])),
        }
    }
    if groups.len() < 2 {
        return Err(CliError::Data(format!(
            "{path}: need at least 2 groups, found {}",
            groups.len()
        )));
    }
    Ok(groups)
}

/// Read piecewise-cdf knots: lines of `x,p`, `#` comments allowed, an
/// optional header tolerated on the first line.
pub fn read_knot_file(path: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    let mut xs = Vec::new();
    let mut ps = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| CliError::Data(format!("{path}:{lineno}: {e}")))?;
        let trimmed = line.trim();
        if trimmed.starts_with('#') || trimmed.is_empty() {
            continue;
        }
        let Some((x, p)) = trimmed.split_once(',') else {
            return Err(CliError::Data(format!(
                "{path}:{lineno}: expected 'x,p', got '{trimmed}'"
            )));
        };
        match (x.trim().parse::<f64>(), p.trim().parse::<f64>()) {
            (Ok(x), Ok(p)) => {
                xs.push(x);
                ps.push(p);
            }
            _ if lineno == 1 => continue, // header line
            _ => {
                return Err(CliError::Data(format!(
                    "{path}:{lineno}: cannot parse '{trimmed}' as two numbers"
                )))
            }
        }
    }
    Ok((xs, ps))
}
