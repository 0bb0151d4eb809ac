//! `iep` — deterministic command-line harness for integrated empirical
//! process statistics.
//!
//! Every subcommand prints a JSON document `{schema_version, config,
//! report}` to stdout; identical configurations produce byte-identical
//! output, independent of the parallelism degree (`IEP_THREADS`).
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod args;
mod commands;
mod config;
mod error;
mod ingest;
mod output;

use clap::error::ErrorKind;
use clap::Parser;

use crate::error::CliError;

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version arrive as clap "errors" but are successes.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("{e}");
        return e.exit_code();
    }
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

/// Cap replicate-level parallelism from `IEP_THREADS`.  Results never
/// depend on the degree — replicates are merged by index — so this only
/// trades wall-clock time for core count.
fn init_threads() -> Result<(), CliError> {
    match std::env::var("IEP_THREADS") {
        Ok(value) => {
            let threads: usize = value
                .trim()
                .parse()
                .ok()
                .filter(|t| *t >= 1)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "IEP_THREADS must be a positive integer, got '{value}'"
                    ))
                })?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| CliError::Internal(format!("building the thread pool: {e}")))
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(CliError::Usage(format!("IEP_THREADS is not readable: {e}"))),
    }
}
