//! `positools`: curvature positivity, characteristic forms, positive maps and the
//! verification suites from the command line.
//!
//! Every command writes one JSON document to stdout. Exit codes: 0 success,
//! 1 a verification or search check failed, 2 invalid input, 3 internal error.
//! `POSITOOLS_THREADS` caps the worker pool.

mod commands;
mod doc;
mod search;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::doc::{input, internal, CliError};

#[derive(Parser)]
#[command(name = "positools", version, about = "Pointwise positivity of Hermitian curvature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Griffiths, (dual) Nakano and k-level verdicts for a curvature tensor.
    Classify {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Restarts of the rank-constrained search.
        #[arg(long, default_value_t = 64)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Schur form of a partition, optionally tested for positivity.
    Schur {
        file: PathBuf,
        /// Comma-separated parts, e.g. `2,1`.
        #[arg(long)]
        partition: String,
        #[arg(long)]
        test_positivity: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Seeded checks of an identity; exits 1 if any trial misses the suite tolerance.
    Verify {
        #[arg(long, value_enum)]
        suite: verify::Suite,
        /// Defaults to 100 for tilde-c and plane, 10 otherwise.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON array of tensor documents to use instead of random trials.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Double mixed discriminant search; exits 1 on REVIEW flags or a failed invariant.
    Search {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Keep the records in `--log` and run only the missing indices.
        #[arg(long)]
        resume: bool,
    },
    /// A named map with its Choi matrix and positivity profile.
    Zoo {
        name: String,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        budget: usize,
    },
    /// A seeded random tensor document.
    Tensor {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value = "random")]
        family: String,
        /// Number of factors for the nakano and dual-nakano families.
        #[arg(long, default_value_t = 4)]
        terms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn emit(value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(internal)?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(internal(e)),
        _ => Ok(()),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("POSITOOLS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| input(format!("POSITOOLS_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(internal)
}

/// Returns `Ok(false)` when a check ran but did not pass.
fn run(cmd: Command) -> Result<bool, CliError> {
    configure_threads()?;
    match cmd {
        Command::Classify { file, tol, budget, seed } => emit(&commands::classify(&file, tol, budget, seed)?)?,
        Command::Schur {
            file,
            partition,
            test_positivity,
            tol,
        } => emit(&commands::schur(&file, &partition, test_positivity, tol)?)?,
        Command::Verify {
            suite,
            trials,
            seed,
            fixture,
        } => {
            let rep = verify::verify(suite, trials, seed, fixture.as_deref())?;
            emit(&rep)?;
            return Ok(rep.passed);
        }
        Command::Search { config, log, resume } => {
            let rep = search::search(&config, &log, resume)?;
            emit(&rep)?;
            return Ok(rep.passed());
        }
        Command::Zoo {
            name,
            dim,
            level,
            rows,
            cols,
            seed,
            budget,
        } => {
            let args = commands::ZooArgs {
                dim,
                level,
                rows,
                cols,
                seed,
                restarts: budget,
            };
            emit(&commands::zoo(&name, &args)?)?
        }
        Command::Tensor {
            n,
            r,
            family,
            terms,
            seed,
        } => emit(&commands::tensor(n, r, &family, terms, seed)?)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("positools: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
