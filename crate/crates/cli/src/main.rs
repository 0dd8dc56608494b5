//! `funcirc`: simulate, fit, predict and evaluate functional-circular
//! regression models from the command line.
//!
//! Machine-readable output goes only to the paths given by flags. Progress
//! messages and a JSON run report go to stderr.
//!
//! Exit codes: 0 success, 2 usage or format error, 3 infeasible computation.

mod evaluate;
mod fit;
mod output;
mod predict;
mod report;
mod simulate;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::report::RunReport;

/// Environment variable capping the worker-thread count.
const THREADS_ENV: &str = "FUNC_CIRC_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "funcirc",
    version,
    about = "Regression of a circular response on curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run simulation scenarios and write one aggregate row per cell.
    Simulate(simulate::Args),
    /// Fit a model with a cross-validated bandwidth or neighbour count.
    Fit(fit::Args),
    /// Predict directions (and optional intervals) for new curves.
    Predict(predict::Args),
    /// Prediction error by month from observed/predicted pairs.
    Evaluate(evaluate::Args),
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        usage(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

/// Marker for errors caused by bad invocations rather than bad data.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub(crate) fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use funcirc::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::DegenerateDirection(_)
                | E::EmptyNeighborhood { .. }
                | E::DegenerateDataset(_)
                | E::NoFeasibleBandwidth => 3,
                E::InvalidArgument(_)
                | E::IncompatibleGrids { .. }
                | E::UnsupportedKernel(_)
                | E::Parse { .. }
                | E::Format(_)
                | E::Io(_) => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let echo: Vec<String> = std::env::args().collect();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Fit(a) => fit::run(a),
        Command::Predict(a) => predict::run(a),
        Command::Evaluate(a) => evaluate::run(a),
    });
    match result {
        Ok(outcome) => {
            RunReport::new(echo, outcome, started.elapsed()).emit();
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
