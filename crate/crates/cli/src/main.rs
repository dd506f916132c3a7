//! `gridnls`: metric-grid NLS experiments from the command line.
//!
//! Exit status is 0 on success, 1 when a check finds a violation or anomaly
//! and 2 on usage, configuration or I/O errors.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridnls::Execution;

use commands::Context;
use config::{resolve_seed, FileConfig, Format, Problems, SEED_ENV};
use error::CliError;
use output::Sink;

#[derive(Debug, Parser)]
#[command(name = "gridnls", version, about = "Nonlinear Schrodinger ground states on truncated cubic metric grids")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML file with default settings; flags take precedence
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// RNG seed [env: GRIDNLS_SEED] [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of stdout
    #[arg(short, long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Output format [default: json]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Leave the generation time out of JSON output
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Run batches on one thread
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    BuildGrid(commands::BuildGrid),
    CheckInequalities(commands::CheckInequalities),
    EstimateConstants(commands::EstimateConstants),
    GroundState(commands::GroundState),
    PhaseDiagram(commands::PhaseDiagram),
    Probe(commands::Probe),
}

fn run(cli: Cli) -> Result<output::Status, CliError> {
    let Cli { common, command } = cli;
    let file = FileConfig::load(common.config.as_deref())?;
    let mut problems = Problems::default();
    let seed = resolve_seed(common.seed, file.seed, std::env::var(SEED_ENV).ok(), &mut problems);
    let sequential = common.sequential || file.sequential.unwrap_or(false);
    let ctx = Context {
        sink: Sink {
            format: common.format.or(file.format).unwrap_or(Format::Json),
            path: common.output.or_else(|| file.output.clone()),
            timestamp: !common.no_timestamp,
            seed,
        },
        seed,
        execution: if sequential { Execution::Sequential } else { Execution::Parallel },
        problems,
    };
    match command {
        Command::BuildGrid(c) => c.run(ctx, file),
        Command::CheckInequalities(c) => c.run(ctx, file),
        Command::EstimateConstants(c) => c.run(ctx, file),
        Command::GroundState(c) => c.run(ctx, file),
        Command::PhaseDiagram(c) => c.run(ctx, file),
        Command::Probe(c) => c.run(ctx, file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
