//! The `servoneuro` command-line workbench.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
//! 3 numeric failure (diverged training, non-finite control, failed oracle
//! self-test).

mod commands;
mod config;
mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{EvaluationConfig, WorkbenchConfig};

use crate::error::Error;
use crate::pipeline::TrainerKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "servoneuro",
    version,
    about = "Train and evaluate neural inverse-model controllers for a simulated DC servo"
)]
struct Cli {
    /// TOML configuration file; every key is optional.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides `experiment.seed`.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Overrides `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Also write SVG charts next to the CSV files.
    #[arg(long, global = true)]
    svg: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the open-loop step experiment and write `iolog.csv`.
    Collect,

    /// Train an inverse-model controller from an I/O log.
    Train {
        /// I/O log to train on [default: <out>/iolog.csv].
        #[arg(long, value_name = "PATH")]
        log: Option<PathBuf>,

        /// Overrides `trainer.kind`.
        #[arg(long, value_enum)]
        trainer: Option<TrainerArg>,
    },

    /// Run a controller in closed loop for every evaluation seed.
    Control {
        /// Network file [default: <out>/controller.net].
        network: Option<PathBuf>,

        /// Use the analytic inverse on the noise-free plant instead of a
        /// network (harness self-test).
        #[arg(long, conflicts_with = "network")]
        oracle: bool,
    },

    /// Compare controllers in closed loop. Without arguments, runs the full
    /// LM-versus-BR study (collect, train both, evaluate) once per seed.
    Compare {
        /// Network files to compare (at least two).
        networks: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum TrainerArg {
    Lm,
    Br,
    EarlyStop,
}

impl From<TrainerArg> for TrainerKind {
    fn from(t: TrainerArg) -> Self {
        match t {
            TrainerArg::Lm => TrainerKind::Lm,
            TrainerArg::Br => TrainerKind::Br,
            TrainerArg::EarlyStop => TrainerKind::EarlyStop,
        }
    }
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(exit_code(&e), e.to_string())
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        Error::StepFailed { .. }
        | Error::TrainingDiverged { .. }
        | Error::NonFiniteControl { .. } => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

/// Parses `std::env::args` and runs the selected command.
pub fn run() -> i32 {
    run_with(std::env::args_os())
}

/// Runs the workbench with an explicit argument list (the first item is the
/// program name) and returns the process exit code.
pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => WorkbenchConfig::load(path).map_err(|e| match e {
            // An unreadable config file is a usage problem, not an output failure.
            Error::Io { .. } => Failure::new(EXIT_USAGE, e.to_string()),
            other => other.into(),
        })?,
        None => WorkbenchConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    let ctx = commands::Context {
        cfg,
        svg: cli.svg,
    };
    match cli.command {
        Command::Collect => commands::collect(&ctx),
        Command::Train { log, trainer } => commands::train(&ctx, log, trainer.map(Into::into)),
        Command::Control { network, oracle } => commands::control(&ctx, network, oracle),
        Command::Compare { networks } => commands::compare(&ctx, &networks),
    }
}
