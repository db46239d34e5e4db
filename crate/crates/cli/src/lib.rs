//! Command-line pipeline: generate data, train, evaluate, trace, export.

mod commands;
mod config;
mod error;
pub mod csv;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{cmd_datagen, cmd_eval, cmd_export, cmd_trace, cmd_train, EvalRow, TraceSource, TrainOptions};
pub use config::{IoConfig, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "symrom", version, about = "Symplectic reduced-order models for Hamiltonian PDEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// Architecture exactly as configured.
    Full,
    /// Drop the G-reflectors.
    HenonOnly,
    /// Drop the full-space Hénon net.
    GreflectorOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TraceMode {
    /// Latent rollout from the first state.
    Rollout,
    /// Encode/decode every stored state.
    Reconstruct,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the configured system and write a snapshot dataset.
    Datagen {
        #[arg(long)]
        config: PathBuf,
        /// Output dataset path (defaults to io.dataset).
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Train a model; writes model.ckpt, model.json and loss.csv into --out.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, value_enum, default_value = "full")]
        variant: Variant,
        /// Write 0 in the seconds column of loss.csv.
        #[arg(long)]
        no_timing: bool,
    },
    /// Reconstruction MSE per method; writes metrics.csv into --out.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        /// Comma-separated subset of sym, henon-only, greflector-only, cotangent.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Hamiltonian along a model trajectory; writes trace.csv into --out.
    Trace {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Take the initial state and system from this dataset.
        #[arg(long, conflicts_with = "params")]
        dataset: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        trajectory: usize,
        /// System from --config with these comma-separated parameters.
        #[arg(long, value_delimiter = ',', requires = "config")]
        params: Option<Vec<f64>>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of steps (defaults to the dataset horizon).
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum, default_value = "rollout")]
        mode: TraceMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write each trajectory of a dataset as CSV (t, q_1..q_N, p_1..p_N).
    Export {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs `f` on a dedicated pool when a thread count is given.
pub(crate) fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match threads {
        None => f(),
        Some(0) => Err(CliError::Validation("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?
            .install(f),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Datagen { config, dataset, seed, threads } => {
            cmd_datagen(&config, dataset.as_deref(), seed, threads).map(|_| ())
        }
        Command::Train { config, dataset, out, seed, threads, epochs, variant, no_timing } => cmd_train(
            &config,
            &TrainOptions { dataset, out, seed, threads, epochs, variant, timing: !no_timing },
        )
        .map(|_| ()),
        Command::Eval { dataset, checkpoints, methods, out, threads } => {
            cmd_eval(&dataset, &checkpoints, methods.as_deref(), out.as_deref(), threads).map(|_| ())
        }
        Command::Trace { checkpoint, dataset, trajectory, params, config, steps, mode, out } => {
            let source = match (dataset, params, config) {
                (Some(d), _, _) => TraceSource::Dataset { path: d, trajectory },
                (None, Some(p), Some(c)) => TraceSource::Params { config: c, params: p },
                _ => {
                    return Err(CliError::Validation(
                        "trace needs --dataset or --config with --params".into(),
                    ))
                }
            };
            cmd_trace(&checkpoint, &source, steps, mode, out.as_deref()).map(|_| ())
        }
        Command::Export { dataset, format, out } => {
            cmd_export(&dataset, &format, out.as_deref()).map(|_| ())
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
