//! Experiment runner behind `vqlab run --config <path> [--seed <u64>] [--out <dir>]`.
//!
//! Sweep entries run on a rayon pool; `VQLAB_THREADS` caps its size.

mod config;
mod csv;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::dynamics::run_toy;
use crate::error::{Result, VqError};
use crate::training::run_training;

pub use config::{
    canonicalize, load_experiment, parse_experiment, Experiment, ExperimentFile, DEFAULT_EMA_DECAY,
};
pub use csv::{
    emit_csv, emit_toy_csv, format_float, metrics_csv, parse_metrics_csv, toy_csv, METRICS_HEADER,
    TOY_HEADER,
};

pub const THREADS_ENV: &str = "VQLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "vqlab", version, about = "Vector-quantization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Experiment file; `<path>.cfg` is tried when `<path>` does not exist.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory relative output paths are resolved against.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Output file for one entry of a sweep: `dir/name.csv` becomes
/// `dir/name_K<size>.csv`.
pub fn sweep_output_path(output: &Path, size: usize) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match output.extension() {
        Some(ext) => format!("{stem}_K{size}.{}", ext.to_string_lossy()),
        None => format!("{stem}_K{size}"),
    };
    output.with_file_name(name)
}

/// Thread cap from `VQLAB_THREADS`; `None` leaves the choice to rayon.
pub fn sweep_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(VqError::InvalidArgument(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

/// Runs an experiment and writes its CSV files. Relative output paths are
/// resolved against `out_dir`. Returns the written paths.
pub fn execute(file: &ExperimentFile, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let output = out_dir.join(&file.output);
    match &file.experiment {
        Experiment::Train(cfg) => {
            let rows = run_training(cfg)?;
            emit_csv(&rows, &output)?;
            Ok(vec![output])
        }
        Experiment::Toy(spec) => {
            let trace = run_toy(spec)?;
            emit_toy_csv(&trace, &output)?;
            Ok(vec![output])
        }
        Experiment::Sweep {
            base,
            codebook_sizes,
        } => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(n) = sweep_threads()? {
                builder = builder.num_threads(n);
            }
            let pool = builder
                .build()
                .map_err(|e| VqError::InvalidArgument(format!("thread pool: {e}")))?;
            let runs: Vec<_> = pool.install(|| {
                codebook_sizes
                    .par_iter()
                    .map(|&k| {
                        let mut cfg = base.clone();
                        cfg.codebook_size = k;
                        run_training(&cfg).map(|rows| (k, rows))
                    })
                    .collect()
            });
            let mut written = Vec::with_capacity(runs.len());
            for run in runs {
                let (k, rows) = run?;
                let path = sweep_output_path(&output, k);
                emit_csv(&rows, &path)?;
                written.push(path);
            }
            Ok(written)
        }
    }
}

/// Executes parsed command-line arguments.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Run(args) => {
            let (_, mut file) = load_experiment(&args.config)?;
            if let Some(seed) = args.seed {
                file.experiment.set_seed(seed);
            }
            let out_dir = args.out.unwrap_or_else(|| PathBuf::from("."));
            execute(&file, &out_dir)
        }
    }
}

/// Entry point for the binary: parses `args`, runs, and reports the written
/// files on stdout or one diagnostic line on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
