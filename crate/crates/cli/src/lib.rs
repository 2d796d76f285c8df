//! Configuration, stage orchestration and artifact output for the
//! `heraldlab` command-line tool.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("thresholds not met: {0}")]
    Thresholds(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) | CliError::Thresholds(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "heraldlab", version, about = "Heralded non-Gaussian state engineering and synthetic homodyne analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Options {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides `measurement.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `measurement.frames_per_phase`.
    #[arg(long, global = true)]
    pub frames: Option<usize>,
    /// Stage input: frame directory (pca), quadrature CSV (tomo) or manifest (report).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Solve resource parameters and displacements for the target state.
    Plan,
    /// Modulation program, AWG voltage and detection-time model.
    Waveform,
    /// Simulate the heralded state of the plan.
    Herald,
    /// Write synthetic homodyne frames.
    Synth,
    /// Extract temporal modes from stored frames.
    Pca,
    /// Reconstruct the density matrix from PC-1 quadratures.
    Tomo,
    /// Run every stage and write a report.
    Pipeline,
    /// Summarize a finished pipeline run.
    Report,
}

/// Caps the worker pool from `HERALDLAB_THREADS`.
pub fn init_threads() {
    if let Some(n) = std::env::var("HERALDLAB_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match commands::dispatch(cli.command, &cli.opts) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("heraldlab: {e}");
            e.exit_code()
        }
    }
}
