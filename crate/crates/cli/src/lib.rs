//! Command-line front end: load a network, choose refill nodes, compute centralities, run the
//! simulators and correlate expected with realized scores.
//!
//! Every file written embeds the fully resolved settings. CSV files carry them on a leading `#`
//! line, JSON files under `provenance`. Nothing time-dependent is recorded, so a rerun with the
//! same settings reproduces every file byte for byte.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

pub use commands::run;
pub use config::{ExperimentConfig, Measure, Model};

#[derive(Debug, Parser)]
#[command(name = "soc", version, about = "Charge-aware centrality experiments")]
pub struct Cli {
    /// JSON settings file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log more (repeat for more detail).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute one centrality measure.
    Centrality {
        #[command(flatten)]
        cfg: ExperimentConfig,
        /// Compare the kernels with brute-force references instead (small graphs only).
        #[arg(long)]
        verify: bool,
    },
    /// Run a spreading or traffic simulation and write realized scores.
    Simulate {
        #[command(flatten)]
        cfg: ExperimentConfig,
    },
    /// Kendall tau between an expected and a realized score file, or over an experiment tree.
    Correlate(CorrelateArgs),
    /// Sweep refill ratios with repetitions: centrality, simulation and correlation per run.
    Experiment {
        #[command(flatten)]
        cfg: ExperimentConfig,
    },
    /// Write a synthetic network as a SNAP edge list.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long, required_unless_present = "batch", requires = "realized")]
    pub expected: Option<PathBuf>,
    #[arg(long, requires = "expected")]
    pub realized: Option<PathBuf>,
    /// Experiment directory with `ratio_*/rep_*/{expected,realized}.csv`.
    #[arg(long, conflicts_with_all = ["expected", "realized"])]
    pub batch: Option<PathBuf>,
    #[arg(long)]
    pub tau_b: bool,
    /// Output directory (defaults to standard output, or the batch directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Path,
    Cycle,
    Star,
    Grid,
    /// Two square grids joined by a chain of nodes.
    Bridged,
    /// Preferential attachment.
    Ba,
    /// Independent edges with probability `p`.
    Er,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: GraphKind,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// Links per new node (ba).
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Edge probability (er).
    #[arg(long)]
    pub p: Option<f64>,
    /// Edges in the connecting chain (bridged).
    #[arg(long, default_value_t = 1)]
    pub bridge: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub directed: bool,
    /// Output file (defaults to standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Raised when `--verify` finds a kernel disagreeing with its reference.
#[derive(Debug)]
pub struct VerifyFailed(pub Vec<String>);

impl std::fmt::Display for VerifyFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0.join(", "))
    }
}

impl std::error::Error for VerifyFailed {}

/// 2 for numerical failures, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerifyFailed>().is_some() {
        return 2;
    }
    match err.downcast_ref::<soc_centrality::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}
