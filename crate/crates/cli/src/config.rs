//! Experiment settings shared by the command line and JSON config files.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use soc_centrality::betweenness::Endpoints;
use soc_centrality::rwbc::EndpointFlow;
use soc_centrality::simulate::RoutingPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    SocKatz,
    Katz,
    SocBc,
    Bc,
    SocRwbc,
    Rwbc,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::SocKatz => "soc-katz",
            Measure::Katz => "katz",
            Measure::SocBc => "soc-bc",
            Measure::Bc => "bc",
            Measure::SocRwbc => "soc-rwbc",
            Measure::Rwbc => "rwbc",
        }
    }

    pub fn is_charge_aware(self) -> bool {
        matches!(self, Measure::SocKatz | Measure::SocBc | Measure::SocRwbc)
    }

    pub fn needs_pairs(self) -> bool {
        matches!(self, Measure::SocRwbc | Measure::Rwbc)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Sir,
    Hopping,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Sir => "sir",
            Model::Hopping => "hopping",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_FORMAT: &str = "snap";
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_RUNS: usize = 1000;
pub const DEFAULT_DURATION: u64 = 10_000;
pub const DEFAULT_REPS: usize = 30;
pub const DEFAULT_RATIOS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Every setting is optional here; the commands fill in defaults and reject missing required
/// values. Flags given on the command line override the same keys from `--config`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    /// Edge list to load.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// snap (whitespace separated), mtx or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Treat edges as directed arcs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub directed: Option<bool>,
    /// Charge capacity, the most hops possible between refills.
    #[arg(long)]
    pub kappa: Option<usize>,
    /// File with one refill node label per line.
    #[arg(long)]
    pub omega_file: Option<PathBuf>,
    /// Fraction of nodes drawn uniformly as refill nodes.
    #[arg(long)]
    pub omega_ratio: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub measure: Option<Measure>,
    /// Katz damping factor, and the transmission probability of the spreading model.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of source-target pairs to sample for random-walk betweenness and traffic.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// File of `source target` label pairs, one per line.
    #[arg(long)]
    pub pairs_file: Option<PathBuf>,
    /// Betweenness endpoint convention: target or exclude.
    #[arg(long)]
    pub endpoints: Option<Endpoints>,
    /// Random-walk betweenness endpoint convention: uniform or unit.
    #[arg(long)]
    pub rwbc_endpoints: Option<EndpointFlow>,
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Spreading episodes per seed node.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Round limit per spreading episode.
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Particle routing: shortest-feasible or random-feasible.
    #[arg(long)]
    pub policy: Option<RoutingPolicy>,
    /// Time steps of the traffic model.
    #[arg(long)]
    pub duration: Option<u64>,
    /// Expected particles created per time step.
    #[arg(long)]
    pub injection_rate: Option<f64>,
    #[arg(long)]
    pub max_injections: Option<u64>,
    /// Repetitions per refill ratio.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Refill ratios to sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    /// Use tau-b instead of tau-a.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub tau_b: Option<bool>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// `self` with every key that is set in `flags` replaced.
    pub fn overlay(&self, flags: &ExperimentConfig) -> anyhow::Result<Self> {
        let mut base = serde_json::to_value(self)?;
        let top = serde_json::to_value(flags)?;
        if let (Value::Object(b), Value::Object(t)) = (&mut base, top) {
            for (k, v) in t {
                if !v.is_null() {
                    b.insert(k, v);
                }
            }
        }
        Ok(serde_json::from_value(base)?)
    }

    pub fn input(&self) -> anyhow::Result<&Path> {
        match &self.input {
            Some(p) => Ok(p),
            None => bail!("missing --input"),
        }
    }

    pub fn kappa(&self) -> anyhow::Result<usize> {
        self.kappa.ok_or_else(|| anyhow::anyhow!("missing --kappa"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if let Some(r) = self.omega_ratio {
            if !(r > 0.0 && r <= 1.0) {
                bail!("--omega-ratio must lie in (0, 1], got {r}");
            }
        }
        if let Some(rs) = &self.ratios {
            if rs.is_empty() {
                bail!("--ratios is empty");
            }
            for &r in rs {
                if !(r > 0.0 && r <= 1.0) {
                    bail!("refill ratio {r} outside (0, 1]");
                }
            }
        }
        if self.reps == Some(0) {
            bail!("--reps must be at least 1");
        }
        if self.runs == Some(0) {
            bail!("--runs must be at least 1");
        }
        if self.kappa == Some(0) {
            bail!("--kappa must be at least 1");
        }
        Ok(())
    }
}
