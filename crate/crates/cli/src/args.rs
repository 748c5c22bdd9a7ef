use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tpgraph_core::synth::{Family, DEFAULT_CHAIN_R, DEFAULT_DENSITY};
use tpgraph_core::SingularPolicy;

use crate::gamma::parse_gamma;

#[derive(Debug, Parser)]
#[command(
    name = "tpgraph",
    version,
    about = "Structure learning for MTP2 Gaussian graphical models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic model, its true graph and Gaussian samples.
    Gen(GenArgs),
    /// Learn a graph from an observation CSV.
    Learn(LearnArgs),
    /// Compare an estimated edge list with a true one.
    Eval(EvalArgs),
    /// Run a resumable experiment grid from a JSON config.
    Sweep(SweepArgs),
    /// Turn a daily price table into log returns.
    Returns(ReturnsArgs),
    /// Modularity of a graph against sector labels.
    Modularity(ModularityArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub family: Family,
    #[arg(long)]
    pub p: usize,
    /// Number of samples.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_CHAIN_R)]
    pub r: f64,
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    pub density: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for precision.csv, data.csv and truth.tsv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SingularArg {
    Skip,
    Error,
}

impl From<SingularArg> for SingularPolicy {
    fn from(s: SingularArg) -> Self {
        match s {
            SingularArg::Skip => SingularPolicy::Skip,
            SingularArg::Error => SingularPolicy::Error,
        }
    }
}

#[derive(Debug, Args)]
pub struct CenterArgs {
    /// Center each batch before estimating covariance.
    #[arg(long, overrides_with = "no_center")]
    pub center: bool,
    #[arg(long, overrides_with = "center")]
    pub no_center: bool,
}

impl CenterArgs {
    pub fn resolve(&self, default: bool) -> bool {
        if self.center {
            true
        } else if self.no_center {
            false
        } else {
            default
        }
    }
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Batch exponent, a number or a fraction like 7/9.
    #[arg(long, value_parser = parse_gamma, default_value = "7/9")]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_level: Option<usize>,
    #[command(flatten)]
    pub center: CenterArgs,
    /// Accept any gamma in (0, 1).
    #[arg(long)]
    pub unsafe_gamma: bool,
    #[arg(long, value_enum, default_value = "skip")]
    pub singular: SingularArg,
    /// Edge-list output path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub estimated: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output_path` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `parallelism` from the config.
    #[arg(long)]
    pub parallelism: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReturnsArgs {
    /// CSV with a `date` column followed by one column per ticker.
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub center: CenterArgs,
}

#[derive(Debug, Args)]
pub struct ModularityArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// CSV with columns ticker,sector.
    #[arg(long)]
    pub sectors: PathBuf,
    /// Observation CSV whose header names the nodes; without it node `i`
    /// is looked up as ticker `i`.
    #[arg(long)]
    pub data: Option<PathBuf>,
}
