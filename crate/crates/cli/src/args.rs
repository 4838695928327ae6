use std::path::PathBuf;

use aoi_core::chain::SolverMethod;
use aoi_core::KernelConvention;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "aoi-kit",
    version,
    about = "Stationary age of information for discrete-time Ber/G/1/1 systems",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form AoI distribution (pmf, cdf, mean).
    Analytic(AnalyticArgs),
    /// Numerical stationary solve of the truncated age-state chain.
    Chain(ChainArgs),
    /// Slot-level Monte Carlo simulation.
    Simulate(SimulateArgs),
    /// Datasets for the pmf, cdf and mean-sweep figure panels.
    Figure3(Figure3Args),
    /// Cross-check the analytic, chain and (optionally) simulation paths.
    Compare(CompareArgs),
    /// Re-execute the command recorded in a run manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ServiceArgs {
    /// Geometric service with completion probability GAMMA.
    #[arg(long, value_name = "GAMMA")]
    pub geom: Option<f64>,
    /// Deterministic service of K slots.
    #[arg(long, value_name = "K")]
    pub det: Option<usize>,
    /// JSON service descriptor file.
    #[arg(long, value_name = "FILE")]
    pub service: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kernel {
    Paper,
    Natural,
}

impl From<Kernel> for KernelConvention {
    fn from(k: Kernel) -> Self {
        match k {
            Kernel::Paper => KernelConvention::Paper,
            Kernel::Natural => KernelConvention::Natural,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Auto,
    Power,
    Direct,
}

impl From<Solver> for SolverMethod {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Auto => SolverMethod::Auto,
            Solver::Power => SolverMethod::Power,
            Solver::Direct => SolverMethod::Direct,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Emit only one format (default: both).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl OutputArgs {
    pub fn wants(&self, f: Format) -> bool {
        self.format.is_none_or(|x| x == f)
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyticArgs {
    /// Arrival probability per slot.
    #[arg(long)]
    pub p: f64,
    #[command(flatten)]
    pub service: ServiceArgs,
    /// Truncation horizon (default: grow until the tail is below --tol).
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "paper")]
    pub kernel: Kernel,
    /// Use the general-service formulas even for geometric service.
    #[arg(long)]
    pub force_general: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub p: f64,
    #[command(flatten)]
    pub service: ServiceArgs,
    /// Truncation bound N on the AoI component.
    #[arg(long, default_value_t = 200)]
    pub nmax: usize,
    /// Boundary-mass level above which a warning is printed.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "paper")]
    pub kernel: Kernel,
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: Solver,
    #[arg(long, default_value_t = 200_000)]
    pub max_iter: usize,
    /// Also write the kernel as CSV triplets.
    #[arg(long)]
    pub dump_kernel: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub p: f64,
    #[command(flatten)]
    pub service: ServiceArgs,
    /// Slots per replication.
    #[arg(long = "T", default_value_t = 1_000_000)]
    pub slots: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub reps: u32,
    #[arg(long, default_value_t = 0)]
    pub warmup: u64,
    #[arg(long, value_enum, default_value = "paper")]
    pub kernel: Kernel,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Figure3Args {
    /// Comma-separated p:gamma pairs for the pmf/cdf panels.
    #[arg(long, default_value = "0.15:0.3,0.35:0.7")]
    pub pairs: String,
    /// Comma-separated service probabilities for the mean sweep.
    #[arg(long, default_value = "0.3,0.5,0.7")]
    pub gammas: String,
    /// Number of interior rho_d grid points in (0, 1).
    #[arg(long, default_value_t = 19)]
    pub rho_steps: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub p: f64,
    #[command(flatten)]
    pub service: ServiceArgs,
    /// Chain truncation bound.
    #[arg(long, default_value_t = 200)]
    pub nmax: usize,
    /// Largest accepted pointwise |pmf difference| between analytic and chain.
    #[arg(long, default_value_t = 1e-9)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "paper")]
    pub kernel: Kernel,
    /// Also simulate this many slots and check the TV distance to the chain.
    #[arg(long = "T")]
    pub slots: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.003)]
    pub tv_threshold: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    /// Manifest written by a previous run.
    pub manifest: PathBuf,
    /// Write into this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
