use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "multicoal", version, about = "Multitype Λ-coalescents: rates, simulation, speeds and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate trajectories and write them as CSV.
    Simulate(SimulateArgs),
    /// Print one merger rate, or the transition table at a state.
    Rates(RatesArgs),
    /// Classify coming down from infinity.
    Cdi(CdiArgs),
    /// Tabulate the descent profile or the mean-field flow.
    Flow(FlowArgs),
    /// Build a rate array from a representation and recover it.
    Arrays(ArraysArgs),
    /// Run a verification suite; exits 1 if any check fails.
    Verify(VerifyArgs),
    /// Write the built-in example configurations.
    Examples(ExamplesArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Measure configuration (JSON file, or `builtin:<name>`).
    #[arg(long, value_name = "PATH")]
    pub config: String,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Base seed; MULTICOAL_SEED overrides it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Jump,
    Atomic,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Initial block counts per type, e.g. `3,2`.
    #[arg(long, value_name = "LIST")]
    pub n0: String,
    /// Final time; `inf` runs to absorption.
    #[arg(long, default_value = "inf")]
    pub t_max: String,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    #[arg(long, value_enum, default_value_t = EngineArg::Jump)]
    pub engine: EngineArg,
    /// Output file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Block counts `b` for a single rate.
    #[arg(long, requires_all = ["k", "target"], conflicts_with = "n")]
    pub b: Option<String>,
    /// Participation `k` for a single rate.
    #[arg(long, requires = "b")]
    pub k: Option<String>,
    /// Target type (1-based) for a single rate.
    #[arg(long, requires = "b")]
    pub target: Option<usize>,
    /// State at which to print the full transition table as CSV.
    #[arg(long, required_unless_present = "b")]
    pub n: Option<String>,
}

#[derive(Debug, Args)]
pub struct CdiArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, default_value_t = 1e8)]
    pub q_max: f64,
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Exact,
    Asymptotic,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Output times, either a list `0.1,0.5,1` or a range `start:stop:count`.
    #[arg(long, value_name = "GRID")]
    pub t_grid: String,
    /// `inf`, a total block count (with --descent), or one value per type.
    #[arg(long)]
    pub x0: String,
    /// Treat a scalar x0 as the start of the descent profile.
    #[arg(long)]
    pub descent: bool,
    /// Form of Ψ used by the descent profile.
    #[arg(long, value_enum, default_value_t = FormArg::Exact)]
    pub form: FormArg,
}

#[derive(Debug, Args)]
pub struct ArraysArgs {
    /// JSON representation: `ell`, `b_max`, `rho`, `atoms`.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Largest moment order to report.
    #[arg(long, default_value_t = 10)]
    pub max_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Drift,
    Consistency,
    Jensen,
    Exchange,
    Inequalities,
    Recursion,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Measure configuration; the inequality suite and the random recursion
    /// suite draw their own measures.
    #[arg(long)]
    pub config: Option<String>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, default_value_t = 100_000)]
    pub replicas: usize,
    /// Initial counts; defaults to two blocks per type (four for d = 1).
    #[arg(long)]
    pub n0: Option<String>,
    /// Time horizon for the law comparisons.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Time step of the drift check; defaults to 0.05 over the total rate.
    #[arg(long)]
    pub h: Option<f64>,
    /// Times for the Jensen check.
    #[arg(long, default_value = "0.25,1")]
    pub times: String,
    /// Largest total block count in the recursion suite.
    #[arg(long, default_value_t = 10)]
    pub max_total: usize,
    /// Random measures for the recursion suite without --config.
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    /// Sample points per inequality.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct ExamplesArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub dir: PathBuf,
}
