//! Command-line driver: ingest data, budget noise, produce release bundles,
//! and compare pipeline configurations.

mod commands;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "privcube",
    version,
    about = "Differentially private release of datacubes and marginals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a CSV of records into a contingency vector artifact.
    Ingest(IngestArgs),
    /// Compute noise budgets and the predicted objective (no data needed).
    Budget(BudgetArgs),
    /// Run one private release end to end and write the bundle.
    Release(ReleaseArgs),
    /// Compare pipeline configurations by Monte Carlo.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyName {
    /// Noisy base counts (S = I).
    Identity,
    /// The workload's own marginals.
    Marginals,
    /// Fourier coefficients covering the workload.
    Fourier,
    /// Binary tree of block sums.
    Hierarchical,
    /// Marginals from --user-marginals; each workload marginal must be
    /// dominated by one of them (assigned to the first that does).
    User,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BudgetName {
    Uniform,
    Optimal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecoveryName {
    /// The strategy's canonical recovery.
    Natural,
    /// Generalized least squares under the budgeted noise.
    Gls,
}

#[derive(Args)]
struct PrivacyArgs {
    /// Privacy parameter epsilon.
    #[arg(long)]
    epsilon: f64,
    /// Switches to (epsilon, delta) privacy with Gaussian noise.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct StrategyArgs {
    #[arg(long, value_enum, default_value = "marginals")]
    strategy: StrategyName,
    /// Strategy marginals file (workload format); required for --strategy user.
    #[arg(long)]
    user_marginals: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    workload: PathBuf,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    privacy: PrivacyArgs,
    #[arg(long, value_enum, default_value = "optimal")]
    budget: BudgetName,
    /// Output directory; tables print to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReleaseArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    workload: PathBuf,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    privacy: PrivacyArgs,
    #[arg(long, value_enum, default_value = "optimal")]
    budget: BudgetName,
    #[arg(long, value_enum, default_value = "gls")]
    recovery: RecoveryName,
    /// Also emit consistent answers.
    #[arg(long)]
    consistency: bool,
    /// Skip the noise (testing only; the bundle is marked).
    #[arg(long)]
    noiseless: bool,
    /// RNG seed; recorded in the bundle.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    workload: PathBuf,
    /// Comma-separated configurations: I, Q, Q+, F, F+, C, C+, H, H+
    /// (the + suffix selects optimal budgeting).
    #[arg(long, default_value = "Q,Q+,F,F+")]
    configs: String,
    /// Needed when the list contains C or C+.
    #[arg(long)]
    user_marginals: Option<PathBuf>,
    #[command(flatten)]
    privacy: PrivacyArgs,
    /// Apply the consistency step to every configuration.
    #[arg(long)]
    consistency: bool,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest(args),
        Command::Budget(args) => commands::budget(args),
        Command::Release(args) => commands::release(args),
        Command::Evaluate(args) => commands::evaluate(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
