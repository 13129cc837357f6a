//! `cmdp-gas`: solve, scan, benchmark and roll out constrained MDPs.
//!
//! Exit codes: 0 success, 2 infeasible or `--mu-max` too small, 3 stagnation,
//! 4 I/O or configuration error, 5 divergence, 6 inner loop not converged,
//! 7 convexity violation, 8 invalid problem. Failures print
//! `error[<class>]: <message>` on stderr.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gas_cmdp::{Algorithm, Error, ErrorClass};

#[derive(Parser)]
#[command(
    name = "cmdp-gas",
    version,
    about = "Constrained MDP solver (gradient-aware search)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write trace.csv and result.json.
    Solve(SolveArgs),
    /// Sample the dual objective on a uniform grid.
    Scan(ScanArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
    /// Simulate the greedy policy and write rollout statistics.
    Rollout(RolloutArgs),
    /// Build an environment and save it as a problem file.
    BuildEnv(BuildEnvArgs),
    /// Print the default configuration of an environment.
    DefaultConfig {
        #[arg(value_enum)]
        env: EnvKind,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EnvKind {
    Gridworld,
    Uav,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Gas,
    Bs,
    Pdo,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Gas => Algorithm::Gas,
            AlgoArg::Bs => Algorithm::Bs,
            AlgoArg::Pdo => Algorithm::Pdo,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    BsCompare,
    PdoSweep,
}

/// Where the CMDP comes from: a problem file or a built environment.
#[derive(Args, Debug, Clone)]
pub struct ProblemArgs {
    /// Problem file (JSON).
    #[arg(long, conflicts_with = "env", required_unless_present = "env")]
    pub problem: Option<PathBuf>,
    /// Built-in environment.
    #[arg(long, value_enum)]
    pub env: Option<EnvKind>,
    /// Environment configuration (JSON); defaults apply when omitted.
    #[arg(long, requires = "env")]
    pub env_config: Option<PathBuf>,
    /// Replaces the constraint bound E of the problem.
    #[arg(long, allow_hyphen_values = true)]
    pub bound: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Upper end M of the initial multiplier bracket.
    #[arg(long, default_value_t = gas_cmdp::gas::DEFAULT_MU_MAX)]
    pub mu_max: f64,
    /// Inner-loop tolerance on the mean relative value change.
    #[arg(long, default_value_t = gas_cmdp::penalized::DEFAULT_EPS)]
    pub eps: f64,
    /// Outer-loop tolerance on the dual objective.
    #[arg(long, default_value_t = gas_cmdp::gas::DEFAULT_EPS_PRIME)]
    pub eps_prime: f64,
    #[arg(long, default_value_t = gas_cmdp::penalized::DEFAULT_MAX_SWEEPS)]
    pub max_sweeps: usize,
    /// Outer iteration cap for GAS and BS.
    #[arg(long, default_value_t = gas_cmdp::gas::DEFAULT_MAX_OUTER)]
    pub max_outer: usize,
    /// Initial multiplier for PDO.
    #[arg(long, default_value_t = 0.0)]
    pub mu0: f64,
    /// Initial PDO step size.
    #[arg(long, default_value_t = 1.0)]
    pub kappa0: f64,
    /// PDO step decay parameter.
    #[arg(long, default_value_t = 0.01)]
    pub xi: f64,
    /// PDO iteration cap.
    #[arg(long, default_value_t = 100_000)]
    pub pdo_max_outer: usize,
    /// Fill the wall_time_ms trace column (makes output non-reproducible).
    #[arg(long)]
    pub record_time: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "gas")]
    pub algo: AlgoArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, default_value_t = 0.0)]
    pub mu_min: f64,
    #[arg(long)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    #[arg(long, default_value_t = gas_cmdp::penalized::DEFAULT_EPS)]
    pub eps: f64,
    /// Output directory for scan.csv and scan.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Accuracy levels for bs-compare.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1e-2,1e-4,1e-6,1e-8,1e-10"
    )]
    pub eps_primes: Vec<f64>,
    /// Decay parameters for pdo-sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1,1,10")]
    pub xis: Vec<f64>,
    /// Random initial multipliers per decay value, drawn on [0, mu-max].
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RolloutArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Take the policy from a result.json written by `solve`; otherwise
    /// solve first with the solver options.
    #[arg(long)]
    pub policy_from_solve: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "gas")]
    pub algo: AlgoArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1000)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Steps per episode; defaults to the smallest H with gamma^H < 1e-6.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BuildEnvArgs {
    #[arg(value_enum)]
    pub env: EnvKind,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Problem file to write.
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::InfeasibleOrMuMaxTooSmall => 2,
        ErrorClass::Stagnation => 3,
        ErrorClass::Io | ErrorClass::Config => 4,
        ErrorClass::Divergence => 5,
        ErrorClass::InnerLoopNotConverged => 6,
        ErrorClass::ConvexityViolation => 7,
        ErrorClass::InvalidProblem => 8,
    }
}

/// Applies `CMDP_GAS_THREADS` (unset or 0 leaves rayon's default).
fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("CMDP_GAS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        Error::Config(format!(
            "CMDP_GAS_THREADS must be a non-negative integer, got {raw:?}"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Scan(a) => commands::scan(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::Rollout(a) => commands::rollout(&a),
        Command::BuildEnv(a) => commands::build_env(&a),
        Command::DefaultConfig { env } => commands::default_config(env),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let class = e.class();
            let text = e.to_string();
            let prefix = format!("{}: ", class.name());
            eprintln!(
                "error[{}]: {}",
                class.name(),
                text.strip_prefix(&prefix).unwrap_or(&text)
            );
            ExitCode::from(exit_code(class))
        }
    }
}
