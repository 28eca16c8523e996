use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "amdpkit", version, about = "Average-reward MDP toolkit")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a hard instance (or a random ergodic MDP) as JSON.
    GenInstance(GenInstance),
    /// Mixing and minorization times of every policy of an MDP.
    Ergodicity(Ergodicity),
    /// Solve a discounted MDP exactly, or from samples when --n is given.
    SolveDmdp(SolveDmdp),
    /// Learn an average-reward policy through the discounted reduction.
    SolveAmdp(SolveAmdp),
    /// Replication sweeps.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Args)]
pub struct GenInstance {
    /// Minorization time of the optimal chain.
    #[arg(long, default_value_t = 10.0)]
    pub tminorize: f64,
    /// Gap parameter of the suboptimal actions.
    #[arg(long, default_value_t = 0.2)]
    pub kappa: f64,
    #[arg(long, default_value_t = 2)]
    pub actions: usize,
    /// Generate a random ergodic MDP with this many states instead.
    #[arg(long)]
    pub random_states: Option<usize>,
    /// Kernel floor for random MDPs.
    #[arg(long, default_value_t = 0.01)]
    pub min_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Ergodicity {
    #[arg(long)]
    pub mdp: PathBuf,
    #[arg(long, default_value_t = amdpkit::ergodicity::DEFAULT_M_MAX)]
    pub m_max: usize,
}

#[derive(Debug, Args)]
pub struct SolveDmdp {
    #[arg(long)]
    pub mdp: PathBuf,
    #[arg(long)]
    pub gamma: f64,
    /// Samples per state-action pair; switches to perturbed model-based planning.
    #[arg(long)]
    pub n: Option<u64>,
    /// Reward perturbation width (sampled mode).
    #[arg(long, default_value_t = 0.0)]
    pub zeta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = amdpkit::dp::DEFAULT_TOL)]
    pub tol: f64,
}

/// A minorization time, or `auto` to compute it by policy enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TMinorize {
    Value(f64),
    Auto,
}

impl FromStr for TMinorize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(TMinorize::Auto);
        }
        s.parse::<f64>()
            .map(TMinorize::Value)
            .map_err(|_| format!("expected a number or `auto`, got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Ours,
    Baseline,
}

impl From<Algo> for amdpkit::Sizing {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Ours => amdpkit::Sizing::Ours,
            Algo::Baseline => amdpkit::Sizing::Baseline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAlgo {
    Ours,
    Baseline,
    Both,
}

#[derive(Debug, Args)]
pub struct SolveAmdp {
    #[arg(long)]
    pub mdp: PathBuf,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value = "auto")]
    pub tminorize: TMinorize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Algo::Ours)]
    pub algo: Algo,
    /// Plan constant (default: the full constant divided by 1e4, or the full constant with
    /// --full-scale).
    #[arg(long = "C")]
    pub constant: Option<f64>,
    /// Refuse plans needing more total samples than this.
    #[arg(long, default_value_t = 1_000_000_000)]
    pub budget: u64,
    /// Use the unscaled plan constant and no budget cap.
    #[arg(long)]
    pub full_scale: bool,
}

/// `a:b:k`, `k` log-spaced values from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("expected a:b:k, got {s:?}");
        if parts.len() != 3 {
            return Err(bad());
        }
        let from: f64 = parts[0].parse().map_err(|_| bad())?;
        let to: f64 = parts[1].parse().map_err(|_| bad())?;
        let count: usize = parts[2].parse().map_err(|_| bad())?;
        if !(from > 0.0 && to >= from && count >= 1) {
            return Err(format!("need 0 < a <= b and k >= 1, got {s:?}"));
        }
        Ok(Grid { from, to, count })
    }
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        amdpkit::experiments::log_spaced(self.from, self.to, self.count).expect("validated grid")
    }
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// Error against total samples at a fixed minorization time.
    EpsSweep(EpsSweep),
    /// Error against minorization time at n = C t samples per pair.
    TminorizeSweep(TminorizeSweep),
}

#[derive(Debug, Args)]
pub struct SweepOutput {
    /// CSV file for the per-replication records.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// SVG log-log plot of the per-configuration means.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EpsSweep {
    #[arg(long, value_enum, default_value_t = SweepAlgo::Ours)]
    pub algo: SweepAlgo,
    /// Total-sample budgets (default 10^6.8 to 10^8.3, 5 points).
    #[arg(long)]
    pub grid: Option<Grid>,
    #[arg(long, default_value_t = 10.0)]
    pub tminorize: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Plan constant (default: the full constant times 1e-7).
    #[arg(long = "C")]
    pub constant: Option<f64>,
    /// Largest admissible budget.
    #[arg(long)]
    pub budget: Option<u64>,
    /// Unscaled constant with the minimum-sample gate and 300 replications.
    #[arg(long)]
    pub full_scale: bool,
    #[command(flatten)]
    pub output: SweepOutput,
}

#[derive(Debug, Args)]
pub struct TminorizeSweep {
    /// Minorization-time targets (default 10:100:3).
    #[arg(long)]
    pub targets: Option<Grid>,
    /// Samples per pair are ceil(C t).
    #[arg(long = "C", default_value_t = 4500.0)]
    pub c_samples: f64,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Nominal target fixing the discount and perturbation.
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Targets over [10, 1000] with 300 replications.
    #[arg(long)]
    pub full_scale: bool,
    #[command(flatten)]
    pub output: SweepOutput,
}
