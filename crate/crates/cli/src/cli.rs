//! Command-line grammar. Every argument struct serializes to the same field
//! names as [`Settings`](crate::config::Settings), omitting unset flags, so that
//! flags can be overlaid on a JSON config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "vanish",
    version,
    about = "Vanishing-discount limits of optimal control problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Top,
}

#[derive(Subcommand, Debug)]
pub enum Top {
    /// Finite-state Bellman operators.
    #[command(subcommand)]
    Mdp(MdpCommand),
    /// Grid HJB equations for the built-in control systems.
    #[command(subcommand)]
    Hjb(HjbCommand),
    /// Run the command named in a JSON config file.
    Run { config: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum MdpCommand {
    /// Discounted fixed point `v = T((1−α)v)`.
    Solve(MdpSolveArgs),
    /// Gain–bias solution and its half-line certificates.
    Gainbias(ModelArgs),
    /// `α v_α` over a decreasing α list, with the comparison-bound verdict.
    Sweep(MdpSweepArgs),
    /// Mean payoff by enumerating stationary policies.
    Oracle(ModelArgs),
    /// Write a seeded random model.
    Random(MdpRandomArgs),
}

#[derive(Subcommand, Debug)]
pub enum HjbCommand {
    /// Discounted value `V_λ` on a grid.
    Solve(HjbSolveArgs),
    /// `λV_λ` over a decreasing λ list.
    Sweep(HjbSweepArgs),
    /// Residuals of system (S) for a pair of grid functions.
    #[command(name = "check-s")]
    CheckS(HjbCheckArgs),
    /// Reachable-set limit value `I(x)`.
    Reach(HjbReachArgs),
    /// Closed-form `(u, w)` pair of the rotation example.
    #[command(name = "rotation-pair")]
    RotationPair(HjbPairArgs),
}

fn not(b: &bool) -> bool {
    !*b
}

#[derive(Args, Debug, Serialize)]
pub struct Common {
    /// JSON config file; flags override its entries.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Solver tolerance.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Iteration budget (fixed-point iterations or Gauss–Seidel sweeps).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Also write a gnuplot script referencing the CSV outputs.
    #[arg(long)]
    #[serde(skip_serializing_if = "not")]
    pub plot_script: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct ModelArgs {
    /// Model JSON file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Tolerance for achieving sets and certificates.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmin_tol: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct MdpSolveArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Built-in operator instead of a model file.
    #[arg(long, conflicts_with = "model")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct MdpSweepArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Strictly decreasing, in (0, 1).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmin_tol: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct MdpRandomArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_actions: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct SystemArgs {
    /// Built-in system name.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    /// Grid step.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Number of action samples per axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_samples: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct HjbSolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct HjbSweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    /// Strictly decreasing, positive.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Independent cold-start solves in parallel instead of warm starts.
    #[arg(long)]
    #[serde(skip_serializing_if = "not")]
    pub parallel: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct HjbCheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    /// CSV of `u`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<PathBuf>,
    /// CSV of `w`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<PathBuf>,
    /// Fail with exit code 3 when the largest residual exceeds this.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct HjbReachArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct HjbPairArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}
