//! Command-line surface: subcommands and the flags they share.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsmc::sim::ControlMode;

#[derive(Debug, Parser)]
#[command(
    name = "qsmc",
    version,
    about = "Design, simulate, and verify approximation-free quasi-sliding-mode controllers",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a design: surface stability, envelope conditions, and the
    /// per-start assumptions, with the analytic guarantees they imply.
    Design(CommonArgs),
    /// Integrate the closed loop; writes one trajectory CSV and one metrics
    /// JSON per initial condition.
    Simulate(CommonArgs),
    /// Re-run a bundled study end to end and check every guarantee clause.
    Verify {
        /// Bundled study name: example1 (alias: pendulum) or example2.
        example: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the smooth law and a relay baseline on the same plant and compare
    /// chattering, switching, and tracking side by side.
    Compare {
        /// Relay gain K of the baseline law u = -sign(g) * K * sign(sigma).
        #[arg(long, default_value_t = 5.0, value_name = "K")]
        baseline_k: f64,
        /// Start of the evaluation window for total variation and switches.
        #[arg(long, default_value_t = 2.0, value_name = "SECONDS")]
        window_start: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Emit a gnuplot script that plots the CSVs written by `simulate`.
    PlotScript(CommonArgs),
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Experiment configuration file (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (created if needed).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override the integration step from the config [s].
    #[arg(long, value_name = "SECONDS")]
    pub dt: Option<f64>,
    /// Override the simulation horizon from the config [s].
    #[arg(long, value_name = "SECONDS")]
    pub horizon: Option<f64>,
    /// Proceed although design checks fail; outputs carry a
    /// "guarantees void" watermark.
    #[arg(long)]
    pub force: bool,
    /// Reserved for future stochastic features; accepted for forward
    /// compatibility. Present runs are fully deterministic.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Control evaluation: recomputed at every integrator stage, or held
    /// constant over each step.
    #[arg(long, value_enum, value_name = "MODE")]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Continuous,
    Zoh,
}

impl From<ModeArg> for ControlMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Continuous => ControlMode::Continuous,
            ModeArg::Zoh => ControlMode::Zoh,
        }
    }
}
