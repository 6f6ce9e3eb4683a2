//! Command-line front end for the `qsmc` library: design validation,
//! closed-loop simulation with CSV/JSON outputs, bundled-study verification,
//! relay-baseline comparison, and gnuplot script generation.
//!
//! Exit codes: 0 = all checks pass, 1 = ran but checks failed, 2 = usage or
//! config error, 3 = numerical abort mid-run.

pub mod args;
pub mod commands;
pub mod config;

use std::process::ExitCode;

/// Command failure that is not "checks failed": either the invocation or
/// config was wrong (exit 2), or the simulation aborted numerically (exit 3).
#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Abort(String),
}

/// `Ok(true)` = exit 0, `Ok(false)` = exit 1 (ran, checks failed).
pub type CmdResult = Result<bool, CmdError>;

pub fn run(cli: args::Cli) -> ExitCode {
    use args::Command;
    let outcome = match &cli.command {
        Command::Design(common) => commands::design(common),
        Command::Simulate(common) => commands::simulate(common),
        Command::Verify { example, common } => commands::verify(example, common),
        Command::Compare {
            baseline_k,
            window_start,
            common,
        } => commands::compare(*baseline_k, *window_start, common),
        Command::PlotScript(common) => commands::plot_script(common),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Abort(msg)) => {
            eprintln!("simulation aborted — {msg}");
            ExitCode::from(3)
        }
    }
}
