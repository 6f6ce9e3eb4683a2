use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    qsmc_cli::run(qsmc_cli::args::Cli::parse())
}
