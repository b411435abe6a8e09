use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    safefilter_cli::execute(safefilter_cli::Cli::parse())
}
