use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = renyi_cli::Cli::parse();
    ExitCode::from(renyi_cli::run(cli))
}
