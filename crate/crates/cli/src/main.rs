use std::process::ExitCode;

use clap::Parser;
use dropfit_cli::args::Cli;

fn main() -> ExitCode {
    match dropfit_cli::run(Cli::parse()) {
        Ok(manifest) => {
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
