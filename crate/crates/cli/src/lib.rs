//! Command-line front end for the `dropfit` library.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod output;
pub mod svg;

use args::{Cli, Command};
use error::CliResult;
use output::Manifest;

/// Runs one parsed invocation. Config files are merged under the flags first.
pub fn run(cli: Cli) -> CliResult<Manifest> {
    match cli.command {
        Command::Simulate(a) => commands::simulate::run(a.merged()?),
        Command::Fit(a) => commands::fit::run(a.merged()?),
        Command::Sweep(a) => commands::sweep::run(a.merged()?),
        Command::Benchmark(a) => commands::benchmark::run(a.merged()?),
        Command::NoiseEstimate(a) => commands::noise::run(a.merged()?),
        Command::Plot(a) => commands::plot::run(a.merged()?),
    }
}
