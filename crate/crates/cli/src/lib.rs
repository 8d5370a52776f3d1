//! Command-line pipeline: `design` writes circuits, `simulate` turns them
//! into counts, `analyze` fits models or benchmark figures, `metrics`
//! compares models. Every artifact is a versioned JSON envelope.

pub mod analyze;
pub mod args;
pub mod artifact;
pub mod design;
pub mod error;
pub mod gateset;
pub mod metrics;
pub mod simulate;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

pub fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Design(a) => design::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Metrics(a) => metrics::run(a),
        Command::Gateset(a) => gateset::run(a),
    }
}

/// Parse and run an argument list whose first item is the program name.
pub fn run_from<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli)
}
