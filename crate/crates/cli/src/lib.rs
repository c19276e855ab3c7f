//! Pipeline driver: simulate, fit, diagnose, forecast and evaluate, each
//! reading and writing artifacts in a run directory.
//!
//! Every JSON artifact is an envelope carrying the hash of the
//! configuration that produced it and the master seed; CSV artifacts carry
//! the same in a `.meta.json` sidecar.

pub mod args;
pub mod artifact;
pub mod commands;
pub mod error;
pub mod run;

pub use args::Cli;
pub use error::{CliError, CliResult};

use args::Command;

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Fit(a) => commands::fit::run(a),
        Command::Diagnose(a) => commands::diagnose::run(a),
        Command::Forecast(a) => commands::forecast::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
    }
}
