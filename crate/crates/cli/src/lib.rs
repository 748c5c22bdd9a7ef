//! The `tpgraph` command-line tool: synthetic data generation, structure
//! learning, evaluation, resumable sweeps and price-table ingestion.
//!
//! Exit codes: 0 on success, 2 for bad input or configuration, 3 for
//! failures while computing. Machine-readable output goes to stdout as JSON,
//! diagnostics to stderr.

pub mod args;
pub mod commands;
pub mod error;
pub mod gamma;
pub mod sweep;

use serde_json::Value;

pub use args::{Cli, Command};
pub use error::{CliError, Result};

pub fn run(cli: &Cli) -> Result<Value> {
    match &cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Learn(a) => commands::learn(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => sweep::sweep(a),
        Command::Returns(a) => commands::returns(a),
        Command::Modularity(a) => commands::modularity(a),
    }
}
