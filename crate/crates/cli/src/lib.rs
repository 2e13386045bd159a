//! Command-line front end of `iphfit`: CSV ingestion with censoring, JSON
//! model documents and the `fit`, `simulate`, `eval`, `qq` and `contour`
//! commands.
//!
//! Exit codes are 0 on success, 2 for usage errors, 3 for data errors and 4
//! for numerical failures. Results do not depend on the number of threads.

// Negated comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod data;
pub mod document;
pub mod error;
pub mod fit;
pub mod output;
pub mod plot;

use args::{Cli, Command};
use error::{CliError, CliResult};

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot start {n} threads: {e}")))?;
    }
    match &cli.command {
        Command::Fit(a) => fit::cmd_fit(a),
        Command::Simulate(a) => plot::cmd_simulate(a),
        Command::Eval(a) => plot::cmd_eval(a),
        Command::Qq(a) => plot::cmd_qq(a),
        Command::Contour(a) => plot::cmd_contour(a),
    }
}
