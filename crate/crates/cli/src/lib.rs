//! Command implementations behind the `maxent` binary.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 no convergence /
//! suspected infeasibility (and spectrum runs whose deviation exceeds the
//! equivalence limit), 3 failed selftest checks.

pub mod args;
pub mod autoencode;
pub mod invert;
pub mod selftest;
pub mod spectrum;

pub use args::{Cli, Command};
use maxent_core::{Error, Result};

/// Tags input-stage errors with the flag that produced them.
pub(crate) fn with_flag<T>(flag: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Invalid(format!("{flag}: {e}")))
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::MaxIterations(_) | Error::InfeasibleSuspected { .. } => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Invert(a) => invert::run_invert(a),
        Command::Spectrum(a) => spectrum::run_spectrum(a),
        Command::Autoencode(a) => autoencode::run_autoencode(a),
        Command::Selftest(a) => selftest::run_selftest(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
