//! Command-line front end and experiment runner for `joinest`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod inputs;

use std::ffi::OsString;

use clap::Parser;

pub use error::{CliResult, Failure};
pub use experiment::{run_experiment, ExperimentSpec, Kind, Row, Table};

/// Runs the command line and returns the process exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    if let Some(t) = std::env::var("JOINEST_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let argv = match config::expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.code;
        }
    };
    let parsed = match cli::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli::dispatch(parsed) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
