//! Command-line interface and HTTP inference service for the
//! gate-then-price system.

pub mod cli;
pub mod config;
pub mod ops;
pub mod service;

/// Parse arguments and dispatch. Returns the process exit code:
/// 0 success, 1 runtime error, 2 usage error.
pub fn run() -> i32 {
    use clap::Parser;
    let args = cli::Cli::parse();
    match ops::dispatch(args) {
        Ok(()) => 0,
        Err(ops::CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(ops::CliError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}
