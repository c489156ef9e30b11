//! Command-line front end for `spinreset`.

pub mod args;
pub mod commands;
pub mod error;
pub mod output;
pub mod svg;
pub mod verify;

use std::ffi::OsString;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, EXIT_USAGE};

pub const THREADS_ENV: &str = "SPINRESET_THREADS";

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let from_env = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(v.trim().parse::<usize>().map_err(|_| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?),
        _ => None,
    };
    if let Some(n) = flag.or(from_env) {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        // Only the first configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let outcome = configure_threads(cli.threads).and_then(|()| match &cli.command {
        Command::Stationary(a) => commands::stationary(a),
        Command::Ensemble(a) => commands::ensemble(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::FiniteSize(a) => commands::finite_size(a),
        Command::Fit(a) => commands::fit(a).map(|_| ()),
        Command::Verify(a) => commands::verify(a),
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
