//! Command-line harness: train, predict, evaluate, grid search over learning
//! rates, and synthetic data generation.
//!
//! Exit codes: 0 on success, 2 for usage and data errors, 1 for anything
//! else.

pub mod args;
pub mod commands;
pub mod fsutil;
pub mod report;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub use args::Cli;

/// A problem with the request or its inputs rather than with the program.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Exit status for an error: 2 when any cause is a usage or data error.
pub fn exit_code(error: &anyhow::Error) -> i32 {
    let data_error = error.chain().any(|cause| {
        if cause.is::<UsageError>() {
            return true;
        }
        match cause.downcast_ref::<aucrank::Error>() {
            Some(aucrank::Error::Io(io)) => io.kind() == std::io::ErrorKind::NotFound,
            Some(_) => true,
            None => false,
        }
    });
    if data_error {
        2
    } else {
        1
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    commands::dispatch(cli.command)
}

/// Parses `args`, runs the command, prints any error and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
