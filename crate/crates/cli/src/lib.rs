//! `bulkq`: batch-oriented command-line front end to `bulkq-core`.
//!
//! Every subcommand reads a configuration (file and/or flags), validates it,
//! runs one pipeline and writes a single JSON or CSV document that embeds the
//! resolved configuration. Exit status: 0 success, 1 analytic result flagged
//! invalid, 2 configuration error, 3 numerical failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::{Parser, Subcommand};

use crate::commands::Document;
use crate::config::{Config, Flags, Format};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "bulkq",
    version,
    about = "Contractor-pool queue solver, optimizer and simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embedded and limiting distributions for one (v, w).
    Solve(Flags),
    /// Cost-minimizing batch size over v = 1..=vmax at fixed w.
    Optimize(Flags),
    /// Cost surface over a (v, w) grid.
    Sweep(Flags),
    /// Seeded discrete-event simulation of the pool.
    Simulate(Flags),
    /// Analytic solution against simulation, per admission policy.
    Compare(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Solve(f)
            | Command::Optimize(f)
            | Command::Sweep(f)
            | Command::Simulate(f)
            | Command::Compare(f) => f,
        }
    }
}

/// Resolves the configuration and runs the command without writing anything.
pub fn execute(command: &Command) -> Result<(Document, Config), CliError> {
    let config = Config::resolve(command.flags())?;
    let doc = match command {
        Command::Solve(_) => commands::solve(&config)?,
        Command::Optimize(_) => commands::optimize(&config)?,
        Command::Sweep(_) => commands::sweep_cmd(&config)?,
        Command::Simulate(_) => commands::simulate(&config)?,
        Command::Compare(_) => commands::compare_cmd(&config)?,
    };
    Ok((doc, config))
}

/// Runs the command and writes its document; returns the exit status.
pub fn run(command: &Command) -> Result<i32, CliError> {
    let (doc, config) = execute(command)?;
    let text = match config.format() {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&doc.json)
                .map_err(|e| CliError::numerical(format!("json encoding failed: {e}")))?;
            s.push('\n');
            s
        }
        Format::Csv => doc.csv,
    };
    output::emit(&text, config.output.path.as_deref())?;
    Ok(doc.status)
}
