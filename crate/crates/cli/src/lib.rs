//! `bbm`: batch experiments on branching Brownian motion in `d` dimensions.
//!
//! Exit codes: 0 success, 1 invalid input, 2 particle cap exceeded,
//! 3 a `verify` check failed.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod render;
pub mod table;
pub mod verify;

use commands::Output;
use config::Common;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] bbm_core::Error),
    #[error("{0}")]
    Io(String),
    #[error("{0} verify check(s) failed")]
    VerifyFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(bbm_core::Error::PopulationCap { .. }) => 2,
            CliError::VerifyFailed(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bbm",
    version,
    about = "Branching Brownian motion experiments",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate trees; summary table, tree JSON (--tree) or SVG (--out *.svg).
    Simulate,
    /// Tail and CDF table of the centered maximum R*_t − m_t.
    Tail,
    /// Ratios P(R*_t ≥ m_t + y) / (y e^{−√2y}) and the fitted tail rate.
    Mallein,
    /// Window-started tails normalized by 𝔐_{L,z}.
    RightTail,
    /// Analytic-versus-Monte-Carlo oracle checks.
    Verify,
    /// Samples of Z_L.
    Zstat,
    /// Branching Bessel against one-dimensional BBM tails and pathwise coupling.
    Couple,
    /// Empirical P(W*_ℓ > √2ℓ + w) against the Bramson bound shape.
    Bramson,
    /// SVG of a two-dimensional tree and its modulus traces.
    Render,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let common = cli.common.load()?;
    let out = match cli.command {
        Command::Simulate => commands::simulate(&common)?,
        Command::Tail => commands::tail(&common)?,
        Command::Mallein => commands::mallein(&common)?,
        Command::RightTail => commands::right_tail(&common)?,
        Command::Verify => commands::verify(&common)?,
        Command::Zstat => commands::zstat(&common)?,
        Command::Couple => commands::couple(&common)?,
        Command::Bramson => commands::bramson(&common)?,
        Command::Render => commands::render(&common)?,
    };
    let (text, failed) = match out {
        Output::Table(t) => (t.render(common.format()), 0),
        Output::Failed(t) => {
            let n = t
                .rows
                .iter()
                .filter(|r| r[1] == table::Cell::Bool(false))
                .count();
            (t.render(common.format()), n)
        }
        Output::Svg(s) => (s, 0),
    };
    match &common.out {
        Some(path) => commands::write_file(path, &text)?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))?,
    }
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}

/// Parses `args` and runs; the return value is the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bbm: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
