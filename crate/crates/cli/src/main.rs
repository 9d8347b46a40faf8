//! `phasechain <command> --config <path> [--seed N] [--out <path>] [--quiet]`
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration or constraint
//! violation.

mod commands;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::commands::Scenario;
use crate::report::Reporter;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Encode,
    ChainBuild,
    ChainValidate,
    Attack,
    Consensus,
}

#[derive(Debug, Parser)]
#[command(name = "phasechain", version, about = "Phase-encoded temporal GHZ blockchain simulator")]
struct Cli {
    command: Command,
    /// Scenario config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the human-readable summary on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] phasechain::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("report output: {0}")]
    Output(#[from] io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_constraint() => 2,
            _ => 1,
        }
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let sc = Scenario::load(&cli.config, cli.seed)?;
    let out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(File::create(p).map_err(|e| CliError::io(p, e))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut rep = Reporter::new(BufWriter::new(out));
    let msg = match cli.command {
        Command::Encode => commands::encode(&sc, &mut rep),
        Command::ChainBuild => commands::chain_build(&sc, &mut rep),
        Command::ChainValidate => commands::chain_validate(&sc, &mut rep),
        Command::Attack => commands::attack(&sc, &mut rep),
        Command::Consensus => commands::consensus(&sc, &mut rep),
    }?;
    rep.finish()?;
    Ok(msg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(msg) => {
            if !cli.quiet {
                eprintln!("{msg}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
