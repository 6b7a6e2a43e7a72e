//! `searchrl`: corpus generation, scheduling simulations, toy training,
//! question synthesis, evaluation and report emission.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use searchrl::scheduler::SchedError;

use config::{EvalArgs, FileConfig, GenCorpusArgs, ReportArgs, SimulateArgs, SynthesizeArgs, TrainToyArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Deadlock(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Deadlock(_) => 3,
            CliError::Degenerate(_) => 4,
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

impl From<SchedError> for CliError {
    fn from(e: SchedError) -> Self {
        match e {
            SchedError::Config(msg) => CliError::Config(msg),
            SchedError::Deadlock { .. } => CliError::Deadlock(e.to_string()),
            SchedError::DegenerateWorkload { .. } => CliError::Degenerate(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "searchrl", version, about = "Asynchronous agentic RL simulator for search agents")]
struct Cli {
    /// TOML file with one table per command; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic multi-hop corpus.
    GenCorpus(GenCorpusArgs),
    /// Run one scheduling regime over a frozen scripted policy.
    Simulate(SimulateArgs),
    /// Train the toy policy with fully asynchronous GRPO.
    TrainToy(TrainToyArgs),
    /// Synthesize harder questions from seed questions.
    Synthesize(SynthesizeArgs),
    /// Avg@k / Pass@k evaluation, optionally sweeping minimum turns.
    Eval(EvalArgs),
    /// Rebuild the utilization report and audits from an event log.
    Report(ReportArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::GenCorpus(args) => commands::gen_corpus(args.overlay(file.gen_corpus)),
        Command::Simulate(args) => commands::simulate(args.overlay(file.simulate)),
        Command::TrainToy(args) => commands::train_toy(args.overlay(file.train_toy)),
        Command::Synthesize(args) => commands::synthesize(args.overlay(file.synthesize)),
        Command::Eval(args) => commands::eval(args.overlay(file.eval)),
        Command::Report(args) => commands::report(args.overlay(file.report)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
