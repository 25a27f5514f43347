use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use steerdial_core::strategy::StrategySourceKind;

mod artifacts;
mod commands;
mod config;
mod failure;

use commands::train::Target;
use config::{Overrides, RunConfig};
use failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "steerdial",
    version,
    about = "Strategy-controllable empathetic dialogue generation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured strategy source.
    #[arg(long, value_enum)]
    strategy_source: Option<Source>,
    /// Rescores decoding candidates with the trained discriminator.
    #[arg(long)]
    fudge: bool,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum Source {
    Joint,
    Classifier,
    Oracle,
}

impl From<Source> for StrategySourceKind {
    fn from(s: Source) -> Self {
        match s {
            Source::Joint => StrategySourceKind::Joint,
            Source::Classifier => StrategySourceKind::Classifier,
            Source::Oracle => StrategySourceKind::Oracle,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize the corpus and build the vocabulary.
    Prepare(Common),
    /// Train one component.
    Train {
        #[arg(value_enum)]
        target: Target,
        #[command(flatten)]
        common: Common,
    },
    /// Generate responses for the test split.
    Generate(Common),
    /// Score a generation file.
    Evaluate {
        /// Generation file to score.
        #[arg(long)]
        generations: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Talk to the model on standard input.
    Chat(Common),
}

fn run(command: Command) -> Result<(), Failure> {
    let common = match &command {
        Command::Prepare(c) | Command::Generate(c) | Command::Chat(c) => c,
        Command::Train { common, .. } | Command::Evaluate { common, .. } => common,
    };
    let cfg = RunConfig::load(
        &common.config,
        &Overrides {
            seed: common.seed,
            out: common.out.clone(),
        },
    )?;
    let source = common
        .strategy_source
        .map_or(cfg.generation.strategy_source, Into::into);
    let fudge = common.fudge;
    match command {
        Command::Prepare(_) => commands::prepare::run(&cfg),
        Command::Train { target, .. } => commands::train::run(&cfg, target),
        Command::Generate(_) => commands::generate::run(&cfg, source, fudge),
        Command::Evaluate { generations, .. } => commands::evaluate::run(&cfg, &generations),
        Command::Chat(_) => {
            commands::chat::session(&cfg, source, fudge, io::stdin().lock(), io::stdout().lock())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", Failure::usage(first));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.kind.exit_code() as u8)
        }
    }
}
