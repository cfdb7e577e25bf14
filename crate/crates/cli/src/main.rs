//! Batch pipeline over posts, labels and institution metadata.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 when
//! the input data cannot be processed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "narrative", version, about = "Topic, event and sentiment analysis of posts")]
struct Cli {
    /// Study configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Read and deduplicate posts.
    Ingest,
    /// Fit topic models and keep the most coherent.
    Topics,
    /// Extract event triples.
    Events,
    /// Score events and aggregate sentiment by label.
    Sentiment,
    /// Regress posting rates on institution features.
    Regress,
    /// Collect all reports into one markdown file.
    Report,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let Some(config_path) = cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(1);
    };
    let cfg = match config::load(&config_path, cli.seed, cli.out) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::Topics => commands::topics(&cfg),
        Command::Events => commands::events(&cfg),
        Command::Sentiment => commands::sentiment(&cfg),
        Command::Regress => commands::regress(&cfg),
        Command::Report => commands::report(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
