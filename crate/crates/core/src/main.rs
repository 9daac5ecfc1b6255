use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use adaptive_dbn::cli;

/// Adaptive DBN trainer with KL-divergence driven parent/child re-learning.
#[derive(Parser)]
#[command(name = "adaptive-dbn", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a parent model and write it plus training logs.
    Train {
        /// Run configuration file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a saved model: confusion matrix, class report, ratio table.
    Eval {
        /// Saved model file.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the re-learning pipeline: partition, children, KL, threshold sweep.
    Relearn {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the synthetic overlap dataset as CSV.
    Fixture {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match &args.command {
        Command::Train { config } => cli::cmd_train(config),
        Command::Eval { model, config } => cli::cmd_eval(model, config),
        Command::Relearn { model, config } => cli::cmd_relearn(model, config),
        Command::Fixture { config } => cli::cmd_fixture(config),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
