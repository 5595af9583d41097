//! `anygram`: any-gram kernel Gram matrices and a precomputed-kernel SVM.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 data error,
//! 3 non-convergence under `--strict`.

mod args;
mod commands;
mod manifest;
mod model;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug)]
pub struct NotConverged(pub String);

impl fmt::Display for NotConverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NotConverged {}

#[derive(Debug)]
pub struct SelftestFailed;

impl fmt::Display for SelftestFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("selftest failed")
    }
}

impl std::error::Error for SelftestFailed {}

#[derive(Parser, Debug)]
#[command(
    name = "anygram",
    version,
    about = "Any-gram kernels and a precomputed-kernel SVM"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute a training Gram matrix (and optionally a test×train cross Gram).
    Gram(commands::GramArgs),
    /// Train a one-vs-one SVM and write a model file.
    Train(commands::TrainArgs),
    /// Label a corpus with a trained model.
    Predict(commands::PredictArgs),
    /// Report accuracy and the confusion matrix against gold labels.
    Eval(commands::EvalArgs),
    /// Grid-search C (and θ for west) on a development set.
    Tune(commands::TuneArgs),
    /// Check the kernels against brute-force references.
    Selftest(commands::SelftestArgs),
    /// Convert text word vectors to the binary cache format.
    EmbedCache(commands::EmbedCacheArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        1
    } else if err.downcast_ref::<NotConverged>().is_some() {
        3
    } else if let Some(anygram::Error::InvalidConfig(_)) = err.downcast_ref::<anygram::Error>() {
        1
    } else {
        2
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    match cli.command {
        Command::Gram(a) => commands::gram(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a).map(drop),
        Command::Tune(a) => commands::tune(a).map(drop),
        Command::Selftest(a) => commands::selftest(a),
        Command::EmbedCache(a) => commands::embed_cache(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
