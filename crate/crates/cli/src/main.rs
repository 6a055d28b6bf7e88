use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

/// Multi-task tagging laboratory: trains single- and multi-task bi-LSTM
/// taggers, extracts task features and fits a gain predictor.
#[derive(Debug, Parser)]
#[command(name = "mtl-oracle", version)]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Hyperparameter profile, overriding the configuration's.
    #[arg(long, global = true, value_parser = ["desk", "paper"])]
    profile: Option<String>,
    /// Global seed, overriding the configuration's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for grid jobs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output directory, overriding the configuration's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Meta-learner feature columns: all, data, curves or a comma list.
    #[arg(long, global = true, default_value = "all")]
    mask: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one task alone.
    TrainSingle { task: String },
    /// Train a main task with one auxiliary task.
    TrainMulti { main: String, aux: String },
    /// Train all singles and pairs; write gains, features and meta-dataset.
    Grid,
    /// Recompute features from single-task curves already on disk.
    Features,
    /// Cross-validate the gain predictor on meta.csv.
    Meta {
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        /// L2 penalty of the logistic regression.
        #[arg(long, default_value_t = 1.0)]
        l2: f64,
        /// Also run greedy forward feature selection.
        #[arg(long)]
        search: bool,
        /// CV runs per candidate during the search.
        #[arg(long, default_value_t = 10)]
        search_runs: usize,
    },
    /// Print the gain matrix and meta-learner reports found in the output directory.
    Report,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MTL_ORACLE_LOG", "info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
