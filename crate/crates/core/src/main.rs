use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cqarank::app::{run_evaluate, run_extract, run_predict, run_train};
use cqarank::config::Config;
use cqarank::corpus::Subtask;
use cqarank::{Error, Result};

#[derive(Parser)]
#[command(
    name = "cqarank",
    version,
    about = "Rank forum questions and comments with similarity features"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for feature extraction.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Training seed, overriding `ranker.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the feature TSV of a corpus.
    Extract {
        #[arg(long)]
        subtask: Subtask,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and write up to three models as `<out>.primary`, `<out>.contr1`, `<out>.contr2`.
    Train {
        #[arg(long)]
        subtask: Subtask,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a corpus with a trained model.
    Predict {
        #[arg(long)]
        subtask: Subtask,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a prediction file against gold labels.
    Evaluate {
        #[arg(long)]
        subtask: Subtask,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<Config> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut config = Config::load(path)?;
    if let Some(seed) = cli.seed {
        config.ranker.train.seed = seed;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    let jobs = cli.jobs.max(1);
    match &cli.command {
        Command::Extract {
            subtask,
            corpus,
            out,
        } => {
            let s = run_extract(&load_config(cli)?, corpus, *subtask, out, jobs)?;
            println!("instances\t{}\nfeatures\t{}", s.instances, s.features);
        }
        Command::Train {
            subtask,
            train,
            dev,
            out,
        } => {
            for r in run_train(&load_config(cli)?, train, dev, *subtask, out, jobs)? {
                println!(
                    "{}\tC={}\tdev_map={:.4}\tthreshold={:.6}\t{}",
                    r.name,
                    r.cost,
                    r.dev_map,
                    r.threshold,
                    r.path.display()
                );
            }
        }
        Command::Predict {
            subtask,
            model,
            corpus,
            out,
        } => {
            let n = run_predict(&load_config(cli)?, model, corpus, *subtask, out, jobs)?;
            println!("predictions\t{n}");
        }
        Command::Evaluate {
            subtask,
            gold,
            predictions,
        } => {
            let report = run_evaluate(gold, predictions, *subtask)?;
            print!("{}", report.to_text());
            println!("{}", report.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
