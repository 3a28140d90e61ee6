use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use safe_rerank::click_models::generate_instance;
use safe_rerank::harness::{
    aggregate_dir, emit_outputs, plot_dir, run_experiment, ExperimentConfig,
};
use safe_rerank::{Error, ModelKind, Result, Scenario};

#[derive(Parser)]
#[command(
    name = "safe-rerank",
    version,
    about = "Safe online re-ranking simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance file.
    GenInstance {
        /// optimal_original | missing_top | random
        #[arg(long)]
        scenario: Scenario,
        /// pbm | cm
        #[arg(long)]
        model: ModelKind,
        #[arg(short = 'L', long = "items", default_value_t = 10)]
        num_items: usize,
        #[arg(short = 'K', long = "display", default_value_t = 5)]
        display_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; prints to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate every configured algorithm and write CSV tables and charts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "T")]
        horizon: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Comma-separated ranker ids.
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
        /// Worker threads (1 = sequential).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Recompute aggregate.csv from runs.csv.
    Aggregate {
        #[arg(long = "in")]
        dir: PathBuf,
    },
    /// Redraw regret.svg and violations.svg from aggregate.csv.
    Plot {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenInstance {
            scenario,
            model,
            num_items,
            display_size,
            seed,
            out,
        } => {
            let inst = generate_instance(scenario, model, num_items, display_size, seed)?;
            let text = inst.to_json_string();
            match out {
                Some(path) => {
                    std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path, source: e })?
                }
                None => println!("{text}"),
            }
        }
        Command::Run {
            config,
            out,
            horizon,
            runs,
            seed,
            delta,
            algorithms,
            threads,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(t) = horizon {
                cfg.horizon = t;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if delta.is_some() {
                cfg.delta = delta;
            }
            if let Some(a) = algorithms {
                cfg.algorithms = a;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .ok_or(Error::Config {
                    field: "output_dir".into(),
                    message: "pass --out or set output_dir in the config".into(),
                })?;
            let validated = cfg.validate()?;
            let results = run_experiment(&validated)?;
            let series = emit_outputs(&results, &dir)?;
            println!("algorithm,t,regret_mean,regret_stderr,violations_mean,violations_stderr");
            for name in series.algorithms() {
                if let Some(r) = series.last(name) {
                    println!(
                        "{},{},{:.3},{:.3},{:.3},{:.3}",
                        r.algorithm,
                        r.t,
                        r.regret_mean,
                        r.regret_stderr,
                        r.violations_mean,
                        r.violations_stderr
                    );
                }
            }
            eprintln!("wrote {}", dir.display());
        }
        Command::Aggregate { dir } => {
            aggregate_dir(&dir)?;
        }
        Command::Plot { dir } => plot_dir(&dir)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
