use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use simsec::experiment::{
    cmd_eval, cmd_plotdata, cmd_sweep, cmd_train, format_eval, ExperimentConfig,
};
use simsec::Error;

/// Train and evaluate SIM secrecy agents.
#[derive(Parser)]
#[command(name = "simsec", version)]
struct Cli {
    /// Overrides `run.seed` for every command.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured agent; writes metrics.csv, checkpoint.json and run.json.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to `run.output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint with the deterministic policy.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: usize,
    },
    /// Train and evaluate every agent kind across values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of N, L, P0, R_min, M, distance.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smoothed learning curves from metrics files, printed as CSV.
    Plotdata {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, default_value_t = 5)]
        window: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train { config, out } => {
            let cfg = load(&config, cli.seed)?;
            let report = cmd_train(&cfg, None, out.as_deref())?;
            println!("{}", report.summary_line());
        }
        Command::Eval {
            config,
            checkpoint,
            episodes,
        } => {
            let cfg = load(&config, cli.seed)?;
            print!("{}", format_eval(&cmd_eval(&cfg, &checkpoint, episodes)?));
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let cfg = load(&config, cli.seed)?;
            let rows = cmd_sweep(&cfg, &axis, &values, out.as_deref(), |row| {
                match row.eval_asr {
                    Some(asr) => eprintln!("{}={} {}: asr {asr:.6}", row.axis, row.value, row.agent),
                    None => eprintln!("{}={} {}: failed: {}", row.axis, row.value, row.agent, row.message),
                }
            })?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!("sweep finished: {} points, {failed} failed", rows.len());
        }
        Command::Plotdata { csv, window, out } => {
            let table = cmd_plotdata(&csv, window)?;
            match out {
                Some(path) => std::fs::write(path, table)?,
                None => print!("{table}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
