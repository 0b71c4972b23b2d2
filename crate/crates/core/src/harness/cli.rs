//! `erlq` command line.
//!
//! Exit status: 0 on success or help, 1 on usage errors, 2 on runtime
//! failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use super::checkpoint::load_checkpoint;
use super::config::{Algorithm, RunConfig};
use super::eval::{evaluate, report_csv_header, transfer_experiment, write_report, DEFAULT_TRIALS};
use super::plot::plot_metrics;
use super::train::train;
use crate::env::{make_terrain, Terrain, TerrainKind};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "erlq",
    about = "Quadruped locomotion with DDPG, TD3, CEM-DDPG and CEM-TD3"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on flat terrain; writes metrics and checkpoints to the output directory.
    Train {
        /// ddpg, td3, cem-ddpg or cem-td3; overrides the config file.
        #[arg(long, value_parser = parse_algorithm)]
        algo: Option<Algorithm>,
        /// Run configuration in `key = value` form.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Episodes (DDPG/TD3) or generations (CEM variants).
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Noise-free evaluation of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "flat", value_parser = parse_terrain)]
        terrain: TerrainKind,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use this terrain file for every trial instead of regenerating.
        #[arg(long)]
        fixed_terrain: Option<PathBuf>,
        /// Report CSV path; printed to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Flat versus rough evaluation and the degradation between them.
    Transfer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        /// Rough-terrain file used for every rough trial.
        #[arg(long)]
        fixed_terrain: Option<PathBuf>,
        /// Directory for transfer.csv and transfer.md; defaults to the checkpoint's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reward curve from one or more metrics files.
    Plot {
        #[arg(long, required = true, num_args = 1..)]
        metrics: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a terrain heightfield to a text file.
    Terrain {
        #[arg(long, default_value = "rough", value_parser = parse_terrain)]
        kind: TerrainKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.03)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.25)]
        cell_size: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: crate::error::Error| e.to_string())
}

fn parse_terrain(s: &str) -> std::result::Result<TerrainKind, String> {
    s.parse().map_err(|e: crate::error::Error| e.to_string())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn load_terrain(path: Option<&Path>) -> Result<Option<Terrain>> {
    path.map(Terrain::load).transpose()
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Train {
            algo,
            config,
            seed,
            out,
            budget,
        } => {
            let mut cfg = match &config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            if let Some(a) = algo {
                cfg.algorithm = a;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(b) = budget {
                cfg.budget = b;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let outcome = train(&cfg, &cfg.output_dir)?;
            println!(
                "{} seed {}: {} iterations, best return {:.2}, artifacts in {}",
                cfg.algorithm,
                cfg.seed,
                outcome.returns.len(),
                outcome.final_checkpoint.progress.best_return,
                cfg.output_dir.display()
            );
        }
        Command::Eval {
            checkpoint,
            terrain,
            trials,
            seed,
            fixed_terrain,
            out,
        } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let fixed = load_terrain(fixed_terrain.as_deref())?;
            let report = evaluate(&ckpt, terrain, trials, seed, fixed.as_ref())?;
            let csv = format!("{}\n{}\n", report_csv_header(trials), report.csv_row());
            match out {
                Some(path) => write_report(&path, &csv)?,
                None => print!("{csv}"),
            }
            if report.diverged_trials > 0 {
                eprintln!(
                    "warning: {} trial(s) ended in a simulator divergence",
                    report.diverged_trials
                );
            }
        }
        Command::Transfer {
            checkpoint,
            seed,
            trials,
            fixed_terrain,
            out,
        } => {
            let ckpt = load_checkpoint(&checkpoint)?;
            let fixed = load_terrain(fixed_terrain.as_deref())?;
            let report = transfer_experiment(&ckpt, trials, seed, fixed.as_ref())?;
            let dir = out.unwrap_or_else(|| {
                checkpoint
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_default()
            });
            std::fs::create_dir_all(&dir).map_err(|e| crate::Error::io(&dir, e))?;
            write_report(&dir.join("transfer.csv"), &report.to_csv())?;
            let table = report.table();
            write_report(&dir.join("transfer.md"), &table)?;
            print!("{table}");
        }
        Command::Plot { metrics, out } => {
            let paths: Vec<&Path> = metrics.iter().map(PathBuf::as_path).collect();
            plot_metrics(&paths, &out)?;
        }
        Command::Terrain {
            kind,
            seed,
            amplitude,
            cell_size,
            out,
        } => {
            make_terrain(kind, seed, amplitude, cell_size)?.save(&out)?;
        }
    }
    Ok(())
}
