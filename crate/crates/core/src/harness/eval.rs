//! Noise-free evaluation on flat and rough terrain.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::stats::summarize;
use crate::cem::evaluate_policy;
use crate::env::{make_terrain, QuadrupedEnv, Terrain, TerrainKind};
use crate::error::{Error, Result};

pub const DEFAULT_TRIALS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub terrain: TerrainKind,
    pub trial_returns: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub best: f64,
    /// Trials cut short by a simulator divergence.
    pub diverged_trials: usize,
}

impl EvalReport {
    pub fn from_returns(terrain: TerrainKind, trial_returns: Vec<f64>) -> Result<Self> {
        let s = summarize(&trial_returns)?;
        Ok(Self {
            terrain,
            trial_returns,
            mean: s.mean,
            std: s.std,
            median: s.median,
            best: s.best,
            diverged_trials: 0,
        })
    }

    /// One report CSV row: `terrain,mean,std,median,best,trial_1,...`.
    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{},{},{}",
            self.terrain, self.mean, self.std, self.median, self.best
        );
        for r in &self.trial_returns {
            let _ = write!(row, ",{r}");
        }
        row
    }
}

pub fn report_csv_header(trials: usize) -> String {
    let mut h = String::from("terrain,mean,std,median,best");
    for i in 1..=trials {
        let _ = write!(h, ",trial_{i}");
    }
    h
}

/// Runs `trials` deterministic episodes of the checkpoint's actor. Trial `i`
/// resets with seed `eval_seed + i`; rough terrain is regenerated from the
/// same seed unless `fixed_terrain` pins a map.
pub fn evaluate(
    checkpoint: &Checkpoint,
    terrain: TerrainKind,
    trials: usize,
    eval_seed: u64,
    fixed_terrain: Option<&Terrain>,
) -> Result<EvalReport> {
    if trials == 0 {
        return Err(Error::Input("trials must be at least 1".into()));
    }
    let cfg = &checkpoint.config;
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let trial_seed = eval_seed.wrapping_add(i);
            let map = match fixed_terrain {
                Some(t) => t.clone(),
                None => make_terrain(
                    terrain,
                    trial_seed,
                    cfg.env.rough_amplitude,
                    cfg.env.cell_size,
                )?,
            };
            let mut env =
                QuadrupedEnv::new(map, cfg.robot.clone(), cfg.normalizers, cfg.env.t_max)?;
            evaluate_policy(&checkpoint.actor, &mut env, trial_seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let diverged = outcomes.iter().filter(|o| o.diverged).count();
    let mut report = EvalReport::from_returns(
        terrain,
        outcomes.into_iter().map(|o| o.episode_return).collect(),
    )?;
    report.diverged_trials = diverged;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub flat: EvalReport,
    pub rough: EvalReport,
    /// `mean_flat - mean_rough`.
    pub degradation: f64,
}

impl TransferReport {
    pub fn new(flat: EvalReport, rough: EvalReport) -> Self {
        Self {
            degradation: flat.mean - rough.mean,
            flat,
            rough,
        }
    }

    pub fn to_csv(&self) -> String {
        let trials = self
            .flat
            .trial_returns
            .len()
            .max(self.rough.trial_returns.len());
        format!(
            "{}\n{}\n{}\n",
            report_csv_header(trials),
            self.flat.csv_row(),
            self.rough.csv_row()
        )
    }

    /// Results table with columns Mean, Std. Dev., Median, Best.
    pub fn table(&self) -> String {
        let mut t =
            String::from("| Terrain | Mean | Std. Dev. | Median | Best |\n|---|---|---|---|---|\n");
        for r in [&self.flat, &self.rough] {
            let _ = writeln!(
                t,
                "| {} | {:.2} | {:.2} | {:.2} | {:.2} |",
                r.terrain, r.mean, r.std, r.median, r.best
            );
        }
        let _ = writeln!(
            t,
            "\nDegradation (flat mean - rough mean): {:.2}",
            self.degradation
        );
        t
    }
}

/// Evaluates on flat then rough terrain with the same trial seeds.
pub fn transfer_experiment(
    checkpoint: &Checkpoint,
    trials: usize,
    eval_seed: u64,
    fixed_rough: Option<&Terrain>,
) -> Result<TransferReport> {
    let flat = evaluate(checkpoint, TerrainKind::Flat, trials, eval_seed, None)?;
    let rough = evaluate(
        checkpoint,
        TerrainKind::Rough,
        trials,
        eval_seed,
        fixed_rough,
    )?;
    Ok(TransferReport::new(flat, rough))
}

pub fn write_report(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
