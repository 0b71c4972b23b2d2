//! Diagonal-Gaussian Cross-Entropy Method over flat parameter vectors, and
//! the CEM-RL generation in which half the population is refined by a shared
//! actor-critic learner before evaluation.

mod coupling;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use coupling::{
    cem_rl_generation, evaluate_policy, gradient_budget, EpisodeOutcome, GenerationLog,
    GenerationOutcome,
};

use crate::error::{Error, Result};
use crate::seed::{self, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CemState {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub noise_floor: f64,
    pub population_size: usize,
    pub elite_count: usize,
    pub generation: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub params: Vec<f64>,
    /// NaN until evaluated.
    pub fitness: f64,
    pub rl_updated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CemConfig {
    pub population_size: usize,
    pub elite_count: usize,
    pub sigma_init: f64,
    pub noise_init: f64,
    pub noise_decay: f64,
    pub noise_final: f64,
    /// Upper bound on gradient steps per RL individual.
    pub grad_step_cap: usize,
    /// Overrides the adaptive gradient budget when set.
    pub grad_steps: Option<usize>,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            elite_count: 5,
            sigma_init: 1e-3,
            noise_init: 1e-3,
            noise_decay: 0.999,
            noise_final: 1e-5,
            grad_step_cap: 1000,
            grad_steps: None,
        }
    }
}

impl CemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Config(
                "cem.population_size must be at least 2".into(),
            ));
        }
        if self.elite_count == 0 || self.elite_count > self.population_size {
            return Err(Error::Config(format!(
                "cem.elite_count must lie in 1..={}, got {}",
                self.population_size, self.elite_count
            )));
        }
        if !(self.sigma_init >= 0.0) || !(self.noise_init >= 0.0) || !(self.noise_final >= 0.0) {
            return Err(Error::Config("cem variances must be non-negative".into()));
        }
        if !(self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return Err(Error::Config(format!(
                "cem.noise_decay must lie in (0, 1], got {}",
                self.noise_decay
            )));
        }
        Ok(())
    }

    /// Initial distribution centred on `mean` with isotropic `sigma_init`.
    pub fn initial_state(&self, mean: Vec<f64>) -> Result<CemState> {
        self.validate()?;
        CemState::new(
            mean,
            self.sigma_init,
            self.noise_init,
            self.population_size,
            self.elite_count,
        )
    }
}

impl CemState {
    pub fn new(
        mean: Vec<f64>,
        variance: f64,
        noise_floor: f64,
        population_size: usize,
        elite_count: usize,
    ) -> Result<Self> {
        let state = Self {
            variance: vec![variance; mean.len()],
            mean,
            noise_floor,
            population_size,
            elite_count,
            generation: 0,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Input("population size must be at least 2".into()));
        }
        if self.elite_count == 0 || self.elite_count > self.population_size {
            return Err(Error::Input(format!(
                "elite count {} outside 1..={}",
                self.elite_count, self.population_size
            )));
        }
        if self.variance.len() != self.mean.len() {
            return Err(Error::Input("mean and variance lengths differ".into()));
        }
        if !self.variance.iter().all(|v| *v >= 0.0) || !(self.noise_floor >= 0.0) {
            return Err(Error::Input("variances must be non-negative".into()));
        }
        if !self.mean.iter().all(|m| m.is_finite()) {
            return Err(Error::Input("mean contains non-finite values".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Draws `z_j = mu + sqrt(var + eps) * g_j`; individual `j` uses its own
/// derived stream so populations are reproducible per `(state, seed)`.
pub fn sample_population(state: &CemState, seed: u64) -> Vec<Individual> {
    let scale: Vec<f64> = state
        .variance
        .iter()
        .map(|v| (v + state.noise_floor).sqrt())
        .collect();
    (0..state.population_size)
        .map(|j| {
            let mut rng = seed::rng(seed::derive(seed, stream::POPULATION, j as u64));
            let params = state
                .mean
                .iter()
                .zip(&scale)
                .map(|(m, s)| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    m + s * g
                })
                .collect();
            Individual {
                params,
                fitness: f64::NAN,
                rl_updated: false,
            }
        })
        .collect()
}

/// Log-rank weights `log(1 + K) - log(i)`, normalized to sum to one.
pub fn elite_weights(elite_count: usize) -> Vec<f64> {
    let k = elite_count as f64;
    let raw: Vec<f64> = (1..=elite_count)
        .map(|i| (1.0 + k).ln() - (i as f64).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Indices of `fitnesses` sorted best first; ties keep the lower index first.
pub fn rank_descending(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]).then(a.cmp(&b)));
    order
}

/// Refits mean and variance to the weighted elites. The variance is measured
/// around the previous mean and the noise floor is added on top.
pub fn cem_update(state: &CemState, samples: &[Vec<f64>], fitnesses: &[f64]) -> Result<CemState> {
    if samples.len() != fitnesses.len() {
        return Err(Error::Input(format!(
            "{} samples but {} fitness values",
            samples.len(),
            fitnesses.len()
        )));
    }
    if samples.len() < state.elite_count {
        return Err(Error::Input(format!(
            "need at least {} samples, got {}",
            state.elite_count,
            samples.len()
        )));
    }
    if let Some(i) = fitnesses.iter().position(|f| !f.is_finite()) {
        return Err(Error::Input(format!(
            "fitness of individual {i} is not finite"
        )));
    }
    if let Some(s) = samples.iter().find(|s| s.len() != state.dim()) {
        return Err(Error::Input(format!(
            "sample length {} != {}",
            s.len(),
            state.dim()
        )));
    }
    let order = rank_descending(fitnesses);
    let weights = elite_weights(state.elite_count);
    // Accumulating offsets from the old mean keeps a zero-spread population
    // an exact fixed point despite rounding in the weights.
    let mut mean = state.mean.clone();
    let mut variance = vec![state.noise_floor; state.dim()];
    for (&idx, &w) in order.iter().zip(&weights) {
        let z = &samples[idx];
        for d in 0..state.dim() {
            let dev = z[d] - state.mean[d];
            mean[d] += w * dev;
            variance[d] += w * dev * dev;
        }
    }
    Ok(CemState {
        mean,
        variance,
        generation: state.generation + 1,
        ..state.clone()
    })
}

/// `cem_update` over evaluated individuals.
pub fn cem_update_individuals(state: &CemState, individuals: &[Individual]) -> Result<CemState> {
    let samples: Vec<Vec<f64>> = individuals.iter().map(|i| i.params.clone()).collect();
    let fitnesses: Vec<f64> = individuals.iter().map(|i| i.fitness).collect();
    cem_update(state, &samples, &fitnesses)
}

/// `eps <- max(eps_final, eps * rate)`.
pub fn decay_noise(state: &CemState, rate: f64, floor: f64) -> CemState {
    CemState {
        noise_floor: floor.max(state.noise_floor * rate),
        ..state.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyOutcome {
    pub state: CemState,
    pub best_params: Vec<f64>,
    pub best_fitness: f64,
}

/// Plain CEM (no gradient coupling) maximizing `objective`.
pub fn cem_solve_toy(
    objective: impl Fn(&[f64]) -> f64,
    mut state: CemState,
    generations: usize,
    seed: u64,
) -> Result<ToyOutcome> {
    state.validate()?;
    let mut best_params = state.mean.clone();
    let mut best_fitness = f64::NEG_INFINITY;
    for g in 0..generations {
        let population =
            sample_population(&state, seed::derive(seed, stream::GENERATION, g as u64));
        let samples: Vec<Vec<f64>> = population.into_iter().map(|i| i.params).collect();
        let fitnesses: Vec<f64> = samples.iter().map(|z| objective(z)).collect();
        for (z, f) in samples.iter().zip(&fitnesses) {
            if *f > best_fitness {
                best_fitness = *f;
                best_params = z.clone();
            }
        }
        state = cem_update(&state, &samples, &fitnesses)?;
    }
    Ok(ToyOutcome {
        state,
        best_params,
        best_fitness,
    })
}
