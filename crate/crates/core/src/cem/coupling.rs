use rayon::prelude::*;

use super::{
    cem_update_individuals, decay_noise, sample_population, CemConfig, CemState, Individual,
};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::net::{NetworkSpec, ParamVector};
use crate::replay::{ReplayBuffer, Transition};
use crate::rl::ActorCritic;
use crate::seed::{self, stream};

/// One noise-free episode of a deterministic actor.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub transitions: Vec<Transition>,
    pub episode_return: f64,
    pub steps: usize,
    /// The simulator diverged; the return covers the steps before failure.
    pub diverged: bool,
}

/// Runs `actor` without exploration noise until the episode ends. A
/// divergence ends the episode early instead of failing the caller.
pub fn evaluate_policy(
    actor: &ParamVector,
    env: &mut dyn Environment,
    seed: u64,
) -> Result<EpisodeOutcome> {
    let bound = env.action_bound();
    let mut obs = env.reset(seed)?;
    let mut outcome = EpisodeOutcome {
        transitions: Vec::new(),
        episode_return: 0.0,
        steps: 0,
        diverged: false,
    };
    loop {
        let action: Vec<f64> = actor
            .forward(&obs)?
            .into_iter()
            .map(|a| {
                if a.is_finite() {
                    a.clamp(-bound, bound)
                } else {
                    0.0
                }
            })
            .collect();
        let step = match env.step(&action) {
            Ok(s) => s,
            Err(Error::SimulationDiverged(_)) => {
                outcome.diverged = true;
                return Ok(outcome);
            }
            Err(e) => return Err(e),
        };
        outcome.episode_return += step.reward;
        outcome.steps += 1;
        outcome.transitions.push(Transition {
            observation: obs,
            action,
            reward: step.reward,
            next_observation: step.observation.clone(),
            done: step.terminal,
        });
        if step.done {
            return Ok(outcome);
        }
        obs = step.observation;
    }
}

/// Gradient steps per RL individual: the previous generation's environment
/// steps shared across the RL half, capped, unless a fixed count is set.
pub fn gradient_budget(config: &CemConfig, previous_env_steps: usize) -> usize {
    if let Some(g) = config.grad_steps {
        return g;
    }
    let half = (config.population_size / 2).max(1);
    (previous_env_steps / half).min(config.grad_step_cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationLog {
    pub generation: u64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub median_fitness: f64,
    pub noise_floor: f64,
    pub buffer_size: usize,
    /// NaN when no individual received gradient steps.
    pub rl_mean_fitness: f64,
    pub es_mean_fitness: f64,
    pub env_steps: usize,
    pub grad_steps: usize,
    pub diverged: usize,
}

impl GenerationLog {
    pub const CSV_COLUMNS: &'static str =
        "mean_fitness,median_fitness,noise_floor,buffer_size,rl_mean_fitness,es_mean_fitness,env_steps,grad_steps,diverged";

    /// Values for [`Self::CSV_COLUMNS`], comma separated.
    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.mean_fitness,
            self.median_fitness,
            self.noise_floor,
            self.buffer_size,
            self.rl_mean_fitness,
            self.es_mean_fitness,
            self.env_steps,
            self.grad_steps,
            self.diverged
        )
    }
}

#[derive(Debug, Clone)]
pub struct GenerationOutcome {
    pub state: CemState,
    pub individuals: Vec<Individual>,
    pub log: GenerationLog,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One CEM-RL generation:
/// 1. sample the population;
/// 2. give the first half `grad_steps` learner train steps each (critics
///    included), writing the refined actor back;
/// 3. evaluate everyone for one episode, in parallel, then append all
///    transitions to `buffer` in individual order;
/// 4. refit the distribution and decay its noise floor.
///
/// Without a learner this is plain CEM that still fills the buffer.
#[allow(clippy::too_many_arguments)]
pub fn cem_rl_generation(
    state: &CemState,
    mut learner: Option<&mut dyn ActorCritic>,
    actor_spec: &NetworkSpec,
    env_factory: &(dyn Fn(u64) -> Result<Box<dyn Environment>> + Sync),
    buffer: &mut ReplayBuffer,
    config: &CemConfig,
    grad_steps: usize,
    seed: u64,
) -> Result<GenerationOutcome> {
    state.validate()?;
    if actor_spec.param_count() != state.dim() {
        return Err(Error::Input(format!(
            "actor has {} parameters but the distribution has {}",
            actor_spec.param_count(),
            state.dim()
        )));
    }
    let mut individuals = sample_population(state, seed::derive(seed, stream::POPULATION, 0));

    if let Some(learner) = learner.as_deref_mut() {
        for (j, ind) in individuals
            .iter_mut()
            .take(state.population_size / 2)
            .enumerate()
        {
            learner.load_actor(&ind.params)?;
            if !buffer.is_empty() {
                for k in 0..grad_steps {
                    let s = seed::derive(seed, stream::TRAIN_STEP, ((j as u64) << 32) | k as u64);
                    learner.train_step(buffer, s)?;
                }
            }
            ind.params = learner.actor().values().to_vec();
            ind.rl_updated = true;
        }
    }

    let episodes: Vec<EpisodeOutcome> = individuals
        .par_iter()
        .enumerate()
        .map(|(j, ind)| {
            let actor = ParamVector::unflatten(actor_spec, ind.params.clone())?;
            let env_seed = seed::derive(seed, stream::INDIVIDUAL_ENV, j as u64);
            let mut env = env_factory(env_seed)?;
            evaluate_policy(&actor, env.as_mut(), env_seed)
        })
        .collect::<Result<_>>()?;

    let mut env_steps = 0;
    let mut diverged = 0;
    for (ind, ep) in individuals.iter_mut().zip(episodes) {
        ind.fitness = ep.episode_return;
        env_steps += ep.steps;
        diverged += ep.diverged as usize;
        for t in ep.transitions {
            buffer.push(t)?;
        }
    }

    let next = cem_update_individuals(state, &individuals)?;
    let next = decay_noise(&next, config.noise_decay, config.noise_final);

    let fitness: Vec<f64> = individuals.iter().map(|i| i.fitness).collect();
    let rl: Vec<f64> = individuals
        .iter()
        .filter(|i| i.rl_updated)
        .map(|i| i.fitness)
        .collect();
    let es: Vec<f64> = individuals
        .iter()
        .filter(|i| !i.rl_updated)
        .map(|i| i.fitness)
        .collect();
    let log = GenerationLog {
        generation: state.generation,
        best_fitness: fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_fitness: mean(&fitness),
        median_fitness: median(&fitness),
        noise_floor: next.noise_floor,
        buffer_size: buffer.len(),
        rl_mean_fitness: mean(&rl),
        es_mean_fitness: mean(&es),
        env_steps,
        grad_steps: if learner.is_some() { grad_steps } else { 0 },
        diverged,
    };
    Ok(GenerationOutcome {
        state: next,
        individuals,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{
        make_terrain, Normalizers, QuadrupedEnv, RobotConfig, SlidingMass, SlidingMassConfig,
        TerrainKind,
    };
    use crate::rl::{DdpgLearner, RlHyperparams, Td3Learner};

    fn mass_factory(_seed: u64) -> Result<Box<dyn Environment>> {
        Ok(Box::new(SlidingMass::new(SlidingMassConfig::default())))
    }

    fn quadruped_factory(t_max: usize) -> impl Fn(u64) -> Result<Box<dyn Environment>> + Sync {
        move |_seed| {
            let terrain = make_terrain(TerrainKind::Flat, 0, 0.0, 0.5)?;
            Ok(Box::new(QuadrupedEnv::new(
                terrain,
                RobotConfig::default(),
                Normalizers::default(),
                t_max,
            )?) as Box<dyn Environment>)
        }
    }

    fn small_hp() -> RlHyperparams {
        RlHyperparams {
            batch_size: 8,
            ..RlHyperparams::default()
        }
    }

    #[test]
    fn half_population_is_rl_updated() {
        let mut learner = Td3Learner::new(2, 1, &[8], small_hp(), 3).unwrap();
        let spec = learner.actor.spec().clone();
        let config = CemConfig {
            population_size: 4,
            elite_count: 2,
            ..CemConfig::default()
        };
        let mut state = config
            .initial_state(learner.actor.values().to_vec())
            .unwrap();
        let mut buffer = ReplayBuffer::new(10_000, 2, 1).unwrap();
        for g in 0..2 {
            let out = cem_rl_generation(
                &state,
                Some(&mut learner),
                &spec,
                &mass_factory,
                &mut buffer,
                &config,
                5,
                g,
            )
            .unwrap();
            let flags: Vec<bool> = out.individuals.iter().map(|i| i.rl_updated).collect();
            assert_eq!(flags, vec![true, true, false, false]);
            state = out.state;
        }
        assert_eq!(state.generation, 2);
    }

    #[test]
    fn buffer_grows_by_episode_lengths_and_fitness_is_return() {
        let t_max = 30;
        let mut learner = DdpgLearner::new(48, 8, &[16], small_hp(), 1).unwrap();
        let spec = learner.actor.spec().clone();
        let config = CemConfig {
            population_size: 4,
            elite_count: 2,
            sigma_init: 0.05,
            ..CemConfig::default()
        };
        let state = config
            .initial_state(learner.actor.values().to_vec())
            .unwrap();
        let mut buffer = ReplayBuffer::new(100_000, 48, 8).unwrap();
        let factory = quadruped_factory(t_max);
        let out = cem_rl_generation(
            &state,
            Some(&mut learner),
            &spec,
            &factory,
            &mut buffer,
            &config,
            3,
            9,
        )
        .unwrap();
        assert_eq!(buffer.len(), out.log.env_steps);
        let before = buffer.len();
        let out2 = cem_rl_generation(
            &out.state,
            Some(&mut learner),
            &spec,
            &factory,
            &mut buffer,
            &config,
            3,
            10,
        )
        .unwrap();
        assert_eq!(buffer.len() - before, out2.log.env_steps);

        for (j, ind) in out2.individuals.iter().enumerate() {
            let actor = ParamVector::unflatten(&spec, ind.params.clone()).unwrap();
            let env_seed = seed::derive(10, stream::INDIVIDUAL_ENV, j as u64);
            let mut env = factory(env_seed).unwrap();
            let ep = evaluate_policy(&actor, env.as_mut(), env_seed).unwrap();
            let summed: f64 = ep.transitions.iter().map(|t| t.reward).sum();
            assert!((ind.fitness - summed).abs() < 1e-9);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let run = || {
            let mut learner = Td3Learner::new(2, 1, &[8], small_hp(), 3).unwrap();
            let spec = learner.actor.spec().clone();
            let config = CemConfig {
                population_size: 4,
                elite_count: 2,
                sigma_init: 0.01,
                ..CemConfig::default()
            };
            let mut state = config
                .initial_state(learner.actor.values().to_vec())
                .unwrap();
            let mut buffer = ReplayBuffer::new(10_000, 2, 1).unwrap();
            for g in 0..3 {
                state = cem_rl_generation(
                    &state,
                    Some(&mut learner),
                    &spec,
                    &mass_factory,
                    &mut buffer,
                    &config,
                    4,
                    g,
                )
                .unwrap()
                .state;
            }
            (state, learner.critics[0].clone())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn budget_rule() {
        let c = CemConfig {
            population_size: 10,
            grad_step_cap: 100,
            ..CemConfig::default()
        };
        assert_eq!(gradient_budget(&c, 0), 0);
        assert_eq!(gradient_budget(&c, 250), 50);
        assert_eq!(gradient_budget(&c, 5000), 100);
        let fixed = CemConfig {
            grad_steps: Some(7),
            ..c
        };
        assert_eq!(gradient_budget(&fixed, 5000), 7);
    }
}
