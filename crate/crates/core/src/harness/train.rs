//! Training loops for the four algorithms.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::checkpoint::{save_checkpoint, Checkpoint, Progress};
use super::config::{Algorithm, RunConfig};
use crate::cem::{cem_rl_generation, gradient_budget, CemState, GenerationLog};
use crate::env::{make_terrain, Environment, QuadrupedEnv, TerrainKind};
use crate::error::{Error, Result};
use crate::net::{NetworkSpec, ParamVector};
use crate::replay::{ReplayBuffer, Transition};
use crate::rl::{exploration_action, random_action, ActorCritic, DdpgLearner, Td3Learner};
use crate::seed::{self, stream};

pub const METRICS_FILE: &str = "metrics.csv";
pub const FINAL_CHECKPOINT: &str = "final_checkpoint.json";
pub const BEST_CHECKPOINT: &str = "best_checkpoint.json";
/// Written next to partial artifacts when a run aborts.
pub const ABORT_MARKER: &str = "ABORTED";

pub const METRICS_HEADER: &str = "step_or_generation,return,best_return,wall_ms";

pub type EnvFactory<'a> = dyn Fn(u64) -> Result<Box<dyn Environment>> + Sync + 'a;

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_checkpoint: Checkpoint,
    pub best_checkpoint: Checkpoint,
    pub returns: Vec<f64>,
    pub metrics_path: PathBuf,
}

/// Flat-terrain quadruped environments as configured.
pub fn flat_env_factory(config: &RunConfig) -> impl Fn(u64) -> Result<Box<dyn Environment>> + Sync {
    let config = config.clone();
    move |_seed| {
        let terrain = make_terrain(TerrainKind::Flat, 0, 0.0, config.env.cell_size)?;
        let env = QuadrupedEnv::new(
            terrain,
            config.robot.clone(),
            config.normalizers,
            config.env.t_max,
        )?;
        Ok(Box::new(env) as Box<dyn Environment>)
    }
}

/// Trains on flat terrain and writes metrics and checkpoints to `out_dir`.
pub fn train(config: &RunConfig, out_dir: &Path) -> Result<TrainOutcome> {
    train_with_env(config, &flat_env_factory(config), out_dir)
}

/// Same as [`train`] on any environment. The factory receives a derived
/// seed; the quadruped ignores it because resets are seeded separately.
pub fn train_with_env(
    config: &RunConfig,
    env_factory: &EnvFactory<'_>,
    out_dir: &Path,
) -> Result<TrainOutcome> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut run = Run::new(config, env_factory, out_dir)?;
    let result = if config.algorithm.is_cem() {
        run.cem_loop()
    } else {
        run.rl_loop()
    };
    let flush = run.flush_metrics();
    match result.and(flush) {
        Ok(()) => run.finish(),
        Err(e) => {
            let marker = out_dir.join(ABORT_MARKER);
            let _ = fs::write(&marker, format!("{e}\n"));
            Err(e)
        }
    }
}

fn make_learner(
    config: &RunConfig,
    obs_dim: usize,
    action_dim: usize,
) -> Result<Box<dyn ActorCritic>> {
    let hp = config.rl.clone();
    let hidden = &config.train.hidden;
    Ok(match config.algorithm {
        Algorithm::Ddpg | Algorithm::CemDdpg => Box::new(DdpgLearner::new(
            obs_dim,
            action_dim,
            hidden,
            hp,
            config.seed,
        )?),
        Algorithm::Td3 | Algorithm::CemTd3 => Box::new(Td3Learner::new(
            obs_dim,
            action_dim,
            hidden,
            hp,
            config.seed,
        )?),
    })
}

struct Run<'a> {
    config: &'a RunConfig,
    env_factory: &'a EnvFactory<'a>,
    out_dir: &'a Path,
    learner: Box<dyn ActorCritic>,
    actor_spec: NetworkSpec,
    buffer: ReplayBuffer,
    metrics: String,
    returns: Vec<f64>,
    best_return: f64,
    best_actor: Option<ParamVector>,
    final_actor: Option<ParamVector>,
    env_steps: u64,
    started: Instant,
}

impl<'a> Run<'a> {
    fn new(
        config: &'a RunConfig,
        env_factory: &'a EnvFactory<'a>,
        out_dir: &'a Path,
    ) -> Result<Self> {
        let probe = env_factory(seed::derive(config.seed, stream::EPISODE_RESET, u64::MAX))?;
        let (obs_dim, action_dim) = (probe.observation_dim(), probe.action_dim());
        if (probe.action_bound() - config.rl.action_bound).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "rl.action_bound {} differs from the environment's {}",
                config.rl.action_bound,
                probe.action_bound()
            )));
        }
        let learner = make_learner(config, obs_dim, action_dim)?;
        let actor_spec = learner.actor().spec().clone();
        let mut metrics = String::from(METRICS_HEADER);
        if config.algorithm.is_cem() {
            metrics.push(',');
            metrics.push_str(GenerationLog::CSV_COLUMNS);
        }
        metrics.push('\n');
        Ok(Self {
            config,
            env_factory,
            out_dir,
            learner,
            actor_spec,
            buffer: ReplayBuffer::new(config.train.replay_capacity, obs_dim, action_dim)?,
            metrics,
            returns: Vec::new(),
            best_return: f64::NEG_INFINITY,
            best_actor: None,
            final_actor: None,
            env_steps: 0,
            started: Instant::now(),
        })
    }

    fn wall_ms(&self) -> u128 {
        if self.config.train.record_wall_time {
            self.started.elapsed().as_millis()
        } else {
            0
        }
    }

    fn record(
        &mut self,
        index: usize,
        ret: f64,
        best_candidate: Option<&[f64]>,
        extra: Option<String>,
    ) -> Result<()> {
        if ret > self.best_return {
            self.best_return = ret;
            let values = best_candidate.unwrap_or(self.learner.actor().values());
            self.best_actor = Some(ParamVector::unflatten(&self.actor_spec, values.to_vec())?);
        }
        self.returns.push(ret);
        let _ = write!(
            self.metrics,
            "{index},{ret},{},{}",
            self.best_return,
            self.wall_ms()
        );
        if let Some(extra) = extra {
            self.metrics.push(',');
            self.metrics.push_str(&extra);
        }
        self.metrics.push('\n');
        Ok(())
    }

    fn flush_metrics(&self) -> Result<()> {
        let path = self.out_dir.join(METRICS_FILE);
        fs::write(&path, &self.metrics).map_err(|e| Error::io(path, e))
    }

    /// Episode loop: random actions during warmup, then noisy actor actions
    /// with one train step per environment step.
    fn rl_loop(&mut self) -> Result<()> {
        let cfg = self.config;
        let bound = cfg.rl.action_bound;
        let mut env = (self.env_factory)(seed::derive(cfg.seed, stream::EPISODE_RESET, 0))?;
        let mut total: u64 = 0;
        for episode in 0..cfg.budget {
            let mut obs = env.reset(seed::derive(
                cfg.seed,
                stream::EPISODE_RESET,
                episode as u64,
            ))?;
            let mut ret = 0.0;
            loop {
                let action = if total < cfg.train.warmup_steps as u64 {
                    random_action(
                        env.action_dim(),
                        bound,
                        seed::derive(cfg.seed, stream::WARMUP_ACTION, total),
                    )
                } else {
                    let s = seed::derive(cfg.seed, stream::EXPLORATION, total);
                    exploration_action(
                        self.learner.actor(),
                        &obs,
                        cfg.rl.exploration_sigma,
                        bound,
                        s,
                    )?
                };
                let step = env.step(&action)?;
                ret += step.reward;
                total += 1;
                self.buffer.push(Transition {
                    observation: obs,
                    action,
                    reward: step.reward,
                    next_observation: step.observation.clone(),
                    done: step.terminal,
                })?;
                if total > cfg.train.warmup_steps as u64 {
                    self.learner.train_step(
                        &self.buffer,
                        seed::derive(cfg.seed, stream::TRAIN_STEP, total),
                    )?;
                }
                if step.done {
                    break;
                }
                obs = step.observation;
            }
            self.env_steps = total;
            self.record(episode, ret, None, None)?;
        }
        self.final_actor = Some(self.learner.actor().clone());
        Ok(())
    }

    /// Generation loop. The deployed policy is the distribution mean.
    fn cem_loop(&mut self) -> Result<()> {
        let cfg = self.config;
        let mut state: CemState = cfg
            .cem
            .initial_state(self.learner.actor().values().to_vec())?;
        let mut previous_steps = 0;
        for g in 0..cfg.budget {
            let grad_steps = gradient_budget(&cfg.cem, previous_steps);
            let out = cem_rl_generation(
                &state,
                Some(self.learner.as_mut()),
                &self.actor_spec,
                self.env_factory,
                &mut self.buffer,
                &cfg.cem,
                grad_steps,
                seed::derive(cfg.seed, stream::GENERATION, g as u64),
            )?;
            previous_steps = out.log.env_steps;
            self.env_steps += out.log.env_steps as u64;
            let best = out
                .individuals
                .iter()
                .max_by(|a, b| a.fitness.total_cmp(&b.fitness))
                .expect("population is non-empty");
            let params = best.params.clone();
            self.record(
                g,
                out.log.best_fitness,
                Some(&params),
                Some(out.log.csv_fields()),
            )?;
            state = out.state;
        }
        self.final_actor = Some(ParamVector::unflatten(&self.actor_spec, state.mean)?);
        Ok(())
    }

    fn finish(self) -> Result<TrainOutcome> {
        let critics: Vec<ParamVector> = self.learner.critics().into_iter().cloned().collect();
        let progress = Progress {
            iterations: self.returns.len() as u64,
            env_steps: self.env_steps,
            actor_updates: self.learner.actor_updates(),
            best_return: self.best_return,
        };
        let algorithm = self.config.algorithm;
        let final_actor = self.final_actor.expect("loop completed");
        let best_actor = self.best_actor.unwrap_or_else(|| final_actor.clone());
        let final_checkpoint = Checkpoint::new(
            algorithm,
            final_actor,
            critics.clone(),
            self.config.clone(),
            progress,
        );
        let best_checkpoint = Checkpoint::new(
            algorithm,
            best_actor,
            critics,
            self.config.clone(),
            progress,
        );
        save_checkpoint(&final_checkpoint, &self.out_dir.join(FINAL_CHECKPOINT))?;
        save_checkpoint(&best_checkpoint, &self.out_dir.join(BEST_CHECKPOINT))?;
        Ok(TrainOutcome {
            final_checkpoint,
            best_checkpoint,
            returns: self.returns,
            metrics_path: self.out_dir.join(METRICS_FILE),
        })
    }
}
