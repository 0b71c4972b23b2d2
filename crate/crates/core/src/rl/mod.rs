//! Off-policy actor-critic learners (DDPG and TD3).
//!
//! Critics take the concatenation `[observation, action]`. The free
//! functions here are the building blocks; [`DdpgLearner`] and
//! [`Td3Learner`] schedule them.

mod ddpg;
mod td3;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use ddpg::DdpgLearner;
pub use td3::Td3Learner;

use crate::error::{Error, Result};
use crate::net::{AdamState, ParamVector};
use crate::replay::{ReplayBuffer, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlHyperparams {
    pub gamma: f64,
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch_size: usize,
    pub exploration_sigma: f64,
    pub policy_delay: usize,
    pub target_noise_sigma: f64,
    pub target_noise_clip: f64,
    pub action_bound: f64,
}

impl Default for RlHyperparams {
    fn default() -> Self {
        let bound = 0.7;
        Self {
            gamma: 0.99,
            tau: 0.005,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            batch_size: 128,
            exploration_sigma: 0.1 * bound,
            policy_delay: 2,
            target_noise_sigma: 0.2 * bound,
            target_noise_clip: 0.5 * bound,
            action_bound: bound,
        }
    }
}

impl RlHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "rl.gamma must lie in [0, 1), got {}",
                self.gamma
            )));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!(
                "rl.tau must lie in (0, 1], got {}",
                self.tau
            )));
        }
        if self.policy_delay == 0 {
            return Err(Error::Config("rl.policy_delay must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("rl.batch_size must be at least 1".into()));
        }
        if !(self.target_noise_clip >= 0.0)
            || !(self.target_noise_sigma >= 0.0)
            || !(self.exploration_sigma >= 0.0)
        {
            return Err(Error::Config("rl noise scales must be non-negative".into()));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(Error::Config("rl learning rates must be positive".into()));
        }
        if !(self.action_bound > 0.0) {
            return Err(Error::Config("rl.action_bound must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainStats {
    pub critic_loss: f64,
    /// Mean Q of the online actor's actions, when the actor was updated.
    pub actor_objective: Option<f64>,
}

/// Common surface of the gradient learners, used by training loops and the
/// CEM coupling.
pub trait ActorCritic: Send {
    fn actor(&self) -> &ParamVector;
    fn critics(&self) -> Vec<&ParamVector>;
    /// Replaces actor and target actor and resets the actor optimiser.
    fn load_actor(&mut self, values: &[f64]) -> Result<()>;
    fn train_step(&mut self, buffer: &ReplayBuffer, seed: u64) -> Result<TrainStats>;
    fn hyperparams(&self) -> &RlHyperparams;
    fn actor_updates(&self) -> u64;
}

pub fn critic_input(observation: &[f64], action: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(observation.len() + action.len());
    v.extend_from_slice(observation);
    v.extend_from_slice(action);
    v
}

fn q_value(critic: &ParamVector, observation: &[f64], action: &[f64]) -> Result<f64> {
    Ok(critic.forward(&critic_input(observation, action))?[0])
}

/// `clamp(pi(s) + eps, -bound, bound)` with `eps ~ N(0, sigma^2)` per coordinate.
pub fn exploration_action(
    actor: &ParamVector,
    observation: &[f64],
    sigma: f64,
    bound: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::Input(format!(
            "exploration sigma must be non-negative, got {sigma}"
        )));
    }
    let mut action = actor.forward(observation)?;
    if sigma > 0.0 {
        let mut rng = crate::seed::rng(seed);
        let noise = Normal::new(0.0, sigma).map_err(|e| Error::Input(e.to_string()))?;
        for a in action.iter_mut() {
            *a += noise.sample(&mut rng);
        }
    }
    for a in action.iter_mut() {
        *a = a.clamp(-bound, bound);
    }
    Ok(action)
}

/// Uniform random action, used during warmup.
pub fn random_action(dim: usize, bound: f64, seed: u64) -> Vec<f64> {
    let mut rng = crate::seed::rng(seed);
    (0..dim).map(|_| rng.random_range(-bound..=bound)).collect()
}

/// `r + gamma * (1 - done) * q_next`; exactly `r` for terminal items.
pub fn bootstrap_targets(batch: &[&Transition], next_q: &[f64], gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .zip(next_q)
        .map(|(t, q)| {
            if t.done {
                t.reward
            } else {
                t.reward + gamma * q
            }
        })
        .collect()
}

/// DDPG backup `y = r + gamma * (1 - done) * Q'(s', pi'(s'))`.
pub fn ddpg_critic_target(
    batch: &[&Transition],
    target_actor: &ParamVector,
    target_critic: &ParamVector,
    gamma: f64,
) -> Result<Vec<f64>> {
    let next_q = batch
        .iter()
        .map(|t| {
            let a = target_actor.forward(&t.next_observation)?;
            q_value(target_critic, &t.next_observation, &a)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(bootstrap_targets(batch, &next_q, gamma))
}

/// Target-policy smoothing: `clamp(pi'(s') + clamp(eps, -c, c), -bound, bound)`.
pub fn smoothed_target_actions(
    batch: &[&Transition],
    target_actor: &ParamVector,
    hp: &RlHyperparams,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = crate::seed::rng(seed);
    let noise = Normal::new(0.0, hp.target_noise_sigma).map_err(|e| Error::Input(e.to_string()))?;
    let c = hp.target_noise_clip;
    batch
        .iter()
        .map(|t| {
            let mut a = target_actor.forward(&t.next_observation)?;
            for x in a.iter_mut() {
                let eps: f64 = noise.sample(&mut rng);
                *x = (*x + eps.clamp(-c, c)).clamp(-hp.action_bound, hp.action_bound);
            }
            Ok(a)
        })
        .collect()
}

/// `Q(s', a')` for given next actions.
pub fn next_q_values(
    batch: &[&Transition],
    next_actions: &[Vec<f64>],
    critic: &ParamVector,
) -> Result<Vec<f64>> {
    batch
        .iter()
        .zip(next_actions)
        .map(|(t, a)| q_value(critic, &t.next_observation, a))
        .collect()
}

/// Clipped double-Q backup with target smoothing.
pub fn td3_critic_target(
    batch: &[&Transition],
    target_actor: &ParamVector,
    target_critics: [&ParamVector; 2],
    hp: &RlHyperparams,
    seed: u64,
) -> Result<Vec<f64>> {
    let next_actions = smoothed_target_actions(batch, target_actor, hp, seed)?;
    let q1 = next_q_values(batch, &next_actions, target_critics[0])?;
    let q2 = next_q_values(batch, &next_actions, target_critics[1])?;
    let q_min: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| a.min(*b)).collect();
    Ok(bootstrap_targets(batch, &q_min, hp.gamma))
}

/// Mean squared Bellman error and its parameter gradient.
pub fn critic_loss_and_gradient(
    critic: &ParamVector,
    batch: &[&Transition],
    targets: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if batch.len() != targets.len() || batch.is_empty() {
        return Err(Error::Input(format!(
            "critic update needs matching non-empty batch and targets ({} vs {})",
            batch.len(),
            targets.len()
        )));
    }
    let n = batch.len() as f64;
    let mut grad = vec![0.0; critic.len()];
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(targets) {
        let input = critic_input(&t.observation, &t.action);
        let q = critic.forward(&input)?[0];
        let err = q - y;
        loss += err * err / n;
        critic.backward_accumulate(&input, &[2.0 * err / n], &mut grad)?;
    }
    Ok((loss, grad))
}

/// One Adam step on the mean squared error between `Q(s, a)` and `targets`.
/// Returns the loss before the step.
pub fn update_critic(
    critic: &mut ParamVector,
    optimizer: &mut AdamState,
    batch: &[&Transition],
    targets: &[f64],
    lr: f64,
) -> Result<f64> {
    let (loss, grad) = critic_loss_and_gradient(critic, batch, targets)?;
    if !loss.is_finite() {
        return Err(Error::Training(format!(
            "critic loss is not finite ({loss})"
        )));
    }
    optimizer
        .step(critic, &grad, lr)
        .map_err(|e| Error::Training(e.to_string()))?;
    Ok(loss)
}

/// Mean `Q(s, pi(s))` over the batch and the gradient of its negation with
/// respect to the actor parameters.
pub fn actor_objective_and_gradient(
    actor: &ParamVector,
    critic: &ParamVector,
    batch: &[&Transition],
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Input("actor update needs a non-empty batch".into()));
    }
    let n = batch.len() as f64;
    let obs_dim = actor.spec().input_size();
    let mut grad = vec![0.0; actor.len()];
    let mut objective = 0.0;
    for t in batch {
        let action = actor.forward(&t.observation)?;
        let input = critic_input(&t.observation, &action);
        objective += critic.forward(&input)?[0] / n;
        let dq = critic.input_gradient(&input, &[1.0])?;
        let upstream: Vec<f64> = dq[obs_dim..].iter().map(|g| -g / n).collect();
        actor.backward_accumulate(&t.observation, &upstream, &mut grad)?;
    }
    Ok((objective, grad))
}

/// One Adam ascent step on mean `Q(s, pi(s))`. Returns the objective before the step.
pub fn update_actor(
    actor: &mut ParamVector,
    optimizer: &mut AdamState,
    critic: &ParamVector,
    batch: &[&Transition],
    lr: f64,
) -> Result<f64> {
    let (objective, grad) = actor_objective_and_gradient(actor, critic, batch)?;
    if !objective.is_finite() {
        return Err(Error::Training(format!(
            "actor objective is not finite ({objective})"
        )));
    }
    optimizer
        .step(actor, &grad, lr)
        .map_err(|e| Error::Training(e.to_string()))?;
    Ok(objective)
}
