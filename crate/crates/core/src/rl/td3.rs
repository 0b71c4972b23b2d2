use super::{
    td3_critic_target, update_actor, update_critic, ActorCritic, RlHyperparams, TrainStats,
};
use crate::error::Result;
use crate::net::{init_network, polyak_blend_in_place, AdamState, NetworkSpec, ParamVector};
use crate::replay::{ReplayBuffer, Transition};
use crate::seed::{self, stream};

/// Twin critics with a min backup, target-policy smoothing and delayed actor
/// updates.
#[derive(Debug, Clone)]
pub struct Td3Learner {
    pub actor: ParamVector,
    pub critics: [ParamVector; 2],
    pub target_actor: ParamVector,
    pub target_critics: [ParamVector; 2],
    pub actor_optimizer: AdamState,
    pub critic_optimizers: [AdamState; 2],
    pub hyperparams: RlHyperparams,
    pub update_counter: u64,
    actor_updates: u64,
}

impl Td3Learner {
    pub fn new(
        obs_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        hyperparams: RlHyperparams,
        seed: u64,
    ) -> Result<Self> {
        hyperparams.validate()?;
        let actor_spec = NetworkSpec::actor(obs_dim, action_dim, hidden, hyperparams.action_bound)?;
        let critic_spec = NetworkSpec::critic(obs_dim, action_dim, hidden)?;
        let actor = init_network(&actor_spec, seed::derive(seed, stream::ACTOR_INIT, 0))?;
        let c1 = init_network(&critic_spec, seed::derive(seed, stream::CRITIC_INIT, 0))?;
        let c2 = init_network(&critic_spec, seed::derive(seed, stream::CRITIC_INIT, 1))?;
        Ok(Self::from_networks(actor, [c1, c2], hyperparams))
    }

    pub fn from_networks(
        actor: ParamVector,
        critics: [ParamVector; 2],
        hyperparams: RlHyperparams,
    ) -> Self {
        Self {
            actor_optimizer: AdamState::new(actor.len()),
            critic_optimizers: [
                AdamState::new(critics[0].len()),
                AdamState::new(critics[1].len()),
            ],
            target_actor: actor.clone(),
            target_critics: critics.clone(),
            actor,
            critics,
            hyperparams,
            update_counter: 0,
            actor_updates: 0,
        }
    }

    pub fn critic_targets(&self, batch: &[&Transition], seed: u64) -> Result<Vec<f64>> {
        td3_critic_target(
            batch,
            &self.target_actor,
            [&self.target_critics[0], &self.target_critics[1]],
            &self.hyperparams,
            seed,
        )
    }

    /// Updates both critics against the same targets; returns their mean loss.
    pub fn update_critics(&mut self, batch: &[&Transition], targets: &[f64]) -> Result<f64> {
        let lr = self.hyperparams.critic_lr;
        let mut loss = 0.0;
        for (critic, opt) in self
            .critics
            .iter_mut()
            .zip(self.critic_optimizers.iter_mut())
        {
            loss += 0.5 * update_critic(critic, opt, batch, targets, lr)?;
        }
        Ok(loss)
    }

    /// Policy step against the first critic.
    pub fn update_actor(&mut self, batch: &[&Transition]) -> Result<f64> {
        self.actor_updates += 1;
        update_actor(
            &mut self.actor,
            &mut self.actor_optimizer,
            &self.critics[0],
            batch,
            self.hyperparams.actor_lr,
        )
    }

    fn blend_targets(&mut self) -> Result<()> {
        let tau = self.hyperparams.tau;
        polyak_blend_in_place(&mut self.target_actor, &self.actor, tau)?;
        for (t, c) in self.target_critics.iter_mut().zip(&self.critics) {
            polyak_blend_in_place(t, c, tau)?;
        }
        Ok(())
    }
}

impl ActorCritic for Td3Learner {
    fn actor(&self) -> &ParamVector {
        &self.actor
    }

    fn critics(&self) -> Vec<&ParamVector> {
        self.critics.iter().collect()
    }

    fn load_actor(&mut self, values: &[f64]) -> Result<()> {
        self.actor.assign(values)?;
        self.target_actor.assign(values)?;
        self.actor_optimizer.reset();
        Ok(())
    }

    /// Critics every call; actor and all target blends when the incremented
    /// counter is a multiple of the policy delay, so after `n` calls exactly
    /// `floor(n / d)` actor updates have happened.
    fn train_step(&mut self, buffer: &ReplayBuffer, seed: u64) -> Result<TrainStats> {
        let batch = buffer.sample_batch(
            self.hyperparams.batch_size,
            seed::derive(seed, stream::BATCH, 0),
        )?;
        let targets = self.critic_targets(&batch, seed::derive(seed, stream::TARGET_NOISE, 0))?;
        let critic_loss = self.update_critics(&batch, &targets)?;
        self.update_counter += 1;
        let mut actor_objective = None;
        if self
            .update_counter
            .is_multiple_of(self.hyperparams.policy_delay as u64)
        {
            actor_objective = Some(self.update_actor(&batch)?);
            self.blend_targets()?;
        }
        Ok(TrainStats {
            critic_loss,
            actor_objective,
        })
    }

    fn hyperparams(&self) -> &RlHyperparams {
        &self.hyperparams
    }

    fn actor_updates(&self) -> u64 {
        self.actor_updates
    }
}
