use super::{
    ddpg_critic_target, update_actor, update_critic, ActorCritic, RlHyperparams, TrainStats,
};
use crate::error::Result;
use crate::net::{init_network, polyak_blend_in_place, AdamState, NetworkSpec, ParamVector};
use crate::replay::{ReplayBuffer, Transition};
use crate::seed::{self, stream};

/// Single-critic deterministic policy gradient with Polyak target networks.
#[derive(Debug, Clone)]
pub struct DdpgLearner {
    pub actor: ParamVector,
    pub critic: ParamVector,
    pub target_actor: ParamVector,
    pub target_critic: ParamVector,
    pub actor_optimizer: AdamState,
    pub critic_optimizer: AdamState,
    pub hyperparams: RlHyperparams,
    actor_updates: u64,
}

impl DdpgLearner {
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
        let critic = init_network(&critic_spec, seed::derive(seed, stream::CRITIC_INIT, 0))?;
        Ok(Self::from_networks(actor, critic, hyperparams))
    }

    pub fn from_networks(
        actor: ParamVector,
        critic: ParamVector,
        hyperparams: RlHyperparams,
    ) -> Self {
        Self {
            actor_optimizer: AdamState::new(actor.len()),
            critic_optimizer: AdamState::new(critic.len()),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            hyperparams,
            actor_updates: 0,
        }
    }

    pub fn critic_targets(&self, batch: &[&Transition]) -> Result<Vec<f64>> {
        ddpg_critic_target(
            batch,
            &self.target_actor,
            &self.target_critic,
            self.hyperparams.gamma,
        )
    }

    pub fn update_critic(&mut self, batch: &[&Transition], targets: &[f64]) -> Result<f64> {
        update_critic(
            &mut self.critic,
            &mut self.critic_optimizer,
            batch,
            targets,
            self.hyperparams.critic_lr,
        )
    }

    pub fn update_actor(&mut self, batch: &[&Transition]) -> Result<f64> {
        self.actor_updates += 1;
        update_actor(
            &mut self.actor,
            &mut self.actor_optimizer,
            &self.critic,
            batch,
            self.hyperparams.actor_lr,
        )
    }

    fn blend_targets(&mut self) -> Result<()> {
        let tau = self.hyperparams.tau;
        polyak_blend_in_place(&mut self.target_actor, &self.actor, tau)?;
        polyak_blend_in_place(&mut self.target_critic, &self.critic, tau)
    }
}

impl ActorCritic for DdpgLearner {
    fn actor(&self) -> &ParamVector {
        &self.actor
    }

    fn critics(&self) -> Vec<&ParamVector> {
        vec![&self.critic]
    }

    fn load_actor(&mut self, values: &[f64]) -> Result<()> {
        self.actor.assign(values)?;
        self.target_actor.assign(values)?;
        self.actor_optimizer.reset();
        Ok(())
    }

    /// Critic update, actor update, then both target blends.
    fn train_step(&mut self, buffer: &ReplayBuffer, seed: u64) -> Result<TrainStats> {
        let batch = buffer.sample_batch(
            self.hyperparams.batch_size,
            seed::derive(seed, stream::BATCH, 0),
        )?;
        let targets = self.critic_targets(&batch)?;
        let critic_loss = self.update_critic(&batch, &targets)?;
        let objective = self.update_actor(&batch)?;
        self.blend_targets()?;
        Ok(TrainStats {
            critic_loss,
            actor_objective: Some(objective),
        })
    }

    fn hyperparams(&self) -> &RlHyperparams {
        &self.hyperparams
    }

    fn actor_updates(&self) -> u64 {
        self.actor_updates
    }
}
