//! One-dimensional stand-in for the forward-velocity objective.
//!
//! A unit mass on a line is pushed by `gain * a` against linear drag and
//! earns `75 * v` per step. Velocity at every step is increasing in every
//! earlier action, so the constant maximal push is optimal and its return is
//! known in closed form by rollout.

use super::{EnvStep, Environment};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingMassConfig {
    pub dt: f64,
    pub gain: f64,
    pub drag: f64,
    pub horizon: usize,
    pub action_bound: f64,
    pub velocity_scale: f64,
}

impl Default for SlidingMassConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            gain: 2.0,
            drag: 1.0,
            horizon: 50,
            action_bound: 0.7,
            velocity_scale: 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlidingMass {
    config: SlidingMassConfig,
    velocity: f64,
    t: usize,
    active: bool,
}

impl SlidingMass {
    pub fn new(config: SlidingMassConfig) -> Self {
        Self {
            config,
            velocity: 0.0,
            t: 0,
            active: false,
        }
    }

    fn observation(&self) -> Vec<f64> {
        vec![
            self.velocity / self.config.velocity_scale,
            self.t as f64 / self.config.horizon as f64,
        ]
    }

    /// Return of the constant `+bound` policy, which is optimal.
    pub fn optimal_return(&self) -> f64 {
        let mut env = SlidingMass::new(self.config);
        env.reset(0).expect("reset cannot fail");
        let mut total = 0.0;
        loop {
            let s = env
                .step(&[self.config.action_bound])
                .expect("step within horizon");
            total += s.reward;
            if s.done {
                return total;
            }
        }
    }
}

impl Environment for SlidingMass {
    fn observation_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn action_bound(&self) -> f64 {
        self.config.action_bound
    }

    fn max_steps(&self) -> usize {
        self.config.horizon
    }

    fn reset(&mut self, _seed: u64) -> Result<Vec<f64>> {
        self.velocity = 0.0;
        self.t = 0;
        self.active = true;
        Ok(self.observation())
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        if !self.active {
            return Err(Error::Protocol(
                "sliding mass stepped outside an episode".into(),
            ));
        }
        let [a] = action else {
            return Err(Error::Input(format!(
                "expected 1 action, got {}",
                action.len()
            )));
        };
        let b = self.config.action_bound;
        let a = a.clamp(-b, b);
        let c = &self.config;
        self.velocity += c.dt * (c.gain * a - c.drag * self.velocity);
        self.t += 1;
        let done = self.t >= c.horizon;
        self.active = !done;
        Ok(EnvStep {
            observation: self.observation(),
            reward: 75.0 * self.velocity,
            done,
            terminal: false,
        })
    }
}
