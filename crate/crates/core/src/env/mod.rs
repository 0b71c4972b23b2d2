//! Deterministic simplified quadruped simulator.

mod observe;
mod physics;
mod reward;
mod robot;
mod surrogate;
mod terrain;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use observe::{layout, observe, Normalizers, ACTION_DIM, OBS_DIM};
pub use physics::{contact_forces, integrate, integrate_with, pd_torque};
pub use reward::{compute_reward, reward_terms, RewardTerms};
pub use robot::{
    foot_velocities, forward_kinematics, leg_planar, FootForces, JointVec, RobotConfig, RobotState,
    JOINT_LIMIT, NUM_JOINTS, NUM_LEGS,
};
pub use surrogate::{SlidingMass, SlidingMassConfig};
pub use terrain::{make_terrain, Terrain, TerrainKind};

use crate::error::{Error, Result};

/// Episode ends when the torso sinks below this fraction of the stand height
/// above the local ground.
pub const FALL_HEIGHT_FRACTION: f64 = 0.4;
/// Episode ends when |roll| or |pitch| exceeds this many radians.
pub const TILT_LIMIT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    None,
    Fell,
    Tilted,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terms: RewardTerms,
    pub done: bool,
    pub done_reason: DoneReason,
}

/// Places the robot at the origin in its nominal stance, torso at stand
/// height above the local ground. `seed` drives the small joint perturbation
/// configured by `reset_joint_noise`.
pub fn reset(
    terrain: &Terrain,
    config: &RobotConfig,
    normalizers: &Normalizers,
    seed: u64,
) -> Result<(RobotState, Vec<f64>)> {
    config.validate()?;
    let mut joints = config.nominal_joints();
    if config.reset_joint_noise > 0.0 {
        let mut rng = crate::seed::rng(seed);
        let b = config.reset_joint_noise;
        for q in joints.iter_mut() {
            *q += rng.random_range(-b..=b);
        }
    }
    let position = Vector3::new(0.0, 0.0, config.stand_height() + terrain.height(0.0, 0.0));
    let state = RobotState {
        torso_position: position,
        torso_orientation: Vector3::zeros(),
        linear_velocity: Vector3::zeros(),
        angular_velocity: Vector3::zeros(),
        joint_angles: joints,
        joint_velocities: [0.0; NUM_JOINTS],
        previous_joint_angles: joints,
        foot_forces: [[0.0; 3]; NUM_LEGS],
        timestep: 0,
        reference_position: position,
    };
    let obs = observe(&state, normalizers)?;
    Ok((state, obs))
}

/// Termination check for a state; fell takes precedence over tilted over timeout.
pub fn done_reason(
    state: &RobotState,
    terrain: &Terrain,
    config: &RobotConfig,
    t_max: usize,
) -> DoneReason {
    let p = state.torso_position;
    let clearance = p.z - terrain.height(p.x, p.y);
    if clearance < FALL_HEIGHT_FRACTION * config.stand_height() {
        DoneReason::Fell
    } else if state.torso_orientation.x.abs() > TILT_LIMIT
        || state.torso_orientation.y.abs() > TILT_LIMIT
    {
        DoneReason::Tilted
    } else if state.timestep >= t_max {
        DoneReason::Timeout
    } else {
        DoneReason::None
    }
}

/// One control step: clamp targets, PD-servo the joints through the physics
/// substeps, integrate, score and check termination.
pub fn step(
    state: &RobotState,
    action: &[f64],
    terrain: &Terrain,
    config: &RobotConfig,
    normalizers: &Normalizers,
    t_max: usize,
) -> Result<(RobotState, StepResult)> {
    if action.len() != NUM_JOINTS {
        return Err(Error::Input(format!(
            "action must have {NUM_JOINTS} entries, got {}",
            action.len()
        )));
    }
    if t_max == 0 {
        return Err(Error::Input("t_max must be at least 1".into()));
    }
    match done_reason(state, terrain, config, t_max) {
        DoneReason::None => {}
        reason => {
            return Err(Error::Protocol(format!(
                "step called on a finished episode ({reason:?} at T_s = {})",
                state.timestep
            )))
        }
    }
    let bound = config.action_bound;
    let target: JointVec = std::array::from_fn(|i| {
        let a = action[i];
        if a.is_nan() {
            0.0
        } else {
            a.clamp(-bound, bound)
        }
    });
    let next = integrate_with(state, terrain, config, |q, qd| {
        pd_torque(&target, q, qd, config)
    })?;
    let terms = reward_terms(&next, t_max);
    let observation = observe(&next, normalizers)?;
    let reason = done_reason(&next, terrain, config, t_max);
    let result = StepResult {
        observation,
        reward: terms.total(),
        terms,
        done: reason != DoneReason::None,
        done_reason: reason,
    };
    Ok((next, result))
}

/// A single environment transition as seen by learners.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// Episode is over for any reason.
    pub done: bool,
    /// Episode ended in a true terminal state (not a time limit), so the
    /// value of the next state is zero.
    pub terminal: bool,
}

/// Episodic continuous-control task with actions in `[-bound, bound]^n`.
pub trait Environment: Send {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn action_bound(&self) -> f64;
    fn max_steps(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep>;
}

/// Stateful wrapper around [`reset`]/[`step`].
#[derive(Debug, Clone)]
pub struct QuadrupedEnv {
    terrain: Terrain,
    config: RobotConfig,
    normalizers: Normalizers,
    t_max: usize,
    state: Option<RobotState>,
    finished: bool,
    last: Option<StepResult>,
}

impl QuadrupedEnv {
    pub fn new(
        terrain: Terrain,
        config: RobotConfig,
        normalizers: Normalizers,
        t_max: usize,
    ) -> Result<Self> {
        config.validate()?;
        if t_max == 0 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        Ok(Self {
            terrain,
            config,
            normalizers,
            t_max,
            state: None,
            finished: false,
            last: None,
        })
    }

    pub fn state(&self) -> Option<&RobotState> {
        self.state.as_ref()
    }

    pub fn terrain(&self) -> &Terrain {
        &self.terrain
    }

    pub fn config(&self) -> &RobotConfig {
        &self.config
    }

    pub fn last_step(&self) -> Option<&StepResult> {
        self.last.as_ref()
    }

    pub fn step_full(&mut self, action: &[f64]) -> Result<&StepResult> {
        let state = self
            .state
            .as_ref()
            .ok_or_else(|| Error::Protocol("step called before reset".into()))?;
        if self.finished {
            return Err(Error::Protocol(
                "step called after the episode finished".into(),
            ));
        }
        let (next, result) = step(
            state,
            action,
            &self.terrain,
            &self.config,
            &self.normalizers,
            self.t_max,
        )?;
        self.finished = result.done;
        self.state = Some(next);
        Ok(self.last.insert(result))
    }
}

impl Environment for QuadrupedEnv {
    fn observation_dim(&self) -> usize {
        OBS_DIM
    }

    fn action_dim(&self) -> usize {
        ACTION_DIM
    }

    fn action_bound(&self) -> f64 {
        self.config.action_bound
    }

    fn max_steps(&self) -> usize {
        self.t_max
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let (state, obs) = reset(&self.terrain, &self.config, &self.normalizers, seed)?;
        self.state = Some(state);
        self.finished = false;
        self.last = None;
        Ok(obs)
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        let r = self.step_full(action)?;
        Ok(EnvStep {
            observation: r.observation.clone(),
            reward: r.reward,
            done: r.done,
            terminal: matches!(r.done_reason, DoneReason::Fell | DoneReason::Tilted),
        })
    }
}
