//! Locomotion reward.
//!
//! ```text
//! r = 75 v_x + 25 T_s / T_max - 10 |dz| - 5 |dy| - 5 |roll| - 5 |pitch|
//!     - 0.05 * sum_i | |q_i(t)| - |q_i(t-1)| |
//! ```
//!
//! `dz` and `dy` are torso displacements from the reset position. The joint
//! term compares joint-angle magnitudes, so a sign flip of equal size costs
//! nothing.

use serde::{Deserialize, Serialize};

use super::robot::RobotState;

pub const FORWARD_WEIGHT: f64 = 75.0;
pub const SURVIVAL_WEIGHT: f64 = 25.0;
pub const HEIGHT_WEIGHT: f64 = 10.0;
pub const LATERAL_WEIGHT: f64 = 5.0;
pub const ROLL_WEIGHT: f64 = 5.0;
pub const PITCH_WEIGHT: f64 = 5.0;
pub const JOINT_WEIGHT: f64 = 0.05;

/// The seven signed contributions; `total()` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardTerms {
    pub forward: f64,
    pub survival: f64,
    pub height: f64,
    pub lateral: f64,
    pub roll: f64,
    pub pitch: f64,
    pub joint_motion: f64,
}

impl RewardTerms {
    pub fn total(&self) -> f64 {
        self.forward
            + self.survival
            + self.height
            + self.lateral
            + self.roll
            + self.pitch
            + self.joint_motion
    }

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.forward,
            self.survival,
            self.height,
            self.lateral,
            self.roll,
            self.pitch,
            self.joint_motion,
        ]
    }
}

pub fn reward_terms(state: &RobotState, t_max: usize) -> RewardTerms {
    let dz = state.torso_position.z - state.reference_position.z;
    let dy = state.torso_position.y - state.reference_position.y;
    let joint_change: f64 = state
        .joint_angles
        .iter()
        .zip(&state.previous_joint_angles)
        .map(|(p, q)| (p.abs() - q.abs()).abs())
        .sum();
    RewardTerms {
        forward: FORWARD_WEIGHT * state.linear_velocity.x,
        survival: SURVIVAL_WEIGHT * state.timestep as f64 / t_max as f64,
        height: -HEIGHT_WEIGHT * dz.abs(),
        lateral: -LATERAL_WEIGHT * dy.abs(),
        roll: -ROLL_WEIGHT * state.torso_orientation.x.abs(),
        pitch: -PITCH_WEIGHT * state.torso_orientation.y.abs(),
        joint_motion: -JOINT_WEIGHT * joint_change,
    }
}

pub fn compute_reward(state: &RobotState, t_max: usize) -> f64 {
    reward_terms(state, t_max).total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn quiet() -> RobotState {
        RobotState {
            torso_position: Vector3::new(0.0, 0.0, 0.2),
            torso_orientation: Vector3::zeros(),
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            joint_angles: [0.3; 8],
            joint_velocities: [0.0; 8],
            previous_joint_angles: [0.3; 8],
            foot_forces: [[0.0; 3]; 4],
            timestep: 0,
            reference_position: Vector3::new(0.0, 0.0, 0.2),
        }
    }

    #[test]
    fn at_rest_is_zero() {
        assert_eq!(compute_reward(&quiet(), 1000), 0.0);
    }

    #[test]
    fn forward_and_survival() {
        let mut s = quiet();
        s.linear_velocity.x = 0.1;
        s.timestep = 100;
        assert!((compute_reward(&s, 1000) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn height_and_roll_penalties() {
        let mut s = quiet();
        s.torso_position.z += 0.05;
        s.torso_orientation.x = -0.1;
        assert!((compute_reward(&s, 1000) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_sign_flip_is_free() {
        let mut s = quiet();
        s.joint_angles[2] = 0.2;
        s.previous_joint_angles[2] = -0.2;
        assert_eq!(reward_terms(&s, 1000).joint_motion, 0.0);
        s.joint_angles[2] = 0.5;
        assert!((reward_terms(&s, 1000).joint_motion + 0.05 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn terms_sum_to_total() {
        let mut s = quiet();
        s.linear_velocity.x = -0.4;
        s.torso_position = Vector3::new(1.0, 0.3, 0.1);
        s.torso_orientation = Vector3::new(0.2, -0.3, 1.0);
        s.timestep = 37;
        s.joint_angles[0] = -0.9;
        let t = reward_terms(&s, 80);
        assert_eq!(t.as_array().iter().sum::<f64>(), t.total());
        assert_eq!(compute_reward(&s, 80), t.total());
    }
}
