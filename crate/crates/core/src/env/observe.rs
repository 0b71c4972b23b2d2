//! 48-entry observation vector.
//!
//! | indices | block                         | normaliser           |
//! |---------|-------------------------------|----------------------|
//! | 0..3    | torso position x, y, z        | `position` (m)       |
//! | 3..6    | roll, pitch, yaw              | `angle` (rad)        |
//! | 6..9    | torso linear velocity         | `linear_velocity`    |
//! | 9..12   | torso angular velocity        | `angular_velocity`   |
//! | 12..20  | joint angles                  | `angle`              |
//! | 20..28  | joint velocities              | `joint_velocity`     |
//! | 28..40  | foot forces, 4 feet × (x,y,z) | `force` (N)          |
//! | 40..48  | previous joint angles         | `angle`              |

use serde::{Deserialize, Serialize};

use super::robot::{RobotState, NUM_JOINTS};
use crate::error::{Error, Result};

pub const OBS_DIM: usize = 48;
pub const ACTION_DIM: usize = NUM_JOINTS;

pub mod layout {
    use std::ops::Range;
    pub const POSITION: Range<usize> = 0..3;
    pub const ORIENTATION: Range<usize> = 3..6;
    pub const LINEAR_VELOCITY: Range<usize> = 6..9;
    pub const ANGULAR_VELOCITY: Range<usize> = 9..12;
    pub const JOINT_ANGLES: Range<usize> = 12..20;
    pub const JOINT_VELOCITIES: Range<usize> = 20..28;
    pub const FOOT_FORCES: Range<usize> = 28..40;
    pub const PREVIOUS_JOINT_ANGLES: Range<usize> = 40..48;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Normalizers {
    pub position: f64,
    pub linear_velocity: f64,
    pub angular_velocity: f64,
    pub angle: f64,
    pub joint_velocity: f64,
    pub force: f64,
}

impl Default for Normalizers {
    fn default() -> Self {
        Self {
            position: 1.0,
            linear_velocity: 2.0,
            angular_velocity: 2.0,
            angle: std::f64::consts::FRAC_PI_2,
            joint_velocity: 10.0,
            force: 100.0,
        }
    }
}

impl Normalizers {
    pub fn identity() -> Self {
        Self {
            position: 1.0,
            linear_velocity: 1.0,
            angular_velocity: 1.0,
            angle: 1.0,
            joint_velocity: 1.0,
            force: 1.0,
        }
    }
}

pub fn observe(state: &RobotState, n: &Normalizers) -> Result<Vec<f64>> {
    let mut obs = Vec::with_capacity(OBS_DIM);
    obs.extend(state.torso_position.iter().map(|v| v / n.position));
    obs.extend(state.torso_orientation.iter().map(|v| v / n.angle));
    obs.extend(state.linear_velocity.iter().map(|v| v / n.linear_velocity));
    obs.extend(
        state
            .angular_velocity
            .iter()
            .map(|v| v / n.angular_velocity),
    );
    obs.extend(state.joint_angles.iter().map(|v| v / n.angle));
    obs.extend(state.joint_velocities.iter().map(|v| v / n.joint_velocity));
    obs.extend(state.foot_forces.iter().flatten().map(|v| v / n.force));
    obs.extend(state.previous_joint_angles.iter().map(|v| v / n.angle));
    debug_assert_eq!(obs.len(), OBS_DIM);
    if let Some(i) = obs.iter().position(|v| !v.is_finite()) {
        return Err(Error::SimulationDiverged(format!(
            "observation entry {i} is not finite"
        )));
    }
    Ok(obs)
}
