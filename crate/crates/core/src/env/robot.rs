//! Robot description, state and kinematics.
//!
//! Frames: world x forward, y left, z up. The torso frame has its origin at
//! the centre of mass, which is also the height of the hip axes. Legs are
//! ordered front-left, front-right, rear-left, rear-right; joints are
//! `[hip, knee]` per leg, giving joint index `2 * leg + {0, 1}`.
//!
//! Each leg is a planar two-link chain in the torso's sagittal plane. With
//! both joints at zero the leg points straight down; a positive hip angle
//! swings the foot forward.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_LEGS: usize = 4;
pub const NUM_JOINTS: usize = 8;
pub const JOINT_LIMIT: f64 = std::f64::consts::FRAC_PI_2;

pub type JointVec = [f64; NUM_JOINTS];
pub type FootForces = [[f64; 3]; NUM_LEGS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub body_length: f64,
    pub body_width: f64,
    /// Only used for the torso inertia tensor.
    pub body_height: f64,
    pub mass: f64,
    pub torque_limit: f64,
    pub upper_leg_length: f64,
    pub lower_leg_length: f64,
    /// Reflected rotor inertia seen by each joint, kg·m².
    pub joint_inertia: f64,
    pub pd_kp: f64,
    pub pd_kd: f64,
    /// Control period in seconds.
    pub dt: f64,
    pub substeps: usize,
    pub gravity: f64,
    pub contact_stiffness: f64,
    pub contact_damping: f64,
    pub friction_coefficient: f64,
    /// Slope of the regularised Coulomb law below saturation, N·s/m.
    pub friction_damping: f64,
    pub action_bound: f64,
    pub nominal_hip: f64,
    pub nominal_knee: f64,
    /// Half-width of the uniform joint perturbation applied at reset.
    pub reset_joint_noise: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            body_length: 0.40,
            body_width: 0.20,
            body_height: 0.06,
            mass: 5.0,
            torque_limit: 5.0,
            upper_leg_length: 0.12,
            lower_leg_length: 0.12,
            joint_inertia: 0.02,
            pd_kp: 40.0,
            pd_kd: 1.0,
            dt: 0.01,
            substeps: 4,
            gravity: 9.81,
            contact_stiffness: 5000.0,
            contact_damping: 50.0,
            friction_coefficient: 0.8,
            friction_damping: 100.0,
            action_bound: 0.7,
            nominal_hip: 0.35,
            nominal_knee: -0.7,
            reset_joint_noise: 0.01,
        }
    }
}

impl RobotConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("body_length", self.body_length),
            ("body_width", self.body_width),
            ("body_height", self.body_height),
            ("mass", self.mass),
            ("torque_limit", self.torque_limit),
            ("upper_leg_length", self.upper_leg_length),
            ("lower_leg_length", self.lower_leg_length),
            ("joint_inertia", self.joint_inertia),
            ("pd_kp", self.pd_kp),
            ("pd_kd", self.pd_kd),
            ("dt", self.dt),
            ("gravity", self.gravity),
            ("contact_stiffness", self.contact_stiffness),
            ("contact_damping", self.contact_damping),
            ("friction_coefficient", self.friction_coefficient),
            ("friction_damping", self.friction_damping),
            ("action_bound", self.action_bound),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "robot.{name} must be positive, got {v}"
                )));
            }
        }
        if self.substeps == 0 {
            return Err(Error::Config("robot.substeps must be at least 1".into()));
        }
        if !(self.reset_joint_noise >= 0.0) {
            return Err(Error::Config(
                "robot.reset_joint_noise must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn nominal_joints(&self) -> JointVec {
        let mut q = [0.0; NUM_JOINTS];
        for leg in 0..NUM_LEGS {
            q[2 * leg] = self.nominal_hip;
            q[2 * leg + 1] = self.nominal_knee;
        }
        q
    }

    /// Torso height above the feet with the nominal stance on level ground.
    pub fn stand_height(&self) -> f64 {
        let (_, z) = leg_planar(self, self.nominal_hip, self.nominal_knee);
        -z
    }

    /// Hip attachment point in the torso frame.
    pub fn hip_offset(&self, leg: usize) -> Vector3<f64> {
        let x = if leg < 2 { 0.5 } else { -0.5 } * self.body_length;
        let y = if leg.is_multiple_of(2) { 0.5 } else { -0.5 } * self.body_width;
        Vector3::new(x, y, 0.0)
    }

    /// Box inertia about the centre of mass, torso frame.
    pub fn torso_inertia(&self) -> Matrix3<f64> {
        let (l, w, h) = (self.body_length, self.body_width, self.body_height);
        let k = self.mass / 12.0;
        Matrix3::from_diagonal(&Vector3::new(
            k * (w * w + h * h),
            k * (l * l + h * h),
            k * (l * l + w * w),
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub torso_position: Vector3<f64>,
    /// Roll, pitch, yaw; rotation is `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub torso_orientation: Vector3<f64>,
    pub linear_velocity: Vector3<f64>,
    /// World frame.
    pub angular_velocity: Vector3<f64>,
    pub joint_angles: JointVec,
    pub joint_velocities: JointVec,
    pub previous_joint_angles: JointVec,
    /// World-frame contact force at each foot from the last physics substep.
    pub foot_forces: FootForces,
    pub timestep: usize,
    /// Torso position at reset; the reference for height and lateral drift.
    pub reference_position: Vector3<f64>,
}

impl RobotState {
    pub fn rotation(&self) -> Rotation3<f64> {
        let o = self.torso_orientation;
        Rotation3::from_euler_angles(o.x, o.y, o.z)
    }

    pub fn is_finite(&self) -> bool {
        let v3 = |v: &Vector3<f64>| v.iter().all(|x| x.is_finite());
        v3(&self.torso_position)
            && v3(&self.torso_orientation)
            && v3(&self.linear_velocity)
            && v3(&self.angular_velocity)
            && self.joint_angles.iter().all(|x| x.is_finite())
            && self.joint_velocities.iter().all(|x| x.is_finite())
            && self.foot_forces.iter().flatten().all(|x| x.is_finite())
    }
}

/// Foot position relative to the hip in the leg plane, `(forward, up)`.
pub fn leg_planar(config: &RobotConfig, hip: f64, knee: f64) -> (f64, f64) {
    let (l1, l2) = (config.upper_leg_length, config.lower_leg_length);
    (
        l1 * hip.sin() + l2 * (hip + knee).sin(),
        -l1 * hip.cos() - l2 * (hip + knee).cos(),
    )
}

/// Columns `d foot / d hip` and `d foot / d knee` in the torso frame.
pub(crate) fn leg_jacobian(config: &RobotConfig, hip: f64, knee: f64) -> [Vector3<f64>; 2] {
    let (l1, l2) = (config.upper_leg_length, config.lower_leg_length);
    let s = hip + knee;
    [
        Vector3::new(
            l1 * hip.cos() + l2 * s.cos(),
            0.0,
            l1 * hip.sin() + l2 * s.sin(),
        ),
        Vector3::new(l2 * s.cos(), 0.0, l2 * s.sin()),
    ]
}

/// Foot position of `leg` in the torso frame.
pub(crate) fn foot_in_body(config: &RobotConfig, joints: &JointVec, leg: usize) -> Vector3<f64> {
    let (fx, fz) = leg_planar(config, joints[2 * leg], joints[2 * leg + 1]);
    config.hip_offset(leg) + Vector3::new(fx, 0.0, fz)
}

/// World-frame foot positions.
pub fn forward_kinematics(state: &RobotState, config: &RobotConfig) -> [Vector3<f64>; NUM_LEGS] {
    let rot = state.rotation();
    std::array::from_fn(|leg| {
        state.torso_position + rot * foot_in_body(config, &state.joint_angles, leg)
    })
}

/// World-frame foot velocities from torso twist and joint rates.
pub fn foot_velocities(state: &RobotState, config: &RobotConfig) -> [Vector3<f64>; NUM_LEGS] {
    let rot = state.rotation();
    std::array::from_fn(|leg| {
        let (h, k) = (state.joint_angles[2 * leg], state.joint_angles[2 * leg + 1]);
        let jac = leg_jacobian(config, h, k);
        let local =
            jac[0] * state.joint_velocities[2 * leg] + jac[1] * state.joint_velocities[2 * leg + 1];
        let arm = rot * foot_in_body(config, &state.joint_angles, leg);
        state.linear_velocity + state.angular_velocity.cross(&arm) + rot * local
    })
}
