//! PD actuation, penalty contacts and semi-implicit Euler integration.
//!
//! The torso is the only rigid body with mass. Legs are low-mass appendages:
//! each joint has a reflected rotor inertia and is driven by its motor torque
//! plus the torque that the foot's contact force exerts through the leg
//! Jacobian. Contact forces act on the torso at the foot points.

use nalgebra::{Rotation3, Vector3};

use super::robot::{
    foot_in_body, foot_velocities, forward_kinematics, leg_jacobian, FootForces, JointVec,
    RobotConfig, RobotState, JOINT_LIMIT, NUM_JOINTS, NUM_LEGS,
};
use super::terrain::Terrain;
use crate::error::{Error, Result};

/// `clamp(kp * (target - angle) - kd * velocity, ±torque_limit)` per joint.
/// Targets are clamped to the action bound first.
pub fn pd_torque(
    target: &JointVec,
    angles: &JointVec,
    velocities: &JointVec,
    config: &RobotConfig,
) -> JointVec {
    let bound = config.action_bound;
    std::array::from_fn(|i| {
        let t = target[i].clamp(-bound, bound);
        (config.pd_kp * (t - angles[i]) - config.pd_kd * velocities[i])
            .clamp(-config.torque_limit, config.torque_limit)
    })
}

/// Spring-damper normal force plus regularised Coulomb friction per foot.
///
/// Penetration is measured vertically against the local terrain height. The
/// tangential force opposes horizontal foot velocity with magnitude
/// `min(mu * normal, friction_damping * |v_t|)`, so it vanishes at rest and
/// never leaves the friction cone.
pub fn contact_forces(
    foot_positions: &[Vector3<f64>; NUM_LEGS],
    foot_velocities: &[Vector3<f64>; NUM_LEGS],
    terrain: &Terrain,
    config: &RobotConfig,
) -> FootForces {
    std::array::from_fn(|leg| {
        let p = foot_positions[leg];
        let v = foot_velocities[leg];
        let depth = terrain.height(p.x, p.y) - p.z;
        if depth <= 0.0 {
            return [0.0; 3];
        }
        let normal =
            (config.contact_stiffness * depth + config.contact_damping * (-v.z).max(0.0)).max(0.0);
        let speed = v.x.hypot(v.y);
        if speed == 0.0 {
            return [0.0, 0.0, normal];
        }
        let magnitude = (config.friction_coefficient * normal).min(config.friction_damping * speed);
        [-magnitude * v.x / speed, -magnitude * v.y / speed, normal]
    })
}

/// Advances one control step with the given joint torques held constant.
pub fn integrate(
    state: &RobotState,
    torques: &JointVec,
    terrain: &Terrain,
    config: &RobotConfig,
) -> Result<RobotState> {
    integrate_with(state, terrain, config, |_, _| *torques)
}

/// Advances one control step, asking `torque_at(angles, velocities)` for the
/// motor torques at every physics substep.
pub fn integrate_with<F>(
    state: &RobotState,
    terrain: &Terrain,
    config: &RobotConfig,
    mut torque_at: F,
) -> Result<RobotState>
where
    F: FnMut(&JointVec, &JointVec) -> JointVec,
{
    let h = config.dt / config.substeps as f64;
    let inertia_body = config.torso_inertia();
    let gravity = Vector3::new(0.0, 0.0, -config.gravity * config.mass);
    let mut s = state.clone();
    s.previous_joint_angles = state.joint_angles;

    for _ in 0..config.substeps {
        let rot = s.rotation();
        let feet = forward_kinematics(&s, config);
        let foot_vel = foot_velocities(&s, config);
        let forces = contact_forces(&feet, &foot_vel, terrain, config);
        let motor = torque_at(&s.joint_angles, &s.joint_velocities);

        let mut joint_acc = [0.0; NUM_JOINTS];
        let mut net_force = gravity;
        let mut net_torque = Vector3::zeros();
        for leg in 0..NUM_LEGS {
            let f_world = Vector3::from(forces[leg]);
            let f_body = rot.inverse() * f_world;
            let jac = leg_jacobian(config, s.joint_angles[2 * leg], s.joint_angles[2 * leg + 1]);
            for j in 0..2 {
                let i = 2 * leg + j;
                joint_acc[i] = (motor[i] + jac[j].dot(&f_body)) / config.joint_inertia;
            }
            net_force += f_world;
            net_torque += (rot * foot_in_body(config, &s.joint_angles, leg)).cross(&f_world);
        }

        let inertia_world = rot.matrix() * inertia_body * rot.matrix().transpose();
        let inv_inertia = inertia_world
            .try_inverse()
            .ok_or_else(|| Error::SimulationDiverged("singular torso inertia".into()))?;
        let gyroscopic = s
            .angular_velocity
            .cross(&(inertia_world * s.angular_velocity));
        let ang_acc = inv_inertia * (net_torque - gyroscopic);

        // velocities first, then positions
        s.linear_velocity += net_force / config.mass * h;
        s.angular_velocity += ang_acc * h;
        s.torso_position += s.linear_velocity * h;
        let turned = Rotation3::new(s.angular_velocity * h) * rot;
        let (roll, pitch, yaw) = turned.euler_angles();
        s.torso_orientation = Vector3::new(roll, pitch, yaw);

        for i in 0..NUM_JOINTS {
            s.joint_velocities[i] += joint_acc[i] * h;
            let q = s.joint_angles[i] + s.joint_velocities[i] * h;
            if q > JOINT_LIMIT {
                s.joint_angles[i] = JOINT_LIMIT;
                s.joint_velocities[i] = s.joint_velocities[i].min(0.0);
            } else if q < -JOINT_LIMIT {
                s.joint_angles[i] = -JOINT_LIMIT;
                s.joint_velocities[i] = s.joint_velocities[i].max(0.0);
            } else {
                s.joint_angles[i] = q;
            }
        }
        s.foot_forces = forces;
    }
    s.timestep += 1;

    if !s.is_finite() {
        return Err(Error::SimulationDiverged(format!(
            "non-finite state after control step {}",
            s.timestep
        )));
    }
    Ok(s)
}
