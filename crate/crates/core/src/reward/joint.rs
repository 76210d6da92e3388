use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::rotation::{angular_velocity, rotation_distance_sq};
use crate::model::{fk_unchecked, Pose, Skeleton};
use crate::reward::model::pose_window_velocity;
use crate::reward::{err_root, RewardParams, RootState};
use crate::Vec3;

/// Sensitivities of the joint-based baseline, following the usual
/// motion-imitation convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JointRewardParams {
    pub k_angle: f64,
    pub k_velocity: f64,
    pub k_position: f64,
    pub k_root: f64,
}

impl Default for JointRewardParams {
    fn default() -> Self {
        JointRewardParams {
            k_angle: 2.0,
            k_velocity: 0.1,
            k_position: 40.0,
            k_root: 5.0,
        }
    }
}

/// Root rates and local joint angular velocities of a pose.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseVelocity {
    pub root_linear: Vec3,
    pub root_angular: Vec3,
    pub joints: Vec<Vec3>,
}

impl PoseVelocity {
    pub fn zero(joints: usize) -> Self {
        PoseVelocity {
            root_linear: Vec3::zeros(),
            root_angular: Vec3::zeros(),
            joints: vec![Vec3::zeros(); joints],
        }
    }

    /// Rates from a difference-stencil pair: `(after - before) * rate`.
    pub fn from_window(before: &Pose, after: &Pose, rate: f64) -> Self {
        let (root_linear, root_angular) = pose_window_velocity(before, after, rate);
        PoseVelocity {
            root_linear,
            root_angular,
            joints: before
                .joint_rotations
                .iter()
                .zip(&after.joint_rotations)
                .map(|(a, b)| angular_velocity(a, b, 1.0 / rate))
                .collect(),
        }
    }
}

/// Joint-space imitation reward: product of exponentials over joint rotation
/// error, joint velocity error, root-relative link position error and root
/// error. No cross-character term.
#[allow(clippy::too_many_arguments)]
pub fn joint_based_reward(
    skeleton_sim: &Skeleton,
    pose_sim: &Pose,
    vel_sim: &PoseVelocity,
    skeleton_ref: &Skeleton,
    pose_ref: &Pose,
    vel_ref: &PoseVelocity,
    params: &JointRewardParams,
    root_params: &RewardParams,
) -> Result<f64> {
    joint_based_log_reward(
        skeleton_sim,
        pose_sim,
        vel_sim,
        skeleton_ref,
        pose_ref,
        vel_ref,
        params,
        root_params,
    )
    .map(f64::exp)
}

/// Logarithm of [`joint_based_reward`].
#[allow(clippy::too_many_arguments)]
pub fn joint_based_log_reward(
    skeleton_sim: &Skeleton,
    pose_sim: &Pose,
    vel_sim: &PoseVelocity,
    skeleton_ref: &Skeleton,
    pose_ref: &Pose,
    vel_ref: &PoseVelocity,
    params: &JointRewardParams,
    root_params: &RewardParams,
) -> Result<f64> {
    if !skeleton_sim.same_topology(skeleton_ref) {
        return Err(Error::Structure(
            "joint-based reward needs the same skeleton topology on both sides".into(),
        ));
    }
    let n = skeleton_ref.rotation_count();
    if pose_sim.joint_rotations.len() != n
        || pose_ref.joint_rotations.len() != n
        || vel_sim.joints.len() != n
        || vel_ref.joints.len() != n
    {
        return Err(Error::Structure("joint-based reward: joint count mismatch".into()));
    }
    let angle: f64 = pose_sim
        .joint_rotations
        .iter()
        .zip(&pose_ref.joint_rotations)
        .map(|(a, b)| rotation_distance_sq(a, b))
        .sum();
    let velocity: f64 = vel_sim
        .joints
        .iter()
        .zip(&vel_ref.joints)
        .map(|(a, b)| (a - b).norm_squared())
        .sum();
    let ks = fk_unchecked(skeleton_sim, pose_sim);
    let kr = fk_unchecked(skeleton_ref, pose_ref);
    let position: f64 = ks
        .positions
        .iter()
        .zip(&kr.positions)
        .map(|(s, r)| ((s - pose_sim.root_position) - (r - pose_ref.root_position)).norm_squared())
        .sum();
    let root = |p: &Pose, v: &PoseVelocity| RootState {
        position: p.root_position,
        orientation: p.root_orientation,
        linear_velocity: v.root_linear,
        angular_velocity: v.root_angular,
    };
    let e_root = err_root(&root(pose_sim, vel_sim), &root(pose_ref, vel_ref), root_params);
    Ok(-(params.k_angle * angle
        + params.k_velocity * velocity
        + params.k_position * position
        + params.k_root * e_root))
}
