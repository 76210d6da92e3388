//! Kinematic character model: skeleton, pose, forward kinematics, facing
//! frame, limb scaling and action application.

mod facing;
pub mod rotation;
mod scale;

use nalgebra::{Isometry3, Translation3};

use crate::error::{Error, Result};
use crate::{Quat, Vec3};

pub use facing::{compute_facing_frame, FacingFrame};
pub use scale::{apply_scale, ScaleSpec};

/// Tolerance on quaternion norms accepted by [`Pose::validate`].
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// One joint of a kinematic tree. Joint `i` drives the body (link) of the same
/// name; markers and grasp windows address bodies by that name.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    /// `None` only for the root, which must be the first joint.
    pub parent: Option<usize>,
    /// Translation from the parent joint frame, meters.
    pub offset: Vec3,
    /// Link mass, kg. Used for the center of mass.
    pub mass: f64,
    /// Link center of mass in the joint frame.
    pub center: Vec3,
}

impl Joint {
    pub fn new(name: impl Into<String>, parent: Option<usize>, offset: Vec3) -> Self {
        Joint {
            name: name.into(),
            parent,
            offset,
            mass: 1.0,
            center: Vec3::zeros(),
        }
    }

    pub fn with_mass(mut self, mass: f64, center: Vec3) -> Self {
        self.mass = mass;
        self.center = center;
        self
    }
}

/// Kinematic tree in topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::Validation("skeleton has no joints".into()));
        }
        for (i, joint) in joints.iter().enumerate() {
            match (i, joint.parent) {
                (0, None) => {}
                (0, Some(_)) => {
                    return Err(Error::Validation(format!(
                        "first joint '{}' must be the root",
                        joint.name
                    )))
                }
                (_, None) => {
                    return Err(Error::Validation(format!(
                        "joint '{}' has no parent; only one root is allowed",
                        joint.name
                    )))
                }
                (_, Some(p)) if p >= i => {
                    return Err(Error::Validation(format!(
                        "joint '{}' refers to parent {p} which is not an earlier joint",
                        joint.name
                    )))
                }
                _ => {}
            }
            if !joint.offset.iter().all(|c| c.is_finite())
                || !joint.center.iter().all(|c| c.is_finite())
            {
                return Err(Error::Validation(format!(
                    "joint '{}' has a non-finite offset",
                    joint.name
                )));
            }
            if !(joint.mass >= 0.0) || !joint.mass.is_finite() {
                return Err(Error::Validation(format!(
                    "joint '{}' has invalid mass {}",
                    joint.name, joint.mass
                )));
            }
            if joints[..i].iter().any(|j| j.name == joint.name) {
                return Err(Error::Validation(format!(
                    "duplicate joint name '{}'",
                    joint.name
                )));
            }
        }
        Ok(Skeleton { joints })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    /// Number of rotations a [`Pose`] carries (every joint but the root).
    pub fn rotation_count(&self) -> usize {
        self.joints.len() - 1
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn total_mass(&self) -> f64 {
        self.joints.iter().map(|j| j.mass).sum()
    }

    /// Same topology, structurally comparable to another skeleton.
    pub fn same_topology(&self, other: &Skeleton) -> bool {
        self.joints.len() == other.joints.len()
            && self
                .joints
                .iter()
                .zip(&other.joints)
                .all(|(a, b)| a.parent == b.parent && a.name == b.name)
    }

    /// Identity pose with the root placed at `root_position`.
    pub fn rest_pose(&self, root_position: Vec3) -> Pose {
        Pose {
            root_position,
            root_orientation: Quat::identity(),
            joint_rotations: vec![Quat::identity(); self.rotation_count()],
        }
    }

    pub(crate) fn joints_mut(&mut self) -> &mut [Joint] {
        &mut self.joints
    }
}

/// Root transform plus one local rotation per non-root joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub root_position: Vec3,
    pub root_orientation: Quat,
    pub joint_rotations: Vec<Quat>,
}

impl Pose {
    pub fn validate(&self, skeleton: &Skeleton) -> Result<()> {
        if self.joint_rotations.len() != skeleton.rotation_count() {
            return Err(Error::Structure(format!(
                "pose has {} joint rotations, skeleton expects {}",
                self.joint_rotations.len(),
                skeleton.rotation_count()
            )));
        }
        let unit = |q: &Quat| (q.quaternion().norm() - 1.0).abs() <= UNIT_TOLERANCE;
        if !unit(&self.root_orientation) || !self.joint_rotations.iter().all(unit) {
            return Err(Error::Validation("pose contains a non-unit quaternion".into()));
        }
        if !self.root_position.iter().all(|c| c.is_finite()) {
            return Err(Error::Validation("pose root position is not finite".into()));
        }
        Ok(())
    }

    /// Rotation of joint `index` (the root's own rotation for index 0).
    pub fn local_rotation(&self, index: usize) -> Quat {
        if index == 0 {
            self.root_orientation
        } else {
            self.joint_rotations[index - 1]
        }
    }
}

/// World transforms of every joint/link for one pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub positions: Vec<Vec3>,
    pub rotations: Vec<Quat>,
}

impl Kinematics {
    pub fn link_transform(&self, index: usize) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.positions[index]), self.rotations[index])
    }

    /// World point of a local offset on link `index`.
    pub fn transform_point(&self, index: usize, local: &Vec3) -> Vec3 {
        self.positions[index] + self.rotations[index] * local
    }

    /// Mass-weighted mean of link centers.
    pub fn center_of_mass(&self, skeleton: &Skeleton) -> Vec3 {
        let total = skeleton.total_mass();
        if total <= 0.0 {
            return self.positions[0];
        }
        let mut acc = Vec3::zeros();
        for (i, joint) in skeleton.joints().iter().enumerate() {
            acc += self.transform_point(i, &joint.center) * joint.mass;
        }
        acc / total
    }
}

/// Composes local transforms parent-to-child. The root offset is ignored; the
/// root is placed by the pose.
pub fn forward_kinematics(skeleton: &Skeleton, pose: &Pose) -> Result<Kinematics> {
    if pose.joint_rotations.len() != skeleton.rotation_count() {
        return Err(Error::Structure(format!(
            "pose has {} joint rotations, skeleton expects {}",
            pose.joint_rotations.len(),
            skeleton.rotation_count()
        )));
    }
    Ok(fk_unchecked(skeleton, pose))
}

pub(crate) fn fk_unchecked(skeleton: &Skeleton, pose: &Pose) -> Kinematics {
    let n = skeleton.len();
    let mut positions = Vec::with_capacity(n);
    let mut rotations = Vec::with_capacity(n);
    positions.push(pose.root_position);
    rotations.push(pose.root_orientation);
    for (i, joint) in skeleton.joints().iter().enumerate().skip(1) {
        let parent = joint.parent.expect("validated skeleton");
        let parent_rot = rotations[parent];
        positions.push(positions[parent] + parent_rot * joint.offset);
        rotations.push(parent_rot * pose.joint_rotations[i - 1]);
    }
    Kinematics {
        positions,
        rotations,
    }
}

/// Composes a per-joint rotation delta onto `q_ref` (right-multiplied, i.e.
/// in the joint's local frame) and renormalizes.
pub fn apply_action(q_ref: &Pose, delta: &[Quat]) -> Result<Pose> {
    if delta.len() != q_ref.joint_rotations.len() {
        return Err(Error::Structure(format!(
            "action has {} joint deltas, pose has {} joints",
            delta.len(),
            q_ref.joint_rotations.len()
        )));
    }
    let joint_rotations = q_ref
        .joint_rotations
        .iter()
        .zip(delta)
        .map(|(q, d)| rotation::renormalize(&(q * d)))
        .collect();
    Ok(Pose {
        root_position: q_ref.root_position,
        root_orientation: q_ref.root_orientation,
        joint_rotations,
    })
}

/// Deltas from a flat rotation-vector parameterization (3 numbers per joint).
pub fn deltas_from_rotation_vectors(params: &[f64]) -> Vec<Quat> {
    params
        .chunks_exact(3)
        .map(|c| rotation::rotation_exp(&Vec3::new(c[0], c[1], c[2])))
        .collect()
}
