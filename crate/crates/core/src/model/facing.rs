use std::f64::consts::PI;

use nalgebra::{Isometry3, Translation3, Vector2};

use crate::error::{Error, Result};
use crate::model::Pose;
use crate::{Quat, Vec3};

/// Below this twist norm the swing is (close to) a half turn and the twist
/// about the up axis is undefined.
const TWIST_SINGULARITY: f64 = 1e-6;
const MIN_FORWARD_PROJECTION: f64 = 1e-6;

/// Ground-projected root transform: planar position `(x, z)` and heading about
/// +y. Heading 0 faces +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacingFrame {
    pub position: Vector2<f64>,
    pub heading: f64,
}

impl FacingFrame {
    pub fn identity() -> Self {
        FacingFrame {
            position: Vector2::zeros(),
            heading: 0.0,
        }
    }

    pub fn rotation(&self) -> Quat {
        Quat::from_axis_angle(&Vec3::y_axis(), self.heading)
    }

    /// Facing frame as a world isometry (origin on the ground plane).
    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.position.x, 0.0, self.position.y),
            self.rotation(),
        )
    }

    pub fn point_to_local(&self, p: &Vec3) -> Vec3 {
        let d = p - Vec3::new(self.position.x, 0.0, self.position.y);
        self.rotation().inverse() * d
    }

    pub fn vector_to_local(&self, v: &Vec3) -> Vec3 {
        self.rotation().inverse() * v
    }

    pub fn rotation_to_local(&self, q: &Quat) -> Quat {
        self.rotation().inverse() * q
    }
}

/// Wraps an angle into `(-π, π]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Heading from the swing-twist decomposition of the root orientation about
/// the up axis; falls back to the ground projection of the root's forward
/// vector when the twist is singular.
pub fn compute_facing_frame(pose: &Pose) -> Result<FacingFrame> {
    let position = Vector2::new(pose.root_position.x, pose.root_position.z);
    let q = pose.root_orientation.quaternion();
    let twist_norm = (q.w * q.w + q.j * q.j).sqrt();
    let heading = if twist_norm > TWIST_SINGULARITY {
        wrap_angle(2.0 * q.j.atan2(q.w))
    } else {
        let forward = pose.root_orientation * Vec3::z();
        let planar = (forward.x * forward.x + forward.z * forward.z).sqrt();
        if planar < MIN_FORWARD_PROJECTION {
            return Err(Error::Degenerate(
                "root orientation has no defined heading".into(),
            ));
        }
        wrap_angle(forward.x.atan2(forward.z))
    };
    Ok(FacingFrame { position, heading })
}
