//! Small rotation helpers shared by the reward, observation and optimizer code.

use nalgebra::{Quaternion, UnitQuaternion};

use crate::{Quat, Vec3};

/// Log map of a unit quaternion: rotation vector whose norm is the full
/// rotation angle in `[0, π]`.
///
/// Uses `atan2` so that an exact identity (zero vector part) maps to an exact
/// zero vector.
pub fn rotation_log(q: &Quat) -> Vec3 {
    let q = q.quaternion();
    let (w, v) = if q.w < 0.0 {
        (-q.w, -q.imag())
    } else {
        (q.w, q.imag())
    };
    let s = v.norm();
    if s == 0.0 {
        return Vec3::zeros();
    }
    let angle = 2.0 * s.atan2(w);
    v * (angle / s)
}

/// Exponential map: rotation vector to unit quaternion.
pub fn rotation_exp(v: &Vec3) -> Quat {
    UnitQuaternion::from_scaled_axis(*v)
}

/// Relative rotation distance `‖log(a⁻¹ b)‖²`.
pub fn rotation_distance_sq(a: &Quat, b: &Quat) -> f64 {
    rotation_log(&(a.inverse() * b)).norm_squared()
}

/// World-frame angular velocity from two orientations `dt` apart.
pub fn angular_velocity(from: &Quat, to: &Quat, dt: f64) -> Vec3 {
    rotation_log(&(to * from.inverse())) / dt
}

/// Renormalizes without the `UnitQuaternion` constructor's implicit trust.
pub fn renormalize(q: &Quat) -> Quat {
    UnitQuaternion::new_normalize(q.into_inner())
}

/// `(w, x, y, z)` with `w >= 0`.
pub fn canonical_wxyz(q: &Quat) -> [f64; 4] {
    let q: &Quaternion<f64> = q.quaternion();
    if q.w < 0.0 {
        [-q.w, -q.i, -q.j, -q.k]
    } else {
        [q.w, q.i, q.j, q.k]
    }
}

pub fn quat_from_wxyz(wxyz: [f64; 4]) -> Quaternion<f64> {
    Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3])
}

pub fn quat_to_wxyz(q: &Quat) -> [f64; 4] {
    let q = q.quaternion();
    [q.w, q.i, q.j, q.k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn log_is_full_angle() {
        let q = Quat::from_axis_angle(&Vec3::y_axis(), FRAC_PI_2);
        assert!((rotation_log(&q).norm() - FRAC_PI_2).abs() < 1e-12);
        let q = Quat::from_axis_angle(&Vec3::x_axis(), PI - 1e-3);
        assert!((rotation_log(&q).norm() - (PI - 1e-3)).abs() < 1e-12);
    }

    #[test]
    fn log_of_identity_product_is_exact_zero() {
        let q = Quat::from_euler_angles(0.3, -1.2, 2.1);
        assert_eq!(rotation_log(&(q.inverse() * q)), Vec3::zeros());
    }

    #[test]
    fn exp_log_round_trip() {
        let v = Vec3::new(0.2, -0.7, 1.1);
        assert!((rotation_log(&rotation_exp(&v)) - v).norm() < 1e-12);
    }

    #[test]
    fn angular_velocity_of_constant_spin() {
        let a = Quat::from_axis_angle(&Vec3::z_axis(), 0.1);
        let b = Quat::from_axis_angle(&Vec3::z_axis(), 0.3);
        let w = angular_velocity(&a, &b, 0.1);
        assert!((w - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
    }
}
