//! Bundled skeletons and marker layouts.
//!
//! Humanoid: 22 joints, y-up, facing +z, character left on +x. Masses total
//! 70 kg; each link's center sits at the midpoint of its main bone.

use crate::graph::{Marker, MarkerConfig};
use crate::model::{Joint, Skeleton};
use crate::Vec3;

/// Pelvis height of the humanoid in its rest pose.
pub const HUMANOID_ROOT_HEIGHT: f64 = 0.95;
/// Base height of the robot preset in its rest pose.
pub const ROBOT_ROOT_HEIGHT: f64 = 0.65;

fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

struct Spec {
    name: String,
    parent: Option<String>,
    offset: Vec3,
    mass: f64,
    center: Vec3,
}

fn build(specs: Vec<Spec>) -> Skeleton {
    let names: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();
    let joints = specs
        .into_iter()
        .map(|s| {
            let parent = s
                .parent
                .map(|p| names.iter().position(|n| *n == p).expect("preset parent"));
            Joint::new(s.name, parent, s.offset).with_mass(s.mass, s.center)
        })
        .collect();
    Skeleton::new(joints).expect("preset skeleton is valid")
}

fn spec(name: &str, parent: Option<&str>, offset: Vec3, mass: f64, center: Vec3) -> Spec {
    Spec {
        name: name.to_string(),
        parent: parent.map(str::to_owned),
        offset,
        mass,
        center,
    }
}

/// Per-link masses (kg) of the humanoid, in joint order.
pub const HUMANOID_MASSES: [(&str, f64); 22] = [
    ("pelvis", 11.5),
    ("spine", 5.0),
    ("spine1", 5.0),
    ("spine2", 8.0),
    ("neck", 1.0),
    ("head", 5.0),
    ("l_clavicle", 1.5),
    ("l_shoulder", 2.0),
    ("l_elbow", 1.5),
    ("l_wrist", 0.5),
    ("r_clavicle", 1.5),
    ("r_shoulder", 2.0),
    ("r_elbow", 1.5),
    ("r_wrist", 0.5),
    ("l_hip", 7.0),
    ("l_knee", 3.5),
    ("l_ankle", 1.0),
    ("l_toe", 0.25),
    ("r_hip", 7.0),
    ("r_knee", 3.5),
    ("r_ankle", 1.0),
    ("r_toe", 0.25),
];

fn mass(name: &str) -> f64 {
    HUMANOID_MASSES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, m)| *m)
        .expect("mass table entry")
}

pub fn humanoid_skeleton() -> Skeleton {
    let mut s = vec![
        spec("pelvis", None, Vec3::zeros(), mass("pelvis"), v(0.0, 0.05, 0.0)),
        spec("spine", Some("pelvis"), v(0.0, 0.10, 0.0), mass("spine"), v(0.0, 0.06, 0.0)),
        spec("spine1", Some("spine"), v(0.0, 0.12, 0.0), mass("spine1"), v(0.0, 0.06, 0.0)),
        spec("spine2", Some("spine1"), v(0.0, 0.12, 0.0), mass("spine2"), v(0.0, 0.07, 0.0)),
        spec("neck", Some("spine2"), v(0.0, 0.14, 0.0), mass("neck"), v(0.0, 0.05, 0.0)),
        spec("head", Some("neck"), v(0.0, 0.10, 0.0), mass("head"), v(0.0, 0.08, 0.0)),
    ];
    for (side, sx) in [("l", 1.0), ("r", -1.0)] {
        let n = |j: &str| format!("{side}_{j}");
        s.push(spec(&n("clavicle"), Some("spine2"), v(0.03 * sx, 0.10, 0.0), mass(&n("clavicle")), v(0.075 * sx, 0.0, 0.0)));
        s.push(spec(&n("shoulder"), Some(n("clavicle").as_str()), v(0.15 * sx, 0.0, 0.0), mass(&n("shoulder")), v(0.14 * sx, 0.0, 0.0)));
        s.push(spec(&n("elbow"), Some(n("shoulder").as_str()), v(0.28 * sx, 0.0, 0.0), mass(&n("elbow")), v(0.125 * sx, 0.0, 0.0)));
        s.push(spec(&n("wrist"), Some(n("elbow").as_str()), v(0.25 * sx, 0.0, 0.0), mass(&n("wrist")), v(0.06 * sx, 0.0, 0.0)));
    }
    for (side, sx) in [("l", 1.0), ("r", -1.0)] {
        let n = |j: &str| format!("{side}_{j}");
        s.push(spec(&n("hip"), Some("pelvis"), v(0.09 * sx, -0.05, 0.0), mass(&n("hip")), v(0.0, -0.21, 0.0)));
        s.push(spec(&n("knee"), Some(n("hip").as_str()), v(0.0, -0.42, 0.0), mass(&n("knee")), v(0.0, -0.20, 0.0)));
        s.push(spec(&n("ankle"), Some(n("knee").as_str()), v(0.0, -0.40, 0.0), mass(&n("ankle")), v(0.0, -0.025, 0.065)));
        s.push(spec(&n("toe"), Some(n("ankle").as_str()), v(0.0, -0.05, 0.13), mass(&n("toe")), v(0.0, 0.0, 0.04)));
    }
    build(s)
}

/// Fifteen markers: three per limb near the joints, plus pelvis, torso and
/// head.
pub fn humanoid_markers() -> MarkerConfig {
    let mut m = vec![
        Marker::new("pelvis", "pelvis", v(0.0, 0.0, 0.06)),
        Marker::new("torso", "spine2", v(0.0, 0.05, 0.10)),
        Marker::new("head", "head", v(0.0, 0.10, 0.02)),
    ];
    for (side, sx) in [("l", 1.0), ("r", -1.0)] {
        let n = |j: &str| format!("{side}_{j}");
        m.push(Marker::new(n("shoulder"), n("shoulder"), Vec3::zeros()));
        m.push(Marker::new(n("elbow"), n("elbow"), Vec3::zeros()));
        m.push(Marker::new(n("hand"), n("wrist"), v(0.06 * sx, 0.0, 0.0)));
    }
    for side in ["l", "r"] {
        let n = |j: &str| format!("{side}_{j}");
        m.push(Marker::new(n("hip"), n("hip"), Vec3::zeros()));
        m.push(Marker::new(n("knee"), n("knee"), v(0.0, 0.0, 0.04)));
        m.push(Marker::new(n("foot"), n("ankle"), v(0.0, -0.04, 0.10)));
    }
    MarkerConfig::new(m)
}

/// One marker on every vertex of a box, named by corner signs (`c+-+`).
pub fn box_markers(object_name: &str, half_extents: &Vec3) -> MarkerConfig {
    let mut m = Vec::with_capacity(8);
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                let sign = |s: f64| if s > 0.0 { '+' } else { '-' };
                m.push(Marker::new(
                    format!("c{}{}{}", sign(sx), sign(sy), sign(sz)),
                    object_name,
                    v(sx * half_extents.x, sy * half_extents.y, sz * half_extents.z),
                ));
            }
        }
    }
    MarkerConfig::new(m)
}

/// Small legged robot whose topology differs from the humanoid's.
pub fn robot_skeleton() -> Skeleton {
    let mut s = vec![
        spec("base", None, Vec3::zeros(), 8.0, v(0.0, 0.05, 0.0)),
        spec("torso", Some("base"), v(0.0, 0.25, 0.0), 10.0, v(0.0, 0.15, 0.0)),
        spec("head", Some("torso"), v(0.0, 0.30, 0.0), 2.0, v(0.0, 0.06, 0.0)),
    ];
    for (side, sx) in [("l", 1.0), ("r", -1.0)] {
        let n = |j: &str| format!("{side}_{j}");
        s.push(spec(&n("shoulder"), Some("torso"), v(0.18 * sx, 0.20, 0.0), 1.5, v(0.11 * sx, 0.0, 0.0)));
        s.push(spec(&n("elbow"), Some(n("shoulder").as_str()), v(0.22 * sx, 0.0, 0.0), 1.0, v(0.10 * sx, 0.0, 0.0)));
        s.push(spec(&n("wrist"), Some(n("elbow").as_str()), v(0.20 * sx, 0.0, 0.0), 0.3, v(0.04 * sx, 0.0, 0.0)));
    }
    for (side, sx) in [("l", 1.0), ("r", -1.0)] {
        let n = |j: &str| format!("{side}_{j}");
        s.push(spec(&n("hip"), Some("base"), v(0.08 * sx, -0.05, 0.0), 2.5, v(0.0, -0.15, 0.0)));
        s.push(spec(&n("knee"), Some(n("hip").as_str()), v(0.0, -0.30, 0.0), 1.5, v(0.0, -0.15, 0.0)));
        s.push(spec(&n("ankle"), Some(n("knee").as_str()), v(0.0, -0.30, 0.0), 0.5, v(0.0, -0.02, 0.04)));
    }
    build(s)
}

/// Eight markers whose names match humanoid markers, so a robot can stand in
/// for a human character.
pub fn robot_markers() -> MarkerConfig {
    let mut m = vec![
        Marker::new("pelvis", "base", v(0.0, 0.0, 0.05)),
        Marker::new("head", "head", v(0.0, 0.08, 0.02)),
    ];
    for (side, sx) in [("l", 1.0), ("r", -1.0)] {
        let n = |j: &str| format!("{side}_{j}");
        m.push(Marker::new(n("shoulder"), n("shoulder"), Vec3::zeros()));
        m.push(Marker::new(n("hand"), n("wrist"), v(0.05 * sx, 0.0, 0.0)));
    }
    for side in ["l", "r"] {
        let n = |j: &str| format!("{side}_{j}");
        m.push(Marker::new(n("foot"), n("ankle"), v(0.0, -0.03, 0.08)));
    }
    MarkerConfig::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::forward_kinematics;

    #[test]
    fn humanoid_shape() {
        let s = humanoid_skeleton();
        assert_eq!(s.len(), 22);
        assert!((s.total_mass() - 70.0).abs() < 1e-12);
        assert_eq!(humanoid_markers().len(), 15);
        humanoid_markers().resolve(&s).unwrap();
        let k = forward_kinematics(&s, &s.rest_pose(Vec3::new(0.0, HUMANOID_ROOT_HEIGHT, 0.0)))
            .unwrap();
        // Toes stay just above the ground in the rest pose.
        let toe = k.positions[s.joint_index("l_toe").unwrap()];
        assert!((toe.y - 0.03).abs() < 1e-12);
        let hand = k.positions[s.joint_index("l_wrist").unwrap()];
        let other = k.positions[s.joint_index("r_wrist").unwrap()];
        assert_eq!(hand.x, -other.x);
    }

    #[test]
    fn robot_shape() {
        let s = robot_skeleton();
        let m = robot_markers();
        assert_eq!(m.len(), 8);
        m.resolve(&s).unwrap();
        let human: Vec<String> = humanoid_markers().names().map(str::to_owned).collect();
        assert!(m.names().all(|n| human.iter().any(|h| h == n)));
        let k = forward_kinematics(&s, &s.rest_pose(Vec3::new(0.0, ROBOT_ROOT_HEIGHT, 0.0))).unwrap();
        assert!(k.positions[s.joint_index("l_ankle").unwrap()].y.abs() < 0.1);
    }

    #[test]
    fn box_corners() {
        let m = box_markers("crate", &Vec3::new(0.2, 0.1, 0.3));
        assert_eq!(m.len(), 8);
        assert!(m.markers.iter().all(|k| k.offset.x.abs() == 0.2 && k.body == "crate"));
        m.resolve_object("crate").unwrap();
    }
}
