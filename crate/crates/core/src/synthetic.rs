//! Procedural demo scenes. Every clip starts in a T-pose at frame 0.

use std::f64::consts::PI;

use nalgebra::{Isometry3, Translation3};

use crate::graph::EntityRef;
use crate::model::rotation::renormalize;
use crate::model::{fk_unchecked, Pose, Skeleton};
use crate::motion::{BodyRef, Character, Frame, GraspWindow, ObjectShape, RigidObject, Scene};
use crate::presets::{self, HUMANOID_ROOT_HEIGHT};
use crate::{Quat, Vec3};

pub const FPS: f64 = 30.0;
/// Gap between the two palms at the high-five contact.
pub const HIGH_FIVE_GAP: f64 = 0.03;
/// Meeting point of the hands in the high-five clip.
pub const HIGH_FIVE_CONTACT: [f64; 3] = [-0.15, 1.35, 0.0];
/// Neutral arm angle below the horizontal.
const NEUTRAL_ARM_DROP: f64 = 75.0 * PI / 180.0;

pub fn humanoid_character(name: &str) -> Character {
    Character {
        name: name.to_string(),
        skeleton: presets::humanoid_skeleton(),
        markers: presets::humanoid_markers(),
        fixed_base: false,
    }
}

fn yaw(angle: f64) -> Quat {
    Quat::from_axis_angle(&Vec3::y_axis(), angle)
}

fn smoothstep(a: f64, b: f64, x: f64) -> f64 {
    let t = ((x - a) / (b - a)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn t_pose(skeleton: &Skeleton, root: Vec3, heading: f64) -> Pose {
    let mut p = skeleton.rest_pose(root);
    p.root_orientation = yaw(heading);
    p
}

fn set_local(skeleton: &Skeleton, pose: &mut Pose, joint: &str, q: Quat) {
    let i = skeleton.joint_index(joint).expect("preset joint");
    pose.joint_rotations[i - 1] = q;
}

fn neutral_pose(skeleton: &Skeleton, root: Vec3, heading: f64) -> Pose {
    let mut p = t_pose(skeleton, root, heading);
    let z = Vec3::z_axis();
    set_local(skeleton, &mut p, "l_shoulder", Quat::from_axis_angle(&z, -NEUTRAL_ARM_DROP));
    set_local(skeleton, &mut p, "r_shoulder", Quat::from_axis_angle(&z, NEUTRAL_ARM_DROP));
    p
}

/// Per-joint slerp between two poses of the same skeleton.
pub fn blend_poses(a: &Pose, b: &Pose, t: f64) -> Pose {
    Pose {
        root_position: a.root_position.lerp(&b.root_position, t),
        root_orientation: renormalize(&a.root_orientation.slerp(&b.root_orientation, t)),
        joint_rotations: a
            .joint_rotations
            .iter()
            .zip(&b.joint_rotations)
            .map(|(x, y)| renormalize(&x.slerp(y, t)))
            .collect(),
    }
}

fn arc(from: &Vec3, to: &Vec3, fallback_axis: &Vec3) -> Quat {
    Quat::rotation_between(from, to).unwrap_or_else(|| {
        let axis = nalgebra::Unit::new_normalize(from.cross(fallback_axis));
        Quat::from_axis_angle(&axis, PI)
    })
}

/// Analytic two-bone IK: rotates `upper` and `lower` so that the point
/// `tip_local` (in the frame of `lower`) reaches `target`, with the middle
/// joint bending toward `pole`.
pub fn two_bone_ik(
    skeleton: &Skeleton,
    pose: &mut Pose,
    upper: &str,
    lower: &str,
    tip_local: Vec3,
    target: Vec3,
    pole: Vec3,
) {
    let ui = skeleton.joint_index(upper).expect("ik joint");
    let li = skeleton.joint_index(lower).expect("ik joint");
    let k = fk_unchecked(skeleton, pose);
    let s = k.positions[ui];
    let bone = skeleton.joints()[li].offset;
    let (l1, l2) = (bone.norm(), tip_local.norm());
    let to_target = target - s;
    let d = to_target.norm().clamp((l1 - l2).abs() + 1e-6, l1 + l2 - 1e-6);
    let dir = to_target.normalize();
    let cos_a = ((l1 * l1 + d * d - l2 * l2) / (2.0 * l1 * d)).clamp(-1.0, 1.0);
    let perp = (pole - dir * pole.dot(&dir)).normalize();
    let elbow = s + (dir * cos_a + perp * (1.0 - cos_a * cos_a).sqrt()) * l1;
    let tip = s + dir * d;

    let parent = skeleton.joints()[ui].parent.expect("ik upper joint is not the root");
    let upper_world = k.rotations[ui];
    let r_upper = arc(&(upper_world * bone), &(elbow - s), &pole) * upper_world;
    pose.joint_rotations[ui - 1] = renormalize(&(k.rotations[parent].inverse() * r_upper));
    let lower_world = r_upper * pose.joint_rotations[li - 1];
    let r_lower = arc(&(lower_world * tip_local), &(tip - elbow), &pole) * lower_world;
    pose.joint_rotations[li - 1] = renormalize(&(r_upper.inverse() * r_lower));
}

/// Hand marker position in the elbow frame, for a straight wrist.
fn hand_tip(skeleton: &Skeleton, side: &str) -> Vec3 {
    let wrist = &skeleton.joints()[skeleton.joint_index(&format!("{side}_wrist")).unwrap()];
    let marker = presets::humanoid_markers();
    let hand = &marker.markers[marker.index_of(&format!("{side}_hand")).unwrap()];
    wrist.offset + hand.offset
}

fn scene_of(characters: Vec<Character>, objects: Vec<RigidObject>, mut frames: Vec<Frame>) -> Scene {
    for f in &mut frames {
        for p in &mut f.characters {
            p.root_orientation = renormalize(&p.root_orientation);
            for q in &mut p.joint_rotations {
                *q = renormalize(q);
            }
        }
        for o in &mut f.objects {
            o.rotation = renormalize(&o.rotation);
        }
    }
    Scene {
        fps: FPS,
        characters,
        objects,
        frames,
        grasp_windows: Vec::new(),
        metadata: None,
    }
}

/// One humanoid walking forward with swinging arms (`n >= 2` frames).
pub fn single_character_scene(n: usize) -> Scene {
    let ch = humanoid_character("solo");
    let sk = &ch.skeleton;
    let root0 = Vec3::new(0.0, HUMANOID_ROOT_HEIGHT, 0.0);
    let mut frames = Vec::with_capacity(n);
    for f in 0..n {
        let t = f as f64 / FPS;
        let pose = if f == 0 {
            t_pose(sk, root0, 0.0)
        } else {
            let root = root0 + Vec3::new(0.0, 0.02 * (4.0 * t).sin(), 0.6 * t);
            let mut p = neutral_pose(sk, root, 0.1 * (1.5 * t).sin());
            let swing = 0.4 * (4.0 * t).sin();
            let x = Vec3::x_axis();
            set_local(sk, &mut p, "l_hip", Quat::from_axis_angle(&x, swing));
            set_local(sk, &mut p, "r_hip", Quat::from_axis_angle(&x, -swing));
            set_local(sk, &mut p, "l_knee", Quat::from_axis_angle(&x, 0.3 + 0.3 * swing));
            set_local(sk, &mut p, "r_knee", Quat::from_axis_angle(&x, 0.3 - 0.3 * swing));
            set_local(sk, &mut p, "l_elbow", Quat::from_axis_angle(&Vec3::y_axis(), -0.3 - 0.2 * swing));
            set_local(sk, &mut p, "r_elbow", Quat::from_axis_angle(&Vec3::y_axis(), 0.3 - 0.2 * swing));
            set_local(sk, &mut p, "spine1", Quat::from_axis_angle(&Vec3::y_axis(), 0.1 * swing));
            blend_poses(&t_pose(sk, root, 0.0), &p, smoothstep(0.0, 8.0, f as f64))
        };
        frames.push(Frame {
            characters: vec![pose],
            objects: vec![],
        });
    }
    scene_of(vec![ch], vec![], frames)
}

/// Two humanoids facing each other 0.8 m apart, idling out of phase.
pub fn two_character_idle_scene(n: usize) -> Scene {
    let chars = vec![humanoid_character("a"), humanoid_character("b")];
    let sk = chars[0].skeleton.clone();
    let bases = [
        (Vec3::new(0.0, HUMANOID_ROOT_HEIGHT, -0.4), 0.0),
        (Vec3::new(0.0, HUMANOID_ROOT_HEIGHT, 0.4), PI),
    ];
    let mut frames = Vec::with_capacity(n);
    for f in 0..n {
        let t = f as f64 / FPS;
        let poses = bases
            .iter()
            .enumerate()
            .map(|(c, (root, heading))| {
                if f == 0 {
                    return t_pose(&sk, *root, *heading);
                }
                let phase = t * 2.0 + c as f64 * 1.3;
                let r = root + Vec3::new(0.03 * phase.sin(), 0.01 * (2.0 * phase).sin(), 0.0);
                let mut p = neutral_pose(&sk, r, heading + 0.15 * (0.5 * phase).sin());
                let y = Vec3::y_axis();
                set_local(&sk, &mut p, "spine1", Quat::from_axis_angle(&Vec3::z_axis(), 0.08 * phase.sin()));
                set_local(&sk, &mut p, "neck", Quat::from_axis_angle(&y, 0.3 * (0.7 * phase).sin()));
                set_local(&sk, &mut p, "l_elbow", Quat::from_axis_angle(&y, -0.4 - 0.2 * phase.cos()));
                set_local(&sk, &mut p, "r_elbow", Quat::from_axis_angle(&y, 0.4 + 0.2 * phase.sin()));
                set_local(&sk, &mut p, "l_knee", Quat::from_axis_angle(&Vec3::x_axis(), 0.1 + 0.05 * phase.sin()));
                blend_poses(&t_pose(&sk, r, *heading), &p, smoothstep(0.0, 8.0, f as f64))
            })
            .collect();
        frames.push(Frame {
            characters: poses,
            objects: vec![],
        });
    }
    scene_of(chars, vec![], frames)
}

/// Two humanoids facing each other; A's right hand meets B's left hand
/// overhead, holds, and releases. 90 frames at 30 fps.
pub fn high_five_scene() -> Scene {
    let chars = vec![humanoid_character("a"), humanoid_character("b")];
    let sk = chars[0].skeleton.clone();
    let c = Vec3::from(HIGH_FIVE_CONTACT);
    let a_root = Vec3::new(0.0, HUMANOID_ROOT_HEIGHT, -0.4);
    let b_root = Vec3::new(0.0, HUMANOID_ROOT_HEIGHT, 0.4);
    let pole = Vec3::new(-0.5, -1.0, 0.0);

    let a_neutral = neutral_pose(&sk, a_root, 0.0);
    let b_neutral = neutral_pose(&sk, b_root, PI);
    // Each hand moves on a straight line from its neutral position to the
    // contact point, with the arm solved by IK on every frame.
    let arm = |neutral: &Pose, side: &str, goal: Vec3| {
        let elbow = sk.joint_index(&format!("{side}_elbow")).expect("preset joint");
        let start = fk_unchecked(&sk, neutral).transform_point(elbow, &hand_tip(&sk, side));
        (neutral.clone(), side.to_string(), start, goal)
    };
    let arms = [
        arm(&a_neutral, "r", c - Vec3::new(0.0, 0.0, HIGH_FIVE_GAP / 2.0)),
        arm(&b_neutral, "l", c + Vec3::new(0.0, 0.0, HIGH_FIVE_GAP / 2.0)),
    ];
    let tposes = [t_pose(&sk, a_root, 0.0), t_pose(&sk, b_root, PI)];

    let frames = (0..90)
        .map(|f| {
            let x = f as f64;
            let reach = smoothstep(10.0, 35.0, x) - smoothstep(55.0, 75.0, x);
            let settle = smoothstep(0.0, 10.0, x);
            let characters = arms
                .iter()
                .zip(&tposes)
                .map(|((neutral, side, start, goal), tp)| {
                    let mut pose = blend_poses(tp, neutral, settle);
                    if reach > 0.0 {
                        two_bone_ik(
                            &sk,
                            &mut pose,
                            &format!("{side}_shoulder"),
                            &format!("{side}_elbow"),
                            hand_tip(&sk, side),
                            start.lerp(goal, reach),
                            pole,
                        );
                    }
                    pose
                })
                .collect();
            Frame {
                characters,
                objects: vec![],
            }
        })
        .collect();
    scene_of(chars, vec![], frames)
}

/// Two humanoids lift a box between them and carry it sideways. 60 frames,
/// with grasp windows on all four hands.
pub fn box_carry_scene() -> Scene {
    let chars = vec![humanoid_character("a"), humanoid_character("b")];
    let sk = chars[0].skeleton.clone();
    let half = Vec3::new(0.2, 0.15, 0.2);
    let object = RigidObject {
        name: "box".into(),
        shape: ObjectShape::Box { half_extents: half },
        markers: presets::box_markers("box", &half),
        mass: 5.0,
    };
    let n = 60;
    let pickup = 25;
    let sides = [(-0.5, PI / 2.0), (0.5, -PI / 2.0)];
    let frames = (0..n)
        .map(|f| {
            let x = f as f64;
            let t = (x - pickup as f64).max(0.0) / FPS;
            let shift = Vec3::new(0.0, 0.0, 0.4 * t);
            let lift = 0.1 * smoothstep(pickup as f64, pickup as f64 + 10.0, x);
            let box_center = Vec3::new(0.0, 0.95 + lift, 0.0) + shift;
            let poses = sides
                .iter()
                .map(|&(px, heading)| {
                    let root = Vec3::new(px, HUMANOID_ROOT_HEIGHT, 0.0) + shift;
                    let tp = t_pose(&sk, root, heading);
                    let neutral = neutral_pose(&sk, root, heading);
                    let base = blend_poses(&tp, &neutral, smoothstep(0.0, 10.0, x));
                    let mut held = neutral.clone();
                    let face = box_center.x + half.x * px.signum();
                    for (side, dz) in [("l", 1.0), ("r", -1.0)] {
                        // Character-left maps to -z when facing +x.
                        let z = dz * 0.12 * px.signum();
                        two_bone_ik(
                            &sk,
                            &mut held,
                            &format!("{side}_shoulder"),
                            &format!("{side}_elbow"),
                            hand_tip(&sk, side),
                            Vec3::new(face, box_center.y, box_center.z + z),
                            Vec3::new(0.0, -1.0, 0.0),
                        );
                    }
                    blend_poses(&base, &held, smoothstep(10.0, pickup as f64, x))
                })
                .collect();
            Frame {
                characters: poses,
                objects: vec![Isometry3::from_parts(
                    Translation3::from(box_center),
                    Quat::identity(),
                )],
            }
        })
        .collect();
    let mut scene = scene_of(chars, vec![object], frames);
    for c in 0..2 {
        for side in ["l", "r"] {
            scene.grasp_windows.push(GraspWindow {
                start_frame: pickup,
                end_frame: n - 1,
                hand: BodyRef {
                    entity: EntityRef::Character(c),
                    body: format!("{side}_wrist"),
                },
                target: BodyRef {
                    entity: EntityRef::Object(0),
                    body: "box".into(),
                },
                attach_offset: None,
            });
        }
    }
    scene
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::place_markers;

    fn marker(scene: &Scene, frame: usize, c: usize, name: &str) -> Vec3 {
        let nodes = place_markers(scene, frame, EntityRef::Character(c)).unwrap();
        nodes[scene.characters[c].markers.index_of(name).unwrap()].p
    }

    #[test]
    fn scenes_validate() {
        for s in [
            single_character_scene(20),
            two_character_idle_scene(20),
            high_five_scene(),
            box_carry_scene(),
        ] {
            s.validate().unwrap();
            crate::motion::validate_tpose(&s).unwrap();
        }
    }

    #[test]
    fn frame_zero_is_t_pose() {
        let s = high_five_scene();
        for p in &s.frames[0].characters {
            assert!(p.joint_rotations.iter().all(|q| *q == Quat::identity()));
        }
    }

    #[test]
    fn high_five_hands_meet() {
        let s = high_five_scene();
        let a = marker(&s, 45, 0, "r_hand");
        let b = marker(&s, 45, 1, "l_hand");
        assert!(((a - b).norm() - HIGH_FIVE_GAP).abs() < 1e-9);
        assert!((0.5 * (a + b) - Vec3::from(HIGH_FIVE_CONTACT)).norm() < 1e-9);
        assert!((marker(&s, 85, 0, "r_hand") - marker(&s, 85, 1, "l_hand")).norm() > 0.3);
    }

    #[test]
    fn box_hands_on_faces() {
        let s = box_carry_scene();
        let f = 40;
        let center = s.frames[f].objects[0].translation.vector;
        for c in 0..2 {
            for side in ["l_hand", "r_hand"] {
                let h = marker(&s, f, c, side);
                assert!((h.x.abs() - 0.2).abs() < 1e-9, "{c} {side} {h}");
                assert!((h.y - center.y).abs() < 1e-9);
            }
        }
    }
}
