use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::MarkerConfig;
use crate::model::{apply_scale, fk_unchecked, Pose, ScaleSpec, Skeleton};
use crate::motion::Scene;
use crate::Vec3;

/// Height of the root above the lowest joint in the rest pose.
fn standing_height(skeleton: &Skeleton) -> f64 {
    let k = fk_unchecked(skeleton, &skeleton.rest_pose(Vec3::zeros()));
    -k.positions.iter().map(|p| p.y).fold(0.0, f64::min)
}

fn height_ratio(from: &Skeleton, to: &Skeleton) -> f64 {
    let h = standing_height(from);
    if h > 1e-9 {
        standing_height(to) / h
    } else {
        1.0
    }
}

fn replace_character(
    reference: &Scene,
    character: usize,
    skeleton: Skeleton,
    markers: MarkerConfig,
) -> Result<Scene> {
    if character >= reference.characters.len() {
        return Err(Error::Validation(format!(
            "character {character} is out of range ({} characters)",
            reference.characters.len()
        )));
    }
    let mut scene = reference.clone();
    let old = &reference.characters[character].skeleton;
    let ratio = height_ratio(old, &skeleton);
    let same = old.same_topology(&skeleton);
    for f in &mut scene.frames {
        let p = &f.characters[character];
        let mut root = p.root_position;
        root.y *= ratio;
        f.characters[character] = if same {
            Pose {
                root_position: root,
                ..p.clone()
            }
        } else {
            Pose {
                root_orientation: p.root_orientation,
                ..skeleton.rest_pose(root)
            }
        };
    }
    let ch = &mut scene.characters[character];
    ch.skeleton = skeleton;
    ch.markers = markers;
    Ok(scene)
}

/// Reference clip with per-character limb scaling: offsets and markers are
/// scaled, joint rotations are kept and root heights follow the change in
/// standing height. This is the `Δq = 0` starting point of retargeting.
pub fn scaled_scene(reference: &Scene, scales: &BTreeMap<usize, ScaleSpec>) -> Result<Scene> {
    let mut scene = reference.clone();
    for (&c, spec) in scales {
        let ch = scene.characters.get(c).ok_or_else(|| {
            Error::Validation(format!("scale given for unknown character {c}"))
        })?;
        let skeleton = apply_scale(&ch.skeleton, spec)?;
        let markers = ch.markers.scaled(spec);
        scene = replace_character(&scene, c, skeleton, markers)?;
    }
    scene.validate()?;
    Ok(scene)
}

/// Reference clip with one character swapped for another skeleton and marker
/// set. Joint rotations carry over when the topology matches; otherwise the
/// new character starts from its rest pose on the reference root trajectory.
pub fn substituted_scene(
    reference: &Scene,
    character: usize,
    skeleton: Skeleton,
    markers: MarkerConfig,
) -> Result<Scene> {
    let scene = replace_character(reference, character, skeleton, markers)?;
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn half_scale_halves_root_height() {
        let reference = synthetic::high_five_scene();
        let sk = &reference.characters[1].skeleton;
        let scales = BTreeMap::from([(1, ScaleSpec::uniform(sk, 0.5))]);
        let scene = scaled_scene(&reference, &scales).unwrap();
        let (r, s) = (&reference.frames[20].characters[1], &scene.frames[20].characters[1]);
        assert!((s.root_position.y - 0.5 * r.root_position.y).abs() < 1e-12);
        assert_eq!(s.joint_rotations, r.joint_rotations);
        assert_eq!(scene.frames[20].characters[0], reference.frames[20].characters[0]);
    }

    #[test]
    fn robot_starts_from_rest() {
        let reference = synthetic::two_character_idle_scene(3);
        let scene = substituted_scene(
            &reference,
            0,
            crate::presets::robot_skeleton(),
            crate::presets::robot_markers(),
        )
        .unwrap();
        let p = &scene.frames[2].characters[0];
        assert!(p.joint_rotations.iter().all(|q| q.angle() == 0.0));
    }
}
