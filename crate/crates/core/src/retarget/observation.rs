//! Flattened RL-style observations.
//!
//! Layout (version 1): `o_sim` then `o_ref`. `o_sim` lists the controlled
//! character, then the other characters in scene order, then objects. Each
//! character contributes every skeleton link, each object one link. A link is
//! 13 numbers: position (3), orientation as canonical `(w, x, y, z)` with
//! `w >= 0` (4), linear velocity (3), angular velocity (3), all in the
//! controlled character's facing frame at the current frame. `o_ref` repeats
//! the same block for the reference clip at every future offset, in the
//! reference character's facing frame at the current frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::rotation::{angular_velocity, canonical_wxyz};
use crate::model::{compute_facing_frame, fk_unchecked, FacingFrame};
use crate::motion::{difference_stencil, Scene};
use crate::{Quat, Vec3};

pub const OBSERVATION_LAYOUT_VERSION: u32 = 1;
pub const LINK_DIMS: usize = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationSpec {
    /// Seconds ahead of the current frame; rounded to whole frames and
    /// clamped at the clip end.
    pub future_offsets: Vec<f64>,
    /// The controlled character.
    pub character: usize,
    pub include_others: bool,
    pub include_objects: bool,
}

impl Default for ObservationSpec {
    fn default() -> Self {
        ObservationSpec {
            future_offsets: vec![0.0, 0.05, 0.15],
            character: 0,
            include_others: true,
            include_objects: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub sim: Vec<f64>,
    pub reference: Vec<f64>,
    /// Reference frame used for each future offset.
    pub reference_frames: Vec<usize>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.sim.len() + self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `o_sim` followed by `o_ref`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.sim.clone();
        v.extend_from_slice(&self.reference);
        v
    }
}

fn links(scene: &Scene, spec: &ObservationSpec) -> usize {
    let mut n = scene.characters[spec.character].skeleton.len();
    if spec.include_others {
        n += scene
            .characters
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != spec.character)
            .map(|(_, ch)| ch.skeleton.len())
            .sum::<usize>();
    }
    if spec.include_objects {
        n += scene.objects.len();
    }
    n
}

/// Length of the observation vector for the given scenes.
pub fn observation_len(sim: &Scene, reference: &Scene, spec: &ObservationSpec) -> usize {
    LINK_DIMS * (links(sim, spec) + spec.future_offsets.len() * links(reference, spec))
}

fn check(sim: &Scene, reference: &Scene, frame: usize, spec: &ObservationSpec) -> Result<()> {
    if sim.characters.len() != reference.characters.len()
        || sim.objects.len() != reference.objects.len()
    {
        return Err(Error::Structure(
            "observation scenes differ in their characters or objects".into(),
        ));
    }
    if spec.character >= sim.characters.len() {
        return Err(Error::Structure(format!(
            "controlled character {} is out of range ({} characters)",
            spec.character,
            sim.characters.len()
        )));
    }
    if frame >= sim.frame_count() || frame >= reference.frame_count() {
        return Err(Error::Structure(format!(
            "frame {frame} is outside the clips ({} and {} frames)",
            sim.frame_count(),
            reference.frame_count()
        )));
    }
    if sim.frame_count() < 2 || reference.frame_count() < 2 {
        return Err(Error::Validation("observations need clips of at least 2 frames".into()));
    }
    if let Some(o) = spec.future_offsets.iter().find(|o| !(o.is_finite() && **o >= 0.0)) {
        return Err(Error::Validation(format!("future offset {o} must be finite and >= 0")));
    }
    Ok(())
}

fn push_link(out: &mut Vec<f64>, f: &FacingFrame, p: &Vec3, q: &Quat, v: &Vec3, w: &Vec3) {
    let p = f.point_to_local(p);
    let q = canonical_wxyz(&f.rotation_to_local(q));
    let v = f.vector_to_local(v);
    let w = f.vector_to_local(w);
    out.extend_from_slice(&[p.x, p.y, p.z]);
    out.extend_from_slice(&q);
    out.extend_from_slice(&[v.x, v.y, v.z, w.x, w.y, w.z]);
}

fn entity_block(scene: &Scene, frame: usize, spec: &ObservationSpec, f: &FacingFrame, out: &mut Vec<f64>) {
    let (a, b, rate) = difference_stencil(frame, scene.frame_count(), scene.fps);
    let dt = 1.0 / rate;
    let mut order = vec![spec.character];
    if spec.include_others {
        order.extend((0..scene.characters.len()).filter(|c| *c != spec.character));
    }
    for c in order {
        let sk = &scene.characters[c].skeleton;
        let kc = fk_unchecked(sk, &scene.frames[frame].characters[c]);
        let ka = fk_unchecked(sk, &scene.frames[a].characters[c]);
        let kb = fk_unchecked(sk, &scene.frames[b].characters[c]);
        for j in 0..sk.len() {
            let v = (kb.positions[j] - ka.positions[j]) * rate;
            let w = angular_velocity(&ka.rotations[j], &kb.rotations[j], dt);
            push_link(out, f, &kc.positions[j], &kc.rotations[j], &v, &w);
        }
    }
    if spec.include_objects {
        for o in 0..scene.objects.len() {
            let (tc, ta, tb) = (
                &scene.frames[frame].objects[o],
                &scene.frames[a].objects[o],
                &scene.frames[b].objects[o],
            );
            let v = (tb.translation.vector - ta.translation.vector) * rate;
            let w = angular_velocity(&ta.rotation, &tb.rotation, dt);
            push_link(out, f, &tc.translation.vector, &tc.rotation, &v, &w);
        }
    }
}

/// Observation of `sim` at `frame` with reference lookahead from `reference`.
pub fn build_observation(
    sim: &Scene,
    reference: &Scene,
    frame: usize,
    spec: &ObservationSpec,
) -> Result<Observation> {
    check(sim, reference, frame, spec)?;
    let c = spec.character;
    let facing_sim = compute_facing_frame(&sim.frames[frame].characters[c])?;
    let facing_ref = compute_facing_frame(&reference.frames[frame].characters[c])?;

    let mut o_sim = Vec::with_capacity(LINK_DIMS * links(sim, spec));
    entity_block(sim, frame, spec, &facing_sim, &mut o_sim);

    let last = reference.frame_count() - 1;
    let reference_frames: Vec<usize> = spec
        .future_offsets
        .iter()
        .map(|o| (frame + (o * reference.fps).round() as usize).min(last))
        .collect();
    let mut o_ref = Vec::with_capacity(LINK_DIMS * links(reference, spec) * reference_frames.len());
    for &t in &reference_frames {
        entity_block(reference, t, spec, &facing_ref, &mut o_ref);
    }
    Ok(Observation {
        sim: o_sim,
        reference: o_ref,
        reference_frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;
    use nalgebra::{Isometry3, Translation3};

    fn self_only() -> ObservationSpec {
        ObservationSpec {
            include_others: false,
            include_objects: false,
            ..Default::default()
        }
    }

    #[test]
    fn humanoid_self_block_is_286() {
        let s = synthetic::high_five_scene();
        let o = build_observation(&s, &s, 10, &self_only()).unwrap();
        assert_eq!(o.sim.len(), 286);
        assert_eq!(o.reference.len(), 3 * 286);
        let full = ObservationSpec::default();
        let o = build_observation(&s, &s, 10, &full).unwrap();
        assert_eq!(o.len(), observation_len(&s, &s, &full));
        assert_eq!(o.len(), 13 * (44 + 3 * 44));
    }

    #[test]
    fn offsets_round_and_clamp() {
        let s = synthetic::high_five_scene();
        let o = build_observation(&s, &s, 10, &self_only()).unwrap();
        assert_eq!(o.reference_frames, vec![10, 12, 15]);
        let o = build_observation(&s, &s, 88, &self_only()).unwrap();
        assert_eq!(o.reference_frames, vec![88, 89, 89]);
    }

    #[test]
    fn identity_facing_frame_keeps_world_coordinates() {
        let mut s = synthetic::single_character_scene(5);
        for f in &mut s.frames {
            f.characters[0].root_position.x = 0.0;
            f.characters[0].root_position.z = 0.0;
            f.characters[0].root_orientation = Quat::identity();
        }
        let o = build_observation(&s, &s, 2, &self_only()).unwrap();
        let k = s.kinematics(2, 0);
        for (j, p) in k.positions.iter().enumerate() {
            let got = &o.sim[j * LINK_DIMS..j * LINK_DIMS + 3];
            assert_eq!(got, &[p.x, p.y, p.z]);
        }
    }

    #[test]
    fn yawing_the_scene_leaves_self_observation() {
        let s = synthetic::box_carry_scene();
        let iso = Isometry3::from_parts(
            Translation3::new(1.5, 0.0, -2.0),
            Quat::from_axis_angle(&Vec3::y_axis(), 0.9),
        );
        let mut moved = s.clone();
        for f in &mut moved.frames {
            for p in &mut f.characters {
                p.root_position = iso.transform_point(&p.root_position.into()).coords;
                p.root_orientation = iso.rotation * p.root_orientation;
            }
            for t in &mut f.objects {
                *t = iso * *t;
            }
        }
        for frame in [0, 20, 45] {
            let a = build_observation(&s, &s, frame, &ObservationSpec::default()).unwrap();
            let b = build_observation(&moved, &moved, frame, &ObservationSpec::default()).unwrap();
            for (x, y) in a.to_vec().iter().zip(&b.to_vec()) {
                assert!((x - y).abs() < 1e-9, "frame {frame}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn unknown_character_is_structural() {
        let s = synthetic::high_five_scene();
        let spec = ObservationSpec {
            character: 5,
            ..Default::default()
        };
        assert!(matches!(build_observation(&s, &s, 0, &spec), Err(Error::Structure(_))));
    }
}
