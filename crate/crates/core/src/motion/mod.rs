//! Multi-character motion scenes: entities, pose tracks, grasp windows, marker
//! velocities and the frame-0 T-pose normalizer table.

mod export;
mod format;

use nalgebra::Isometry3;

use crate::error::{Error, Result};
use crate::graph::{EntityRef, MarkerConfig, ResolvedMarker};
use crate::model::{fk_unchecked, Kinematics, Pose, Skeleton};
use crate::{Quat, Vec3};

pub use export::{number, read_marker_csv, write_marker_csv};
pub use format::{load_scene, save_scene, scene_from_json, scene_to_json, FORMAT_NAME, FORMAT_VERSION};

/// Within-character marker pairs closer than this at frame 0 cannot serve as
/// T-pose normalizers.
pub const MIN_TPOSE_EDGE: f64 = 1e-4;

/// Default grasp proximity: a hand counts as holding its target when closer
/// than this to the attach point.
pub const DEFAULT_GRASP_PROXIMITY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Character {
    pub name: String,
    pub skeleton: Skeleton,
    pub markers: MarkerConfig,
    /// Immobile base (e.g. a mounted robot): root and COM tracking are skipped.
    pub fixed_base: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectShape {
    Box { half_extents: Vec3 },
    /// Markers given explicitly in the object's marker config.
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidObject {
    pub name: String,
    pub shape: ObjectShape,
    pub markers: MarkerConfig,
    pub mass: f64,
}

/// One sampled instant: a pose per character and a transform per object.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub characters: Vec<Pose>,
    pub objects: Vec<Isometry3<f64>>,
}

/// A body on a character or object, addressed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyRef {
    pub entity: EntityRef,
    pub body: String,
}

/// Frame interval during which a hand is attached to a target body.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspWindow {
    pub start_frame: usize,
    pub end_frame: usize,
    pub hand: BodyRef,
    pub target: BodyRef,
    /// Attach point in target-local coordinates. When absent it is taken from
    /// the reference at `start_frame`.
    pub attach_offset: Option<Vec3>,
}

impl GraspWindow {
    pub fn is_active(&self, frame: usize) -> bool {
        frame >= self.start_frame && frame <= self.end_frame
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub fps: f64,
    pub characters: Vec<Character>,
    pub objects: Vec<RigidObject>,
    pub frames: Vec<Frame>,
    pub grasp_windows: Vec<GraspWindow>,
    /// Free-form provenance header (params, seed, tool version) carried
    /// through load/save untouched.
    pub metadata: Option<serde_json::Value>,
}

/// Per-frame, per-marker positions and velocities in the scene's global
/// marker order.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerTrack {
    pub positions: Vec<Vec<Vec3>>,
    pub velocities: Vec<Vec<Vec3>>,
}

/// Global marker slot: owning entity and the marker's index in its config.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerSlot {
    pub entity: EntityRef,
    pub local: usize,
    pub name: String,
}

impl Scene {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fps
    }

    /// Characters first, then objects.
    pub fn entities(&self) -> Vec<EntityRef> {
        (0..self.characters.len())
            .map(EntityRef::Character)
            .chain((0..self.objects.len()).map(EntityRef::Object))
            .collect()
    }

    pub fn entity_name(&self, entity: EntityRef) -> &str {
        match entity {
            EntityRef::Character(i) => &self.characters[i].name,
            EntityRef::Object(i) => &self.objects[i].name,
        }
    }

    pub fn marker_config(&self, entity: EntityRef) -> &MarkerConfig {
        match entity {
            EntityRef::Character(i) => &self.characters[i].markers,
            EntityRef::Object(i) => &self.objects[i].markers,
        }
    }

    /// Global marker order: entities in [`Scene::entities`] order, markers in
    /// config order.
    pub fn marker_slots(&self) -> Vec<MarkerSlot> {
        self.entities()
            .into_iter()
            .flat_map(|e| {
                self.marker_config(e)
                    .markers
                    .iter()
                    .enumerate()
                    .map(move |(local, m)| MarkerSlot {
                        entity: e,
                        local,
                        name: m.name.clone(),
                    })
            })
            .collect()
    }

    pub fn resolved_markers(&self, entity: EntityRef) -> Result<Vec<ResolvedMarker>> {
        match entity {
            EntityRef::Character(i) => {
                let c = &self.characters[i];
                c.markers.resolve(&c.skeleton)
            }
            EntityRef::Object(i) => {
                let o = &self.objects[i];
                o.markers.resolve_object(&o.name)
            }
        }
    }

    pub fn pose(&self, frame: usize, character: usize) -> &Pose {
        &self.frames[frame].characters[character]
    }

    pub fn kinematics(&self, frame: usize, character: usize) -> Kinematics {
        fk_unchecked(
            &self.characters[character].skeleton,
            &self.frames[frame].characters[character],
        )
    }

    /// World transform of a named body; objects have a single body named
    /// after the object.
    pub fn body_transform(&self, frame: usize, body: &BodyRef) -> Result<(Vec3, Quat)> {
        match body.entity {
            EntityRef::Character(c) => {
                let ch = self.characters.get(c).ok_or_else(|| {
                    Error::Validation(format!("unknown character {c}"))
                })?;
                let idx = ch.skeleton.joint_index(&body.body).ok_or_else(|| {
                    Error::Validation(format!(
                        "character '{}' has no body '{}'",
                        ch.name, body.body
                    ))
                })?;
                let k = self.kinematics(frame, c);
                Ok((k.positions[idx], k.rotations[idx]))
            }
            EntityRef::Object(o) => {
                let obj = self
                    .objects
                    .get(o)
                    .ok_or_else(|| Error::Validation(format!("unknown object {o}")))?;
                if obj.name != body.body {
                    return Err(Error::Validation(format!(
                        "object '{}' has no body '{}'",
                        obj.name, body.body
                    )));
                }
                let t = &self.frames[frame].objects[o];
                Ok((t.translation.vector, t.rotation))
            }
        }
    }

    /// Marker world positions of one entity at one frame.
    pub fn entity_marker_positions(
        &self,
        frame: usize,
        entity: EntityRef,
        resolved: &[ResolvedMarker],
    ) -> Vec<Vec3> {
        match entity {
            EntityRef::Character(c) => {
                let k = self.kinematics(frame, c);
                resolved
                    .iter()
                    .map(|m| k.transform_point(m.body, &m.offset))
                    .collect()
            }
            EntityRef::Object(o) => {
                let t = &self.frames[frame].objects[o];
                resolved
                    .iter()
                    .map(|m| t.translation.vector + t.rotation * m.offset)
                    .collect()
            }
        }
    }

    /// All marker positions of one frame in global marker order.
    pub fn marker_positions(&self, frame: usize) -> Result<Vec<Vec3>> {
        let mut out = Vec::new();
        for e in self.entities() {
            let resolved = self.resolved_markers(e)?;
            out.extend(self.entity_marker_positions(frame, e, &resolved));
        }
        Ok(out)
    }

    /// Positions and central-difference velocities for the whole clip.
    pub fn marker_track(&self) -> Result<MarkerTrack> {
        let positions = (0..self.frame_count())
            .map(|f| self.marker_positions(f))
            .collect::<Result<Vec<_>>>()?;
        MarkerTrack::from_positions(positions, self.fps)
    }

    /// Checks every structural invariant of the scene.
    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return Err(Error::Validation(format!("fps must be positive, got {}", self.fps)));
        }
        if self.frames.is_empty() {
            return Err(Error::Validation("scene has no frames".into()));
        }
        for e in self.entities() {
            self.resolved_markers(e).map_err(|err| {
                Error::Validation(format!("{} '{}': {err}", e, self.entity_name(e)))
            })?;
        }
        for (f, frame) in self.frames.iter().enumerate() {
            if frame.characters.len() != self.characters.len() {
                let missing = self
                    .characters
                    .get(frame.characters.len())
                    .map(|c| c.name.as_str())
                    .unwrap_or("?");
                return Err(Error::Structure(format!(
                    "frame {f}: expected poses for {} characters, got {} (track of character '{}' has mismatched length)",
                    self.characters.len(),
                    frame.characters.len(),
                    missing
                )));
            }
            if frame.objects.len() != self.objects.len() {
                let missing = self
                    .objects
                    .get(frame.objects.len())
                    .map(|o| o.name.as_str())
                    .unwrap_or("?");
                return Err(Error::Structure(format!(
                    "frame {f}: expected transforms for {} objects, got {} (track of object '{}' has mismatched length)",
                    self.objects.len(),
                    frame.objects.len(),
                    missing
                )));
            }
            for (c, pose) in frame.characters.iter().enumerate() {
                pose.validate(&self.characters[c].skeleton).map_err(|err| {
                    Error::Structure(format!(
                        "frame {f}, character '{}': {err}",
                        self.characters[c].name
                    ))
                })?;
            }
        }
        for (w, window) in self.grasp_windows.iter().enumerate() {
            self.validate_window(window)
                .map_err(|err| Error::Validation(format!("grasp window {w}: {err}")))?;
        }
        Ok(())
    }

    fn validate_window(&self, window: &GraspWindow) -> Result<()> {
        if window.start_frame > window.end_frame || window.end_frame >= self.frame_count() {
            return Err(Error::Validation(format!(
                "interval [{}, {}] is not within 0..{}",
                window.start_frame,
                window.end_frame,
                self.frame_count()
            )));
        }
        if !window.hand.entity.is_character() {
            return Err(Error::Validation("hand must belong to a character".into()));
        }
        if window.hand == window.target {
            return Err(Error::Validation("hand and target are the same body".into()));
        }
        self.body_transform(0, &window.hand)?;
        self.body_transform(0, &window.target)?;
        Ok(())
    }
}

impl MarkerTrack {
    pub fn from_positions(positions: Vec<Vec<Vec3>>, fps: f64) -> Result<Self> {
        let velocities = compute_velocities(&positions, fps)?;
        Ok(MarkerTrack {
            positions,
            velocities,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.positions.len()
    }
}

/// Central differences on interior frames, one-sided at the boundaries.
/// `track[frame][marker]`; result in units per second.
pub fn compute_velocities(track: &[Vec<Vec3>], fps: f64) -> Result<Vec<Vec<Vec3>>> {
    let n = track.len();
    if n < 2 {
        return Err(Error::Validation(format!(
            "velocity needs at least 2 frames, got {n}"
        )));
    }
    if !(fps > 0.0) {
        return Err(Error::Validation(format!("fps must be positive, got {fps}")));
    }
    let width = track[0].len();
    if track.iter().any(|f| f.len() != width) {
        return Err(Error::Structure("marker count varies across frames".into()));
    }
    Ok((0..n)
        .map(|t| {
            let (a, b, scale) = difference_stencil(t, n, fps);
            track[b]
                .iter()
                .zip(&track[a])
                .map(|(pb, pa)| (pb - pa) * scale)
                .collect()
        })
        .collect())
}

/// Frame indices `(a, b)` and scale such that `(x[b] - x[a]) * scale` is the
/// derivative at `t`.
pub(crate) fn difference_stencil(t: usize, n: usize, fps: f64) -> (usize, usize, f64) {
    if t == 0 {
        (0, 1, fps)
    } else if t == n - 1 {
        (n - 2, n - 1, fps)
    } else {
        (t - 1, t + 1, fps * 0.5)
    }
}

/// Frame-0 marker-pair vectors per character (`p_j - p_i` for local marker
/// indices `i < j`).
#[derive(Debug, Clone, PartialEq)]
pub struct TposeTable {
    pub characters: Vec<CharacterTpose>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterTpose {
    pub markers: Vec<String>,
    positions: Vec<Vec3>,
}

impl CharacterTpose {
    /// T-pose edge vector from local marker `i` to `j`.
    pub fn edge(&self, i: usize, j: usize) -> Vec3 {
        self.positions[j] - self.positions[i]
    }

    pub fn marker_count(&self) -> usize {
        self.positions.len()
    }
}

impl TposeTable {
    pub fn edge(&self, character: usize, i: usize, j: usize) -> Vec3 {
        self.characters[character].edge(i, j)
    }
}

/// Builds the T-pose normalizer table from frame 0 and rejects degenerate
/// (near-coincident) marker pairs.
pub fn validate_tpose(scene: &Scene) -> Result<TposeTable> {
    let mut characters = Vec::with_capacity(scene.characters.len());
    for (c, ch) in scene.characters.iter().enumerate() {
        let e = EntityRef::Character(c);
        let resolved = scene.resolved_markers(e)?;
        let positions = scene.entity_marker_positions(0, e, &resolved);
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                let d = (positions[j] - positions[i]).norm();
                if !(d >= MIN_TPOSE_EDGE) {
                    return Err(Error::Degenerate(format!(
                        "character '{}': T-pose markers '{}' and '{}' are {d:.3e} m apart (minimum {MIN_TPOSE_EDGE} m)",
                        ch.name, ch.markers.markers[i].name, ch.markers.markers[j].name
                    )));
                }
            }
        }
        characters.push(CharacterTpose {
            markers: ch.markers.names().map(str::to_owned).collect(),
            positions,
        });
    }
    Ok(TposeTable { characters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply_scale, ScaleSpec};

    #[test]
    fn constant_track_has_zero_velocity() {
        let track = vec![vec![Vec3::new(1.0, 2.0, 3.0)]; 5];
        for f in compute_velocities(&track, 30.0).unwrap() {
            assert_eq!(f[0], Vec3::zeros());
        }
    }

    #[test]
    fn linear_track_has_unit_velocity() {
        let track: Vec<_> = (0..10).map(|i| vec![Vec3::new(i as f64 / 30.0, 0.0, 0.0)]).collect();
        for f in compute_velocities(&track, 30.0).unwrap() {
            assert!((f[0] - Vec3::x()).norm() < 1e-12);
        }
    }

    #[test]
    fn quadratic_track_is_exact_at_interior() {
        // (t+h)^2 - (t-h)^2 = 4th, so the central difference returns 2t.
        let fps = 30.0;
        let track: Vec<_> = (0..12)
            .map(|i| {
                let t = i as f64 / fps;
                vec![Vec3::new(t * t, 0.0, 0.0)]
            })
            .collect();
        let v = compute_velocities(&track, fps).unwrap();
        for i in 1..11 {
            let t = i as f64 / fps;
            assert!((v[i][0].x - 2.0 * t).abs() < 1e-12, "frame {i}");
        }
    }

    #[test]
    fn single_frame_is_rejected() {
        assert!(compute_velocities(&[vec![Vec3::zeros()]], 30.0).is_err());
    }

    #[test]
    fn humanoid_tpose_table() {
        let scene = crate::synthetic::single_character_scene(3);
        let table = validate_tpose(&scene).unwrap();
        assert_eq!(table.characters[0].marker_count(), 15);
        for i in 0..15 {
            for j in i + 1..15 {
                assert!(table.edge(0, i, j).norm() > MIN_TPOSE_EDGE);
            }
        }
    }

    #[test]
    fn coincident_tpose_markers_are_rejected() {
        let mut scene = crate::synthetic::single_character_scene(2);
        let m = scene.characters[0].markers.markers[1].clone();
        scene.characters[0].markers.markers[0].body = m.body;
        scene.characters[0].markers.markers[0].offset = m.offset;
        let err = validate_tpose(&scene).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        assert!(err.to_string().contains(&m.name));
    }

    #[test]
    fn tpose_scales_with_character() {
        // Oracle: scale skeleton and markers by s, rerun FK, compare lengths.
        let base = crate::synthetic::single_character_scene(2);
        let table = validate_tpose(&base).unwrap();
        for s in [0.5, 1.3] {
            let mut scaled = base.clone();
            let ch = &mut scaled.characters[0];
            let spec = ScaleSpec::uniform(&ch.skeleton, s);
            ch.skeleton = apply_scale(&ch.skeleton, &spec).unwrap();
            ch.markers = ch.markers.scaled(&spec);
            let t2 = validate_tpose(&scaled).unwrap();
            for i in 0..15 {
                for j in i + 1..15 {
                    let a = table.edge(0, i, j).norm();
                    let b = t2.edge(0, i, j).norm();
                    assert!((b - s * a).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tpose_ignores_later_frames() {
        let scene = crate::synthetic::single_character_scene(4);
        let mut moved = scene.clone();
        for f in 1..4 {
            moved.frames[f].characters[0].joint_rotations[3] =
                Quat::from_euler_angles(0.4, 0.1, -0.3);
        }
        assert_eq!(validate_tpose(&scene).unwrap(), validate_tpose(&moved).unwrap());
    }

    #[test]
    fn mismatched_frame_names_character() {
        let mut scene = crate::synthetic::high_five_scene();
        scene.frames[1].characters.pop();
        let msg = scene.validate().unwrap_err().to_string();
        assert!(msg.contains(&scene.characters[1].name), "{msg}");
    }

    #[test]
    fn grasp_window_bounds() {
        let mut scene = crate::synthetic::high_five_scene();
        let window = GraspWindow {
            start_frame: 3,
            end_frame: scene.frame_count(),
            hand: BodyRef {
                entity: EntityRef::Character(0),
                body: "r_wrist".into(),
            },
            target: BodyRef {
                entity: EntityRef::Character(1),
                body: "l_wrist".into(),
            },
            attach_offset: None,
        };
        scene.grasp_windows.push(window.clone());
        assert!(scene.validate().is_err());
        scene.grasp_windows[0].end_frame = 5;
        scene.validate().unwrap();
        scene.grasp_windows[0].target = scene.grasp_windows[0].hand.clone();
        assert!(scene.validate().is_err());
    }
}
