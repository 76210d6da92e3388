//! Versioned JSON scene documents.
//!
//! One self-contained document per scene: skeletons, marker configs, a
//! frame-major track and grasp windows. Quaternions are `[w, x, y, z]`.
//! Documents may declare `"up_axis": "z"`; they are converted to y-up on
//! ingest and always written y-up.

use std::path::Path;

use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityRef, Marker, MarkerConfig};
use crate::model::rotation::{quat_from_wxyz, quat_to_wxyz};
use crate::model::{Joint, Pose, Skeleton};
use crate::motion::{BodyRef, Character, Frame, GraspWindow, ObjectShape, RigidObject, Scene};
use crate::presets;
use crate::{Quat, Vec3};

pub const FORMAT_NAME: &str = "interplay-scene";
pub const FORMAT_VERSION: u32 = 1;

/// Quaternions further than this from unit norm are rejected on load.
const RENORMALIZE_LIMIT: f64 = 1e-3;
/// Quaternions closer than this (in squared norm) are kept bit-exact.
const KEEP_AS_IS: f64 = 1e-12;

#[derive(Debug, Serialize, Deserialize)]
struct SceneDoc {
    format: String,
    version: u32,
    #[serde(default = "default_up")]
    up_axis: String,
    fps: f64,
    characters: Vec<CharacterDoc>,
    #[serde(default)]
    objects: Vec<ObjectDoc>,
    frames: Vec<FrameDoc>,
    #[serde(default)]
    grasp_windows: Vec<GraspDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<serde_json::Value>,
}

fn default_up() -> String {
    "y".into()
}

#[derive(Debug, Serialize, Deserialize)]
struct CharacterDoc {
    name: String,
    #[serde(default)]
    fixed_base: bool,
    skeleton: SkeletonDoc,
    markers: Vec<MarkerDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SkeletonDoc {
    joints: Vec<JointDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JointDoc {
    name: String,
    parent: Option<usize>,
    offset: [f64; 3],
    #[serde(default = "default_mass")]
    mass: f64,
    #[serde(default)]
    center: [f64; 3],
}

fn default_mass() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
struct MarkerDoc {
    name: String,
    body: String,
    offset: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ShapeDoc {
    Box { half_extents: [f64; 3] },
    Markers,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectDoc {
    name: String,
    #[serde(default = "default_mass")]
    mass: f64,
    shape: ShapeDoc,
    #[serde(default)]
    markers: Vec<MarkerDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameDoc {
    characters: Vec<PoseDoc>,
    #[serde(default)]
    objects: Vec<TransformDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PoseDoc {
    root_position: [f64; 3],
    root_orientation: [f64; 4],
    rotations: Vec<[f64; 4]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransformDoc {
    position: [f64; 3],
    orientation: [f64; 4],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum EntityDoc {
    Character(usize),
    Object(usize),
}

#[derive(Debug, Serialize, Deserialize)]
struct BodyDoc {
    entity: EntityDoc,
    body: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraspDoc {
    start_frame: usize,
    end_frame: usize,
    hand: BodyDoc,
    target: BodyDoc,
    #[serde(default)]
    attach_offset: Option<[f64; 3]>,
}

/// Axis convention conversion applied on ingest.
#[derive(Clone, Copy)]
enum Axis {
    YUp,
    /// z-up documents are rotated by -90° about x: (x, y, z) -> (x, z, -y).
    ZUp,
}

impl Axis {
    fn vec(self, v: [f64; 3]) -> Vec3 {
        match self {
            Axis::YUp => Vec3::new(v[0], v[1], v[2]),
            Axis::ZUp => Vec3::new(v[0], v[2], -v[1]),
        }
    }

    fn quat(self, q: Quat) -> Quat {
        match self {
            Axis::YUp => q,
            Axis::ZUp => {
                let c = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), -std::f64::consts::FRAC_PI_2);
                c * q * c.inverse()
            }
        }
    }

    fn extents(self, v: [f64; 3]) -> Vec3 {
        match self {
            Axis::YUp => Vec3::new(v[0], v[1], v[2]),
            Axis::ZUp => Vec3::new(v[0], v[2], v[1]),
        }
    }
}

fn arr3(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn read_quat(wxyz: [f64; 4], what: &dyn Fn() -> String) -> Result<Quat> {
    if !wxyz.iter().all(|c| c.is_finite()) {
        return Err(Error::Schema(format!("{}: non-finite quaternion", what())));
    }
    let raw = quat_from_wxyz(wxyz);
    let norm = raw.norm();
    if (norm - 1.0).abs() > RENORMALIZE_LIMIT {
        return Err(Error::Schema(format!(
            "{}: quaternion norm {norm} deviates from 1 by more than {RENORMALIZE_LIMIT}",
            what()
        )));
    }
    if (raw.norm_squared() - 1.0).abs() <= KEEP_AS_IS {
        Ok(UnitQuaternion::new_unchecked(raw))
    } else {
        Ok(UnitQuaternion::new_normalize(raw))
    }
}

fn read_vec(v: [f64; 3], axis: Axis, what: &dyn Fn() -> String) -> Result<Vec3> {
    if !v.iter().all(|c| c.is_finite()) {
        return Err(Error::Schema(format!("{}: non-finite vector", what())));
    }
    Ok(axis.vec(v))
}

fn markers_from_doc(docs: Vec<MarkerDoc>, axis: Axis, owner: &str) -> Result<MarkerConfig> {
    docs.into_iter()
        .map(|m| {
            let offset = read_vec(m.offset, axis, &|| format!("{owner}: marker '{}'", m.name))?;
            Ok(Marker::new(m.name, m.body, offset))
        })
        .collect::<Result<Vec<_>>>()
        .map(MarkerConfig::new)
}

fn markers_to_doc(config: &MarkerConfig) -> Vec<MarkerDoc> {
    config
        .markers
        .iter()
        .map(|m| MarkerDoc {
            name: m.name.clone(),
            body: m.body.clone(),
            offset: arr3(&m.offset),
        })
        .collect()
}

fn entity_from_doc(e: EntityDoc) -> EntityRef {
    match e {
        EntityDoc::Character(i) => EntityRef::Character(i),
        EntityDoc::Object(i) => EntityRef::Object(i),
    }
}

fn entity_to_doc(e: EntityRef) -> EntityDoc {
    match e {
        EntityRef::Character(i) => EntityDoc::Character(i),
        EntityRef::Object(i) => EntityDoc::Object(i),
    }
}

fn scene_from_doc(doc: SceneDoc) -> Result<Scene> {
    if doc.format != FORMAT_NAME {
        return Err(Error::Schema(format!(
            "unsupported document format '{}', expected '{FORMAT_NAME}'",
            doc.format
        )));
    }
    if doc.version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema version {}, expected {FORMAT_VERSION}",
            doc.version
        )));
    }
    let axis = match doc.up_axis.as_str() {
        "y" | "Y" => Axis::YUp,
        "z" | "Z" => Axis::ZUp,
        other => return Err(Error::Schema(format!("unknown up_axis '{other}'"))),
    };

    let mut characters = Vec::with_capacity(doc.characters.len());
    for c in doc.characters {
        let name = c.name;
        let joints = c
            .skeleton
            .joints
            .into_iter()
            .map(|j| {
                let what = || format!("character '{name}': joint '{}'", j.name);
                let offset = read_vec(j.offset, axis, &what)?;
                let center = read_vec(j.center, axis, &what)?;
                Ok(Joint::new(j.name.clone(), j.parent, offset).with_mass(j.mass, center))
            })
            .collect::<Result<Vec<_>>>()?;
        let skeleton = Skeleton::new(joints)
            .map_err(|e| Error::Schema(format!("character '{name}': {e}")))?;
        let markers = markers_from_doc(c.markers, axis, &format!("character '{name}'"))?;
        characters.push(Character {
            name,
            skeleton,
            markers,
            fixed_base: c.fixed_base,
        });
    }

    let mut objects = Vec::with_capacity(doc.objects.len());
    for o in doc.objects {
        let shape = match o.shape {
            ShapeDoc::Box { half_extents } => ObjectShape::Box {
                half_extents: axis.extents(half_extents),
            },
            ShapeDoc::Markers => ObjectShape::Markers,
        };
        let markers = match (&shape, o.markers.is_empty()) {
            (ObjectShape::Box { half_extents }, true) => presets::box_markers(&o.name, half_extents),
            _ => markers_from_doc(o.markers, axis, &format!("object '{}'", o.name))?,
        };
        objects.push(RigidObject {
            name: o.name,
            shape,
            markers,
            mass: o.mass,
        });
    }

    let mut frames = Vec::with_capacity(doc.frames.len());
    for (f, fr) in doc.frames.into_iter().enumerate() {
        let mut poses = Vec::with_capacity(fr.characters.len());
        for (c, p) in fr.characters.into_iter().enumerate() {
            let cname = characters.get(c).map(|c| c.name.as_str()).unwrap_or("?");
            let what = || format!("frame {f}, character '{cname}'");
            let root_orientation = axis.quat(read_quat(p.root_orientation, &what)?);
            let joint_rotations = p
                .rotations
                .into_iter()
                .map(|q| read_quat(q, &what).map(|q| axis.quat(q)))
                .collect::<Result<Vec<_>>>()?;
            poses.push(Pose {
                root_position: read_vec(p.root_position, axis, &what)?,
                root_orientation,
                joint_rotations,
            });
        }
        let mut transforms = Vec::with_capacity(fr.objects.len());
        for (o, t) in fr.objects.into_iter().enumerate() {
            let oname = objects.get(o).map(|o| o.name.as_str()).unwrap_or("?");
            let what = || format!("frame {f}, object '{oname}'");
            let rotation = axis.quat(read_quat(t.orientation, &what)?);
            let translation = Translation3::from(read_vec(t.position, axis, &what)?);
            transforms.push(Isometry3::from_parts(translation, rotation));
        }
        frames.push(Frame {
            characters: poses,
            objects: transforms,
        });
    }

    let grasp_windows = doc
        .grasp_windows
        .into_iter()
        .map(|g| {
            let attach_offset = match g.attach_offset {
                Some(v) => Some(read_vec(v, axis, &|| "grasp window".to_string())?),
                None => None,
            };
            Ok(GraspWindow {
                start_frame: g.start_frame,
                end_frame: g.end_frame,
                hand: BodyRef {
                    entity: entity_from_doc(g.hand.entity),
                    body: g.hand.body,
                },
                target: BodyRef {
                    entity: entity_from_doc(g.target.entity),
                    body: g.target.body,
                },
                attach_offset,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let scene = Scene {
        fps: doc.fps,
        characters,
        objects,
        frames,
        grasp_windows,
        metadata: doc.metadata,
    };
    scene.validate()?;
    Ok(scene)
}

fn scene_to_doc(scene: &Scene) -> SceneDoc {
    SceneDoc {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        up_axis: "y".into(),
        fps: scene.fps,
        characters: scene
            .characters
            .iter()
            .map(|c| CharacterDoc {
                name: c.name.clone(),
                fixed_base: c.fixed_base,
                skeleton: SkeletonDoc {
                    joints: c
                        .skeleton
                        .joints()
                        .iter()
                        .map(|j| JointDoc {
                            name: j.name.clone(),
                            parent: j.parent,
                            offset: arr3(&j.offset),
                            mass: j.mass,
                            center: arr3(&j.center),
                        })
                        .collect(),
                },
                markers: markers_to_doc(&c.markers),
            })
            .collect(),
        objects: scene
            .objects
            .iter()
            .map(|o| ObjectDoc {
                name: o.name.clone(),
                mass: o.mass,
                shape: match &o.shape {
                    ObjectShape::Box { half_extents } => ShapeDoc::Box {
                        half_extents: arr3(half_extents),
                    },
                    ObjectShape::Markers => ShapeDoc::Markers,
                },
                markers: markers_to_doc(&o.markers),
            })
            .collect(),
        frames: scene
            .frames
            .iter()
            .map(|f| FrameDoc {
                characters: f
                    .characters
                    .iter()
                    .map(|p| PoseDoc {
                        root_position: arr3(&p.root_position),
                        root_orientation: quat_to_wxyz(&p.root_orientation),
                        rotations: p.joint_rotations.iter().map(quat_to_wxyz).collect(),
                    })
                    .collect(),
                objects: f
                    .objects
                    .iter()
                    .map(|t| TransformDoc {
                        position: arr3(&t.translation.vector),
                        orientation: quat_to_wxyz(&t.rotation),
                    })
                    .collect(),
            })
            .collect(),
        grasp_windows: scene
            .grasp_windows
            .iter()
            .map(|g| GraspDoc {
                start_frame: g.start_frame,
                end_frame: g.end_frame,
                hand: BodyDoc {
                    entity: entity_to_doc(g.hand.entity),
                    body: g.hand.body.clone(),
                },
                target: BodyDoc {
                    entity: entity_to_doc(g.target.entity),
                    body: g.target.body.clone(),
                },
                attach_offset: g.attach_offset.as_ref().map(arr3),
            })
            .collect(),
        metadata: scene.metadata.clone(),
    }
}

/// Parses and validates a scene document.
pub fn scene_from_json(text: &str) -> Result<Scene> {
    let doc: SceneDoc =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("scene document: {e}")))?;
    scene_from_doc(doc)
}

/// Canonical serialization: fixed key order, shortest round-trip floats.
pub fn scene_to_json(scene: &Scene) -> String {
    let mut s = serde_json::to_string_pretty(&scene_to_doc(scene)).expect("scene serializes");
    s.push('\n');
    s
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    scene_from_json(&text)
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scene_to_json(scene))
        .map_err(|e| Error::io(path.display().to_string(), e))
}
