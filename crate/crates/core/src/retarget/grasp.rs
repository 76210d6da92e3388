use crate::error::{Error, Result};
use crate::graph::EntityRef;
use crate::model::{fk_unchecked, Kinematics};
use crate::motion::{Character, Frame, GraspWindow, Scene};
use crate::Vec3;

#[derive(Debug, Clone)]
struct Attachment {
    window: GraspWindow,
    character: usize,
    hand_body: usize,
    hand_offset: Vec3,
    /// Target body index for character targets.
    target_body: Option<usize>,
    /// Attach point in target-local coordinates.
    attach: Vec3,
}

/// The hand marker of a body: the first marker riding on it.
fn hand_marker(ch: &Character, body: &str) -> Result<(usize, Vec3)> {
    let idx = ch.skeleton.joint_index(body).ok_or_else(|| {
        Error::Validation(format!("character '{}' has no hand body '{body}'", ch.name))
    })?;
    let m = ch.markers.markers.iter().find(|m| m.body == body).ok_or_else(|| {
        Error::Validation(format!("character '{}' has no marker on hand body '{body}'", ch.name))
    })?;
    Ok((idx, m.offset))
}

/// Kinematic rendering of grasp windows: while a window is active the hand
/// marker should sit on the target's attach point.
#[derive(Debug, Clone, Default)]
pub struct GraspConstraints {
    attachments: Vec<Attachment>,
}

impl GraspConstraints {
    /// Constraints for the characters of `sim`, with attach points missing
    /// from a window taken from `reference` at the window's first frame.
    pub fn new(sim: &Scene, reference: &Scene) -> Result<Self> {
        let mut attachments = Vec::with_capacity(reference.grasp_windows.len());
        for w in &reference.grasp_windows {
            let EntityRef::Character(c) = w.hand.entity else {
                return Err(Error::Validation("grasp hand must be on a character".into()));
            };
            let ch = sim.characters.get(c).ok_or_else(|| {
                Error::Validation(format!("grasp names unknown character {c}"))
            })?;
            let (hand_body, hand_offset) = hand_marker(ch, &w.hand.body)?;
            let target_body = match w.target.entity {
                EntityRef::Character(t) => {
                    let tc = sim.characters.get(t).ok_or_else(|| {
                        Error::Validation(format!("grasp names unknown character {t}"))
                    })?;
                    Some(tc.skeleton.joint_index(&w.target.body).ok_or_else(|| {
                        Error::Validation(format!(
                            "character '{}' has no target body '{}'",
                            tc.name, w.target.body
                        ))
                    })?)
                }
                EntityRef::Object(_) => None,
            };
            let attach = match w.attach_offset {
                Some(a) => a,
                None => {
                    let rc = &reference.characters[c];
                    let (rb, ro) = hand_marker(rc, &w.hand.body)?;
                    let hand = reference.kinematics(w.start_frame, c).transform_point(rb, &ro);
                    let (tp, tq) = reference.body_transform(w.start_frame, &w.target)?;
                    tq.inverse() * (hand - tp)
                }
            };
            attachments.push(Attachment {
                window: w.clone(),
                character: c,
                hand_body,
                hand_offset,
                target_body,
                attach,
            });
        }
        Ok(GraspConstraints { attachments })
    }

    pub fn is_empty(&self) -> bool {
        self.attachments.is_empty()
    }

    pub fn any_active(&self, frame: usize) -> bool {
        self.attachments.iter().any(|a| a.window.is_active(frame))
    }

    /// Distances (m) between hand marker and attach point, one per window
    /// active at `frame`, in window order.
    pub fn residuals(&self, characters: &[Character], frame: usize, state: &Frame) -> Vec<f64> {
        let active: Vec<&Attachment> =
            self.attachments.iter().filter(|a| a.window.is_active(frame)).collect();
        if active.is_empty() {
            return Vec::new();
        }
        let kin: Vec<Kinematics> = characters
            .iter()
            .zip(&state.characters)
            .map(|(c, p)| fk_unchecked(&c.skeleton, p))
            .collect();
        active
            .iter()
            .map(|a| {
                let hand = kin[a.character].transform_point(a.hand_body, &a.hand_offset);
                let target = match (a.window.target.entity, a.target_body) {
                    (EntityRef::Character(t), Some(b)) => kin[t].transform_point(b, &a.attach),
                    (EntityRef::Object(o), _) => {
                        let t = &state.objects[o];
                        t.translation.vector + t.rotation * a.attach
                    }
                    _ => unreachable!("target body resolved on construction"),
                };
                (hand - target).norm()
            })
            .collect()
    }
}

/// Grasp residuals of `scene` at `frame`, with missing attach points taken
/// from `reference`.
pub fn apply_grasp_constraints(scene: &Scene, frame: usize, reference: &Scene) -> Result<Vec<f64>> {
    if frame >= scene.frame_count() {
        return Err(Error::Structure(format!(
            "frame {frame} is outside a clip of {} frames",
            scene.frame_count()
        )));
    }
    let g = GraspConstraints::new(scene, reference)?;
    Ok(g.residuals(&scene.characters, frame, &scene.frames[frame]))
}
