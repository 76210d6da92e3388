//! Measurements used to compare retargeting runs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{EdgeClass, EntityRef};
use crate::motion::Scene;
use crate::reward::{FrameReward, FrameWindow, RewardModel};

/// Reference cross-character node distance under which a frame counts as a
/// contact frame, m.
pub const CONTACT_DISTANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Limb {
    LeftArm,
    RightArm,
    LeftLeg,
    RightLeg,
}

/// Limb of a humanoid marker from its name (`l_elbow`, `r_foot`, ...).
pub fn limb_of(marker: &str) -> Option<Limb> {
    let (side, joint) = marker.split_once('_')?;
    let arm = matches!(joint, "shoulder" | "elbow" | "wrist" | "hand");
    let leg = matches!(joint, "hip" | "knee" | "ankle" | "foot" | "toe");
    match (side, arm, leg) {
        ("l", true, _) => Some(Limb::LeftArm),
        ("r", true, _) => Some(Limb::RightArm),
        ("l", _, true) => Some(Limb::LeftLeg),
        ("r", _, true) => Some(Limb::RightLeg),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactAnalysis {
    /// Frames whose closest reference cross-character node pair is within
    /// the threshold.
    pub frames: Vec<usize>,
    /// Closest cross-character node pair over the whole reference clip
    /// (model node indices).
    pub pair: (usize, usize),
    /// Per frame, the closest reference cross-character distance.
    pub min_distance: Vec<f64>,
}

/// Contact frames and the contact node pair of the model's reference clip.
pub fn contact_analysis(model: &RewardModel, threshold: f64) -> Result<ContactAnalysis> {
    let mut frames = Vec::new();
    let mut min_distance = Vec::with_capacity(model.frame_count());
    let mut best: Option<(f64, (usize, usize))> = None;
    for t in 0..model.frame_count() {
        let nodes = model.reference_nodes(t);
        let mut frame_min = f64::INFINITY;
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                let (EntityRef::Character(a), EntityRef::Character(b)) = (nodes[i].entity, nodes[j].entity)
                else {
                    continue;
                };
                if a == b {
                    continue;
                }
                let d = (nodes[i].p - nodes[j].p).norm();
                frame_min = frame_min.min(d);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, (i, j)));
                }
            }
        }
        if frame_min < threshold {
            frames.push(t);
        }
        min_distance.push(frame_min);
    }
    let (_, pair) = best.ok_or_else(|| {
        Error::Validation("contact analysis needs at least two characters".into())
    })?;
    Ok(ContactAnalysis {
        frames,
        pair,
        min_distance,
    })
}

/// Distance between two model nodes in an evaluated clip.
pub fn pair_distance(model: &RewardModel, scene: &Scene, frame: usize, pair: (usize, usize)) -> f64 {
    let nodes = model.sim_nodes(&FrameWindow::of_scene(scene, frame));
    (nodes[pair.0].p - nodes[pair.1].p).norm()
}

pub fn mean_pair_distance(
    model: &RewardModel,
    scene: &Scene,
    frames: &[usize],
    pair: (usize, usize),
) -> f64 {
    frames.iter().map(|&t| pair_distance(model, scene, t, pair)).sum::<f64>() / frames.len() as f64
}

/// Mean over `frames` of the weighted interaction-edge error
/// `Σ w_ij err_cross,ij` (cross and character-object edges).
pub fn mean_contact_cross_error(rewards: &[FrameReward], frames: &[usize]) -> f64 {
    let per_frame = |fr: &FrameReward| -> f64 {
        fr.edges
            .iter()
            .zip(fr.weights.iter().zip(&fr.edge_errors))
            .filter(|(k, _)| k.class.is_interaction())
            .map(|(_, (w, e))| w * e)
            .sum()
    };
    frames.iter().map(|&t| per_frame(&rewards[t])).sum::<f64>() / frames.len() as f64
}

/// Mean unweighted `err_self` over self edges that touch a limb not involved
/// in the contact and no contact limb, averaged over frames that have such
/// edges.
pub fn non_contact_limb_self_error(
    model: &RewardModel,
    rewards: &[FrameReward],
    pair: (usize, usize),
) -> f64 {
    let names = model.node_names();
    let limb = |i: usize| limb_of(&names[i].1).map(|l| (names[i].0, l));
    let contact: Vec<(EntityRef, Limb)> = [pair.0, pair.1].into_iter().filter_map(limb).collect();
    let status = |i: usize| match limb(i) {
        Some(l) if contact.contains(&l) => (true, false),
        Some(_) => (false, true),
        None => (false, false),
    };
    let mut total = 0.0;
    let mut counted = 0;
    for fr in rewards {
        let errs: Vec<f64> = fr
            .edges
            .iter()
            .zip(&fr.edge_errors)
            .filter(|(k, _)| matches!(k.class, EdgeClass::SelfConnection(_)))
            .filter(|(k, _)| {
                let (ci, ni) = status(k.i);
                let (cj, nj) = status(k.j);
                !ci && !cj && (ni || nj)
            })
            .map(|(_, e)| *e)
            .collect();
        if !errs.is_empty() {
            total += errs.iter().sum::<f64>() / errs.len() as f64;
            counted += 1;
        }
    }
    if counted == 0 {
        0.0
    } else {
        total / counted as f64
    }
}

/// Headline numbers of one evaluated clip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mean_reward: f64,
    pub contact_frames: usize,
    pub contact_cross_error: f64,
    pub hand_distance: f64,
    pub hand_distance_max: f64,
    pub non_contact_self_error: f64,
}

/// Scores `scene` with `model` (normally default parameters) over the
/// contact frames of `contact`.
pub fn summarize(model: &RewardModel, scene: &Scene, contact: &ContactAnalysis) -> Result<RunSummary> {
    let rewards = model.evaluate_scene(scene)?;
    let mean_reward =
        rewards.iter().map(FrameReward::mean_reward).sum::<f64>() / rewards.len() as f64;
    let distances: Vec<f64> =
        contact.frames.iter().map(|&t| pair_distance(model, scene, t, contact.pair)).collect();
    let n = distances.len().max(1) as f64;
    Ok(RunSummary {
        mean_reward,
        contact_frames: contact.frames.len(),
        contact_cross_error: if contact.frames.is_empty() {
            0.0
        } else {
            mean_contact_cross_error(&rewards, &contact.frames)
        },
        hand_distance: distances.iter().sum::<f64>() / n,
        hand_distance_max: distances.iter().copied().fold(0.0, f64::max),
        non_contact_self_error: non_contact_limb_self_error(model, &rewards, contact.pair),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::RewardParams;
    use crate::synthetic;

    #[test]
    fn limbs_by_name() {
        assert_eq!(limb_of("l_hand"), Some(Limb::LeftArm));
        assert_eq!(limb_of("r_knee"), Some(Limb::RightLeg));
        assert_eq!(limb_of("torso"), None);
        assert_eq!(limb_of("head"), None);
    }

    #[test]
    fn high_five_contact_is_the_hands() {
        let s = synthetic::high_five_scene();
        let model = RewardModel::new(&s, &s, RewardParams::default()).unwrap();
        let c = contact_analysis(&model, CONTACT_DISTANCE).unwrap();
        let names = model.node_names();
        assert_eq!(names[c.pair.0].1, "r_hand");
        assert_eq!(names[c.pair.1].1, "l_hand");
        assert!(!c.frames.is_empty());
        assert!(c.frames.windows(2).all(|w| w[1] == w[0] + 1));
        assert!(c.frames.contains(&35) && c.frames.contains(&55));
        assert!(!c.frames.contains(&10) && !c.frames.contains(&80));
        let summary = summarize(&model, &s, &c).unwrap();
        assert_eq!(summary.mean_reward, 1.0);
        assert_eq!(summary.contact_cross_error, 0.0);
        assert!((summary.hand_distance - synthetic::HIGH_FIVE_GAP).abs() < 0.03);
    }
}
