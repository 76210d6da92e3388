use nalgebra::Isometry3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{edge_keys, Connectivity, EdgeKey, EntityRef, InteractionGraph, Node, ResolvedMarker};
use crate::model::rotation::angular_velocity;
use crate::model::{fk_unchecked, Kinematics, Pose};
use crate::motion::{difference_stencil, validate_tpose, Character, Frame, Scene};
use crate::reward::{
    edge_position_errors, edge_weights, err_com, err_root, err_vel_graph, reward, RewardBreakdown,
    RewardParams,
};
use crate::{Quat, Vec3};

/// Root transform and its rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootState {
    pub position: Vec3,
    pub orientation: Quat,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
}

/// Which edge set scores an evaluated frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectivityMode {
    /// Reuse the reference clip's connectivity at the same frame.
    #[default]
    Reference,
    /// Re-tetrahedralize the evaluated markers every frame.
    PerFrame,
}

/// An evaluated frame plus the two frames of its difference stencil:
/// rates are `(after - before) * rate`.
#[derive(Debug, Clone, Copy)]
pub struct FrameWindow<'a> {
    pub current: &'a Frame,
    pub before: &'a Frame,
    pub after: &'a Frame,
    pub rate: f64,
}

impl<'a> FrameWindow<'a> {
    pub fn of_scene(scene: &'a Scene, frame: usize) -> Self {
        let (a, b, rate) = difference_stencil(frame, scene.frame_count(), scene.fps);
        FrameWindow {
            current: &scene.frames[frame],
            before: &scene.frames[a],
            after: &scene.frames[b],
            rate,
        }
    }
}

/// Root linear and angular velocity from a stencil pair.
pub fn pose_window_velocity(before: &Pose, after: &Pose, rate: f64) -> (Vec3, Vec3) {
    (
        (after.root_position - before.root_position) * rate,
        angular_velocity(&before.root_orientation, &after.root_orientation, 1.0 / rate),
    )
}

/// Reward of one evaluated frame: a breakdown per character (graph terms are
/// shared, root and COM terms are per character) plus edge diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameReward {
    pub frame: usize,
    pub characters: Vec<RewardBreakdown>,
    pub edges: Vec<EdgeKey>,
    pub weights: Vec<f64>,
    pub edge_errors: Vec<f64>,
    /// Cross edges whose length hit the denominator clamp.
    pub clamp_count: usize,
}

impl FrameReward {
    pub fn mean_reward(&self) -> f64 {
        self.characters.iter().map(|b| b.r).sum::<f64>() / self.characters.len() as f64
    }

    pub fn err_pos_graph(&self) -> f64 {
        self.characters[0].err_pos_graph
    }

    pub fn err_vel_graph(&self) -> f64 {
        self.characters[0].err_vel_graph
    }
}

/// Marker bookkeeping for one side (evaluated or reference) of the model.
#[derive(Debug, Clone)]
struct Layout {
    characters: Vec<Character>,
    entities: Vec<EntityRef>,
    /// Per entity, the mapped markers in node order.
    markers: Vec<Vec<ResolvedMarker>>,
}

struct EntityStates {
    nodes: Vec<Node>,
    roots: Vec<RootState>,
    com: Vec<(Vec3, Vec3)>,
}

impl Layout {
    fn states(&self, w: &FrameWindow) -> EntityStates {
        let mut nodes = Vec::new();
        let mut roots = Vec::with_capacity(self.characters.len());
        let mut com = Vec::with_capacity(self.characters.len());
        for (e, entity) in self.entities.iter().enumerate() {
            let markers = &self.markers[e];
            match *entity {
                EntityRef::Character(c) => {
                    let sk = &self.characters[c].skeleton;
                    let (pc, pa, pb) = (
                        &w.current.characters[c],
                        &w.before.characters[c],
                        &w.after.characters[c],
                    );
                    let kc = fk_unchecked(sk, pc);
                    let ka = fk_unchecked(sk, pa);
                    let kb = fk_unchecked(sk, pb);
                    let at = |k: &Kinematics, m: &ResolvedMarker| k.transform_point(m.body, &m.offset);
                    for (i, m) in markers.iter().enumerate() {
                        nodes.push(Node {
                            entity: *entity,
                            marker: i,
                            p: at(&kc, m),
                            v: (at(&kb, m) - at(&ka, m)) * w.rate,
                        });
                    }
                    let (linear_velocity, angular_velocity) = pose_window_velocity(pa, pb, w.rate);
                    roots.push(RootState {
                        position: pc.root_position,
                        orientation: pc.root_orientation,
                        linear_velocity,
                        angular_velocity,
                    });
                    com.push((
                        kc.center_of_mass(sk),
                        (kb.center_of_mass(sk) - ka.center_of_mass(sk)) * w.rate,
                    ));
                }
                EntityRef::Object(o) => {
                    let at = |t: &Isometry3<f64>, m: &ResolvedMarker| t.translation.vector + t.rotation * m.offset;
                    let (tc, ta, tb) = (&w.current.objects[o], &w.before.objects[o], &w.after.objects[o]);
                    for (i, m) in markers.iter().enumerate() {
                        nodes.push(Node {
                            entity: *entity,
                            marker: i,
                            p: at(tc, m),
                            v: (at(tb, m) - at(ta, m)) * w.rate,
                        });
                    }
                }
            }
        }
        EntityStates { nodes, roots, com }
    }
}

/// Scores evaluated motion against a fixed reference clip.
///
/// Nodes are the reference markers that also exist (by name) on the
/// evaluated entity, so characters with different marker sets (e.g. a robot
/// standing in for a human) are compared on their shared markers.
#[derive(Debug, Clone)]
pub struct RewardModel {
    params: RewardParams,
    mode: ConnectivityMode,
    sim: Layout,
    reference: Layout,
    marker_names: Vec<(EntityRef, String)>,
    connectivity: Connectivity,
    ref_nodes: Vec<Vec<Node>>,
    ref_roots: Vec<Vec<RootState>>,
    ref_com: Vec<Vec<(Vec3, Vec3)>>,
    tpose_sim: Vec<Vec3>,
    tpose_ref: Vec<Vec3>,
    frame_count: usize,
    fps: f64,
}

impl RewardModel {
    /// `sim` supplies the evaluated entities (skeletons, markers, frame-0
    /// T-pose); its later frames are not used.
    pub fn new(reference: &Scene, sim: &Scene, params: RewardParams) -> Result<Self> {
        params.validate()?;
        reference.validate()?;
        sim.validate()?;
        if reference.frame_count() < 2 {
            return Err(Error::Validation("reference clip needs at least 2 frames".into()));
        }
        if reference.characters.len() != sim.characters.len()
            || reference.objects.len() != sim.objects.len()
        {
            return Err(Error::Structure(format!(
                "reference has {} characters and {} objects, evaluated scene has {} and {}",
                reference.characters.len(),
                reference.objects.len(),
                sim.characters.len(),
                sim.objects.len()
            )));
        }
        validate_tpose(reference)?;
        validate_tpose(sim)?;

        let entities = reference.entities();
        let mut sim_markers = Vec::new();
        let mut ref_markers = Vec::new();
        let mut marker_names = Vec::new();
        for &e in &entities {
            let ref_cfg = reference.marker_config(e);
            let sim_cfg = sim.marker_config(e);
            let ref_resolved = reference.resolved_markers(e)?;
            let sim_resolved = sim.resolved_markers(e)?;
            let mut s = Vec::new();
            let mut r = Vec::new();
            for (ri, m) in ref_cfg.markers.iter().enumerate() {
                if let Some(si) = sim_cfg.index_of(&m.name) {
                    s.push(sim_resolved[si]);
                    r.push(ref_resolved[ri]);
                    marker_names.push((e, m.name.clone()));
                }
            }
            if s.is_empty() {
                return Err(Error::Validation(format!(
                    "{} '{}' shares no marker names with the reference",
                    e,
                    sim.entity_name(e)
                )));
            }
            sim_markers.push(s);
            ref_markers.push(r);
        }
        let sim_layout = Layout {
            characters: sim.characters.clone(),
            entities: entities.clone(),
            markers: sim_markers,
        };
        let ref_layout = Layout {
            characters: reference.characters.clone(),
            entities,
            markers: ref_markers,
        };

        let ref_states: Vec<EntityStates> = (0..reference.frame_count())
            .into_par_iter()
            .map(|t| ref_layout.states(&FrameWindow::of_scene(reference, t)))
            .collect();
        let tpose_ref = ref_states[0].nodes.iter().map(|n| n.p).collect();
        let tpose_sim = sim_layout
            .states(&FrameWindow {
                current: &sim.frames[0],
                before: &sim.frames[0],
                after: &sim.frames[0],
                rate: 0.0,
            })
            .nodes
            .iter()
            .map(|n| n.p)
            .collect();
        let node_frames: Vec<Vec<Node>> = ref_states.iter().map(|s| s.nodes.clone()).collect();
        let connectivity = Connectivity::from_frames(&node_frames)?;
        let mut ref_nodes = Vec::with_capacity(ref_states.len());
        let mut ref_roots = Vec::with_capacity(ref_states.len());
        let mut ref_com = Vec::with_capacity(ref_states.len());
        for s in ref_states {
            ref_nodes.push(s.nodes);
            ref_roots.push(s.roots);
            ref_com.push(s.com);
        }
        Ok(RewardModel {
            params,
            mode: ConnectivityMode::Reference,
            sim: sim_layout,
            reference: ref_layout,
            marker_names,
            connectivity,
            ref_nodes,
            ref_roots,
            ref_com,
            tpose_sim,
            tpose_ref,
            frame_count: reference.frame_count(),
            fps: reference.fps,
        })
    }

    /// Same model with different reward parameters (connectivity is kept).
    pub fn with_params(&self, params: RewardParams) -> Result<Self> {
        params.validate()?;
        let mut m = self.clone();
        m.params = params;
        Ok(m)
    }

    pub fn with_connectivity_mode(mut self, mode: ConnectivityMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn params(&self) -> &RewardParams {
        &self.params
    }

    pub fn connectivity(&self) -> &Connectivity {
        &self.connectivity
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Owner and name of every graph node, in node order.
    pub fn node_names(&self) -> &[(EntityRef, String)] {
        &self.marker_names
    }

    /// Evaluated characters (skeletons, markers).
    pub fn sim_characters(&self) -> &[Character] {
        &self.sim.characters
    }

    pub fn reference_characters(&self) -> &[Character] {
        &self.reference.characters
    }

    pub fn reference_nodes(&self, frame: usize) -> &[Node] {
        &self.ref_nodes[frame]
    }

    pub fn sim_nodes(&self, window: &FrameWindow) -> Vec<Node> {
        self.sim.states(window).nodes
    }

    fn keys(&self, frame: usize, sim_nodes: &[Node]) -> Result<Vec<EdgeKey>> {
        match self.mode {
            ConnectivityMode::Reference => Ok(self.connectivity.frame(frame).to_vec()),
            ConnectivityMode::PerFrame => edge_keys(sim_nodes),
        }
    }

    /// Evaluated and reference graphs of `frame` under the model's
    /// connectivity.
    pub fn graphs(
        &self,
        frame: usize,
        window: &FrameWindow,
    ) -> Result<(InteractionGraph, InteractionGraph)> {
        self.check_frame(frame, window)?;
        let nodes = self.sim_nodes(window);
        let keys = self.keys(frame, &nodes)?;
        Ok((
            InteractionGraph::with_connectivity(nodes, &keys)?,
            InteractionGraph::with_connectivity(self.ref_nodes[frame].clone(), &keys)?,
        ))
    }

    fn check_frame(&self, frame: usize, window: &FrameWindow) -> Result<()> {
        if frame >= self.frame_count {
            return Err(Error::Structure(format!(
                "frame {frame} is outside a reference clip of {} frames",
                self.frame_count
            )));
        }
        let objects = self.sim.entities.len() - self.sim.characters.len();
        for f in [window.current, window.before, window.after] {
            if f.characters.len() != self.sim.characters.len() || f.objects.len() != objects {
                return Err(Error::Structure("evaluated frame has the wrong entity count".into()));
            }
            for (c, pose) in f.characters.iter().enumerate() {
                if pose.joint_rotations.len() != self.sim.characters[c].skeleton.rotation_count() {
                    return Err(Error::Structure(format!(
                        "evaluated pose of character '{}' has {} joint rotations, expected {}",
                        self.sim.characters[c].name,
                        pose.joint_rotations.len(),
                        self.sim.characters[c].skeleton.rotation_count()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reward of one evaluated frame.
    pub fn evaluate(&self, frame: usize, window: &FrameWindow) -> Result<FrameReward> {
        self.check_frame(frame, window)?;
        let states = self.sim.states(window);
        let keys = self.keys(frame, &states.nodes)?;
        let sim_g = InteractionGraph::with_connectivity(states.nodes, &keys)?;
        let ref_g = InteractionGraph::with_connectivity(self.ref_nodes[frame].clone(), &keys)?;
        let weights = edge_weights(&sim_g, &ref_g, &self.params)?;
        let (edge_errors, clamp_count) =
            edge_position_errors(&sim_g, &ref_g, &self.tpose_sim, &self.tpose_ref)?;
        let e_pos: f64 = weights.iter().zip(&edge_errors).map(|(w, e)| w * e).sum();
        let e_vel = err_vel_graph(&sim_g, &ref_g, &weights)?;

        let characters = self
            .sim
            .characters
            .iter()
            .enumerate()
            .map(|(c, ch)| {
                let (e_root, e_com) = if ch.fixed_base {
                    (0.0, 0.0)
                } else {
                    let (cs, vs) = &states.com[c];
                    let (cr, vr) = &self.ref_com[frame][c];
                    (
                        err_root(&states.roots[c], &self.ref_roots[frame][c], &self.params),
                        err_com(cs, vs, cr, vr, &self.params),
                    )
                };
                reward(e_pos, e_vel, e_root, e_com, &self.params)
            })
            .collect::<Vec<_>>();
        if characters.iter().any(|b| !b.r.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite reward at frame {frame} (err_pos_graph {e_pos}, err_vel_graph {e_vel})"
            )));
        }
        Ok(FrameReward {
            frame,
            characters,
            edges: keys,
            weights,
            edge_errors,
            clamp_count,
        })
    }

    /// Every frame of an evaluated clip (frames scored in parallel).
    pub fn evaluate_scene(&self, sim: &Scene) -> Result<Vec<FrameReward>> {
        if sim.frame_count() != self.frame_count {
            return Err(Error::Structure(format!(
                "evaluated clip has {} frames, reference has {}",
                sim.frame_count(),
                self.frame_count
            )));
        }
        (0..self.frame_count)
            .into_par_iter()
            .map(|t| self.evaluate(t, &FrameWindow::of_scene(sim, t)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn identity_scores_one() {
        let scene = synthetic::high_five_scene();
        let model = RewardModel::new(&scene, &scene, RewardParams::default()).unwrap();
        for fr in model.evaluate_scene(&scene).unwrap() {
            for b in &fr.characters {
                assert_eq!(b.r, 1.0, "frame {}", fr.frame);
            }
            assert!((fr.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn robot_maps_shared_markers() {
        let mut reference = synthetic::two_character_idle_scene(4);
        reference.characters.truncate(1);
        for f in &mut reference.frames {
            f.characters.truncate(1);
        }
        let mut sim = reference.clone();
        sim.characters[0].skeleton = crate::presets::robot_skeleton();
        sim.characters[0].markers = crate::presets::robot_markers();
        let robot_pose = sim.characters[0]
            .skeleton
            .rest_pose(Vec3::new(0.0, crate::presets::ROBOT_ROOT_HEIGHT, -0.4));
        for f in &mut sim.frames {
            f.characters[0] = robot_pose.clone();
        }
        let model = RewardModel::new(&reference, &sim, RewardParams::default()).unwrap();
        assert_eq!(model.node_names().len(), 8);
        let fr = model.evaluate(2, &FrameWindow::of_scene(&sim, 2)).unwrap();
        assert!(fr.mean_reward() > 0.0 && fr.mean_reward() < 1.0);
    }

    #[test]
    fn wrong_frame_count_is_structural() {
        let scene = synthetic::two_character_idle_scene(5);
        let model = RewardModel::new(&scene, &scene, RewardParams::default()).unwrap();
        let short = synthetic::two_character_idle_scene(4);
        assert!(matches!(model.evaluate_scene(&short), Err(Error::Structure(_))));
    }
}
