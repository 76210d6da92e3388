//! Interaction Graphs: marker nodes, Delaunay connectivity and classified,
//! feature-bearing edges.

mod delaunay;
mod markers;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::motion::{difference_stencil, Scene};
use crate::Vec3;

pub use delaunay::{
    insphere, orient3d, perturb, perturbation, tetrahedra_edges, tetrahedralize,
    PERTURBATION_SCALE,
};
pub use markers::{EntityRef, Marker, MarkerConfig, ResolvedMarker};

/// A marker sample: `n_i = (p_i, v_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub entity: EntityRef,
    /// Index of the marker in its entity's config.
    pub marker: usize,
    pub p: Vec3,
    pub v: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeClass {
    /// Both endpoints on the same character.
    SelfConnection(usize),
    /// Endpoints on two different characters (or two different objects).
    Cross,
    CharacterObject,
}

impl EdgeClass {
    pub fn label(&self) -> &'static str {
        match self {
            EdgeClass::SelfConnection(_) => "self",
            EdgeClass::Cross => "cross",
            EdgeClass::CharacterObject => "character_object",
        }
    }

    /// Edges scored with the length-normalized cross error.
    pub fn is_interaction(&self) -> bool {
        !matches!(self, EdgeClass::SelfConnection(_))
    }
}

/// Class of an edge between markers of `a` and `b`; `None` for edges inside
/// one rigid object, which are dropped.
pub fn classify(a: EntityRef, b: EntityRef) -> Option<EdgeClass> {
    match (a, b) {
        (EntityRef::Character(x), EntityRef::Character(y)) if x == y => {
            Some(EdgeClass::SelfConnection(x))
        }
        (EntityRef::Character(_), EntityRef::Character(_)) => Some(EdgeClass::Cross),
        (EntityRef::Object(x), EntityRef::Object(y)) if x == y => None,
        (EntityRef::Object(_), EntityRef::Object(_)) => Some(EdgeClass::Cross),
        _ => Some(EdgeClass::CharacterObject),
    }
}

/// Connectivity entry: node indices `i < j` and class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    pub i: usize,
    pub j: usize,
    pub class: EdgeClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub class: EdgeClass,
    /// `p_j - p_i`
    pub p: Vec3,
    /// `v_j - v_i`
    pub v: Vec3,
}

impl Edge {
    pub fn key(&self) -> EdgeKey {
        EdgeKey {
            i: self.i,
            j: self.j,
            class: self.class,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl InteractionGraph {
    /// Graph over `nodes` with the given connectivity; features are computed
    /// from the nodes.
    pub fn with_connectivity(nodes: Vec<Node>, keys: &[EdgeKey]) -> Result<Self> {
        let mut edges = Vec::with_capacity(keys.len());
        for k in keys {
            if k.i >= k.j || k.j >= nodes.len() {
                return Err(Error::Structure(format!(
                    "edge ({}, {}) does not fit a graph of {} nodes",
                    k.i,
                    k.j,
                    nodes.len()
                )));
            }
            edges.push(Edge {
                i: k.i,
                j: k.j,
                class: k.class,
                p: nodes[k.j].p - nodes[k.i].p,
                v: nodes[k.j].v - nodes[k.i].v,
            });
        }
        Ok(InteractionGraph { nodes, edges })
    }

    /// Delaunay connectivity of `nodes` themselves.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let keys = edge_keys(&nodes)?;
        Self::with_connectivity(nodes, &keys)
    }

    pub fn keys(&self) -> Vec<EdgeKey> {
        self.edges.iter().map(Edge::key).collect()
    }
}

/// Classified, sorted Delaunay edges of a node set.
pub fn edge_keys(nodes: &[Node]) -> Result<Vec<EdgeKey>> {
    let points: Vec<Vec3> = nodes.iter().map(|n| n.p).collect();
    let tets = tetrahedralize(&points)?;
    Ok(tetrahedra_edges(&tets)
        .into_iter()
        .filter_map(|(i, j)| {
            classify(nodes[i].entity, nodes[j].entity).map(|class| EdgeKey { i, j, class })
        })
        .collect())
}

/// Nodes of one entity at `frame`; velocities by the clip's central-difference
/// stencil.
pub fn place_markers(scene: &Scene, frame: usize, entity: EntityRef) -> Result<Vec<Node>> {
    if frame >= scene.frame_count() {
        return Err(Error::Structure(format!(
            "frame {frame} is outside a clip of {} frames",
            scene.frame_count()
        )));
    }
    if scene.frame_count() < 2 {
        return Err(Error::Validation("marker velocities need at least 2 frames".into()));
    }
    let resolved = scene.resolved_markers(entity)?;
    let (a, b, scale) = difference_stencil(frame, scene.frame_count(), scene.fps);
    let p = scene.entity_marker_positions(frame, entity, &resolved);
    let pa = scene.entity_marker_positions(a, entity, &resolved);
    let pb = scene.entity_marker_positions(b, entity, &resolved);
    Ok((0..p.len())
        .map(|m| Node {
            entity,
            marker: m,
            p: p[m],
            v: (pb[m] - pa[m]) * scale,
        })
        .collect())
}

/// Nodes of every entity, in scene marker order.
pub fn scene_nodes(scene: &Scene, frame: usize) -> Result<Vec<Node>> {
    let mut nodes = Vec::new();
    for e in scene.entities() {
        nodes.extend(place_markers(scene, frame, e)?);
    }
    Ok(nodes)
}

/// Interaction Graph of one frame with its own Delaunay connectivity.
pub fn build_graph(scene: &Scene, frame: usize) -> Result<InteractionGraph> {
    InteractionGraph::from_nodes(scene_nodes(scene, frame)?)
}

/// Per-frame edge sets of a reference clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Connectivity {
    pub frames: Vec<Vec<EdgeKey>>,
}

impl Connectivity {
    /// Connectivity from per-frame node sets (frames evaluated in parallel).
    pub fn from_frames(frames: &[Vec<Node>]) -> Result<Self> {
        let frames = frames
            .par_iter()
            .enumerate()
            .map(|(f, nodes)| {
                edge_keys(nodes).map_err(|e| match e {
                    Error::Degenerate(m) => Error::Degenerate(format!("frame {f}: {m}")),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Connectivity { frames })
    }

    pub fn frame(&self, frame: usize) -> &[EdgeKey] {
        &self.frames[frame]
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

/// Connectivity of every frame of `scene`, computed once.
pub fn reference_connectivity(scene: &Scene) -> Result<Connectivity> {
    let frames = (0..scene.frame_count())
        .map(|f| scene_nodes(scene, f))
        .collect::<Result<Vec<_>>>()?;
    Connectivity::from_frames(&frames)
}
