//! Interaction-preserving reward: edge weighting, positional and velocity
//! graph similarity, root and center-of-mass tracking, and a joint-based
//! baseline for comparison.

mod joint;
mod model;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeClass, InteractionGraph};
use crate::model::rotation::rotation_log;
use crate::{Quat, Vec3};

pub use joint::{joint_based_log_reward, joint_based_reward, JointRewardParams, PoseVelocity};
pub use model::{
    pose_window_velocity, ConnectivityMode, FrameReward, FrameWindow, RewardModel, RootState,
};

/// Lower clamp on edge lengths in the cross-edge error.
pub const CROSS_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightingMode {
    /// Softmax over reference edge lengths only.
    #[serde(rename = "ref")]
    RefOnly,
    /// Equal mix of the simulated and reference softmaxes.
    #[serde(rename = "bidir")]
    Bidirectional,
}

impl std::str::FromStr for WeightingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ref" => Ok(WeightingMode::RefOnly),
            "bidir" => Ok(WeightingMode::Bidirectional),
            other => Err(Error::Validation(format!(
                "unknown weighting mode '{other}' (expected 'ref' or 'bidir')"
            ))),
        }
    }
}

/// Sensitivities and weights of every reward term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    /// Edge weighting sensitivity, 1/m.
    pub k_w: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub w_p: f64,
    pub w_q: f64,
    pub w_v: f64,
    pub w_omega: f64,
    pub w_com_x: f64,
    pub w_com_xdot: f64,
    pub weighting_mode: WeightingMode,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            k_w: 5.0,
            k1: 2.0,
            k2: 2.0,
            k3: 5.0,
            k4: 5.0,
            w_p: 1.0,
            w_q: 1.0,
            w_v: 1.0,
            w_omega: 1.0,
            w_com_x: 1.0,
            w_com_xdot: 1.0,
            weighting_mode: WeightingMode::Bidirectional,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("k_w", self.k_w),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
            ("w_p", self.w_p),
            ("w_q", self.w_q),
            ("w_v", self.w_v),
            ("w_omega", self.w_omega),
            ("w_com_x", self.w_com_x),
            ("w_com_xdot", self.w_com_xdot),
        ];
        for (name, value) in named {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::Validation(format!(
                    "reward parameter {name} must be finite and >= 0, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Errors and sub-rewards for one character at one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub err_pos_graph: f64,
    pub err_vel_graph: f64,
    pub err_root: f64,
    pub err_com: f64,
    pub r_pos_graph: f64,
    pub r_vel_graph: f64,
    pub r_root: f64,
    pub r_com: f64,
    pub r: f64,
}

impl RewardBreakdown {
    /// `ln r`, computed from the errors so it stays finite when `r` underflows.
    pub fn log_reward(&self, params: &RewardParams) -> f64 {
        -(params.k1 * self.err_pos_graph
            + params.k2 * self.err_vel_graph
            + params.k3 * self.err_root
            + params.k4 * self.err_com)
    }
}

/// `softmax(-k * l)` over `lengths`, shifted by the minimum for stability.
pub fn softmax_neg(lengths: &[f64], k: f64) -> Vec<f64> {
    let min = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = lengths.iter().map(|l| (-k * (l - min)).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|x| x / sum).collect()
}

/// Per-edge weights; both graphs must share connectivity.
pub fn edge_weights(
    sim: &InteractionGraph,
    reference: &InteractionGraph,
    params: &RewardParams,
) -> Result<Vec<f64>> {
    check_same_connectivity(sim, reference)?;
    if reference.edges.is_empty() {
        return Err(Error::Structure("edge weighting needs at least one edge".into()));
    }
    let ref_len: Vec<f64> = reference.edges.iter().map(|e| e.p.norm()).collect();
    let w_ref = softmax_neg(&ref_len, params.k_w);
    Ok(match params.weighting_mode {
        WeightingMode::RefOnly => w_ref,
        WeightingMode::Bidirectional => {
            let sim_len: Vec<f64> = sim.edges.iter().map(|e| e.p.norm()).collect();
            let w_sim = softmax_neg(&sim_len, params.k_w);
            w_sim.iter().zip(&w_ref).map(|(a, b)| 0.5 * a + 0.5 * b).collect()
        }
    })
}

fn check_same_connectivity(sim: &InteractionGraph, reference: &InteractionGraph) -> Result<()> {
    let same = sim.edges.len() == reference.edges.len()
        && sim
            .edges
            .iter()
            .zip(&reference.edges)
            .all(|(a, b)| a.i == b.i && a.j == b.j && a.class == b.class);
    if same {
        Ok(())
    } else {
        Err(Error::Structure(
            "simulated and reference graphs have different connectivity".into(),
        ))
    }
}

/// Difference of T-pose-normalized deviations of a self edge.
pub fn err_self_edge(p_sim: &Vec3, p_sim_t: &Vec3, p_ref: &Vec3, p_ref_t: &Vec3) -> f64 {
    ((p_sim - p_sim_t) / p_sim_t.norm() - (p_ref - p_ref_t) / p_ref_t.norm()).norm()
}

/// Length-normalized, symmetric edge difference.
pub fn err_cross_edge(p_sim: &Vec3, p_ref: &Vec3) -> f64 {
    err_cross_edge_clamped(p_sim, p_ref).0
}

/// Cross-edge error plus whether a denominator was clamped.
pub fn err_cross_edge_clamped(p_sim: &Vec3, p_ref: &Vec3) -> (f64, bool) {
    let d = (p_sim - p_ref).norm();
    let ls = p_sim.norm();
    let lr = p_ref.norm();
    let clamped = ls < CROSS_EPS || lr < CROSS_EPS;
    (0.5 * d / ls.max(CROSS_EPS) + 0.5 * d / lr.max(CROSS_EPS), clamped)
}

/// Per-edge positional errors: cross error for interaction edges, self error
/// (normalized by the T-pose edge) for self edges. `tpose_*[n]` is node `n`'s
/// frame-0 position. Returns the errors and the clamp count.
pub fn edge_position_errors(
    sim: &InteractionGraph,
    reference: &InteractionGraph,
    tpose_sim: &[Vec3],
    tpose_ref: &[Vec3],
) -> Result<(Vec<f64>, usize)> {
    check_same_connectivity(sim, reference)?;
    let mut clamps = 0;
    let errors = sim
        .edges
        .iter()
        .zip(&reference.edges)
        .map(|(s, r)| match s.class {
            EdgeClass::SelfConnection(_) => {
                let ts = tpose_sim[s.j] - tpose_sim[s.i];
                let tr = tpose_ref[r.j] - tpose_ref[r.i];
                err_self_edge(&s.p, &ts, &r.p, &tr)
            }
            _ => {
                let (e, clamped) = err_cross_edge_clamped(&s.p, &r.p);
                clamps += clamped as usize;
                e
            }
        })
        .collect();
    Ok((errors, clamps))
}

/// `Σ_cross w·err_cross + Σ_self w·err_self`.
pub fn err_pos_graph(
    sim: &InteractionGraph,
    reference: &InteractionGraph,
    tpose_sim: &[Vec3],
    tpose_ref: &[Vec3],
    weights: &[f64],
) -> Result<f64> {
    let (errors, _) = edge_position_errors(sim, reference, tpose_sim, tpose_ref)?;
    Ok(weighted_sum(weights, &errors))
}

/// `Σ w·‖v_sim − v_ref‖` over all edges.
pub fn err_vel_graph(
    sim: &InteractionGraph,
    reference: &InteractionGraph,
    weights: &[f64],
) -> Result<f64> {
    check_same_connectivity(sim, reference)?;
    let errors: Vec<f64> = sim
        .edges
        .iter()
        .zip(&reference.edges)
        .map(|(s, r)| (s.v - r.v).norm())
        .collect();
    Ok(weighted_sum(weights, &errors))
}

fn weighted_sum(weights: &[f64], errors: &[f64]) -> f64 {
    weights.iter().zip(errors).map(|(w, e)| w * e).sum()
}

fn planar(v: &Vec3) -> Vec3 {
    Vec3::new(v.x, 0.0, v.z)
}

/// Root tracking error with height components dropped.
pub fn err_root(sim: &RootState, reference: &RootState, params: &RewardParams) -> f64 {
    let dp = planar(&(sim.position - reference.position)).norm_squared();
    let dq = rotation_log(&(sim.orientation.inverse() * reference.orientation)).norm_squared();
    let dv = planar(&(sim.linear_velocity - reference.linear_velocity)).norm_squared();
    let dw = (sim.angular_velocity - reference.angular_velocity).norm_squared();
    params.w_p * dp + params.w_q * dq + params.w_v * dv + params.w_omega * dw
}

/// Center-of-mass tracking error with height components dropped.
pub fn err_com(
    com_sim: &Vec3,
    comvel_sim: &Vec3,
    com_ref: &Vec3,
    comvel_ref: &Vec3,
    params: &RewardParams,
) -> f64 {
    params.w_com_x * planar(&(com_sim - com_ref)).norm()
        + params.w_com_xdot * planar(&(comvel_sim - comvel_ref)).norm()
}

/// Composite reward `r = r_pos · r_vel · r_root · r_com`, `r_i = exp(−k_i·err_i)`.
pub fn reward(
    err_pos_graph: f64,
    err_vel_graph: f64,
    err_root: f64,
    err_com: f64,
    params: &RewardParams,
) -> RewardBreakdown {
    let r_pos_graph = (-params.k1 * err_pos_graph).exp();
    let r_vel_graph = (-params.k2 * err_vel_graph).exp();
    let r_root = (-params.k3 * err_root).exp();
    let r_com = (-params.k4 * err_com).exp();
    RewardBreakdown {
        err_pos_graph,
        err_vel_graph,
        err_root,
        err_com,
        r_pos_graph,
        r_vel_graph,
        r_root,
        r_com,
        r: r_pos_graph * r_vel_graph * r_root * r_com,
    }
}

/// Full rotation angle between two orientations.
pub fn orientation_error(a: &Quat, b: &Quat) -> f64 {
    rotation_log(&(a.inverse() * b)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, EntityRef, Node};
    use std::f64::consts::{FRAC_PI_2, LN_2};

    fn graph(edges: &[(Vec3, Vec3, EdgeClass)]) -> InteractionGraph {
        let node = |p| Node {
            entity: EntityRef::Character(0),
            marker: 0,
            p,
            v: Vec3::zeros(),
        };
        InteractionGraph {
            nodes: vec![node(Vec3::zeros()); edges.len() + 1],
            edges: edges
                .iter()
                .enumerate()
                .map(|(k, (p, v, class))| Edge {
                    i: 0,
                    j: k + 1,
                    class: *class,
                    p: *p,
                    v: *v,
                })
                .collect(),
        }
    }

    #[test]
    fn weight_examples() {
        let g = graph(&[
            (Vec3::x(), Vec3::zeros(), EdgeClass::Cross),
            (Vec3::y(), Vec3::zeros(), EdgeClass::Cross),
        ]);
        let p = RewardParams::default();
        assert_eq!(edge_weights(&g, &g, &p).unwrap(), vec![0.5, 0.5]);

        let g = graph(&[
            (Vec3::zeros(), Vec3::zeros(), EdgeClass::Cross),
            (Vec3::x() * LN_2, Vec3::zeros(), EdgeClass::Cross),
            (Vec3::y() * 3.0, Vec3::zeros(), EdgeClass::Cross),
        ]);
        let uniform = RewardParams {
            k_w: 0.0,
            ..p
        };
        for w in edge_weights(&g, &g, &uniform).unwrap() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }

        let g = graph(&[
            (Vec3::zeros(), Vec3::zeros(), EdgeClass::Cross),
            (Vec3::x() * LN_2, Vec3::zeros(), EdgeClass::Cross),
        ]);
        let other = graph(&[
            (Vec3::x() * 5.0, Vec3::zeros(), EdgeClass::Cross),
            (Vec3::zeros(), Vec3::zeros(), EdgeClass::Cross),
        ]);
        let ref_only = RewardParams {
            k_w: 1.0,
            weighting_mode: WeightingMode::RefOnly,
            ..p
        };
        let w = edge_weights(&other, &g, &ref_only).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_and_mismatched_graphs_error() {
        let empty = graph(&[]);
        assert!(edge_weights(&empty, &empty, &RewardParams::default()).is_err());
        let a = graph(&[(Vec3::x(), Vec3::zeros(), EdgeClass::Cross)]);
        let b = graph(&[(Vec3::x(), Vec3::zeros(), EdgeClass::SelfConnection(0))]);
        assert!(edge_weights(&a, &b, &RewardParams::default()).is_err());
    }

    #[test]
    fn self_edge_examples() {
        let a = Vec3::new(0.3, -0.2, 0.9);
        let t = Vec3::new(0.1, 0.5, 0.2);
        assert_eq!(err_self_edge(&a, &t, &a, &t), 0.0);
        let s = 1.7;
        assert!(err_self_edge(&(a * s), &(t * s), &a, &t) < 1e-15);
        let e = err_self_edge(&Vec3::new(2.0, 0.0, 0.0), &Vec3::x(), &Vec3::x(), &Vec3::x());
        assert_eq!(e, 1.0);
    }

    #[test]
    fn cross_edge_examples() {
        let a = Vec3::new(2.0, 0.0, 0.0);
        let b = Vec3::x();
        assert_eq!(err_cross_edge(&a, &a), 0.0);
        assert_eq!(err_cross_edge(&a, &b), 0.75);
        assert_eq!(err_cross_edge(&a, &b), err_cross_edge(&b, &a));
        let (e, clamped) = err_cross_edge_clamped(&Vec3::zeros(), &b);
        assert!(clamped && e.is_finite());
    }

    #[test]
    fn graph_error_examples() {
        let g = graph(&[(Vec3::x(), Vec3::zeros(), EdgeClass::Cross)]);
        let t = vec![Vec3::zeros(); 2];
        assert_eq!(err_pos_graph(&g, &g, &t, &t, &[1.0]).unwrap(), 0.0);
        let s = graph(&[(Vec3::new(2.0, 0.0, 0.0), Vec3::zeros(), EdgeClass::Cross)]);
        assert_eq!(err_pos_graph(&s, &g, &t, &t, &[1.0]).unwrap(), 0.75);
        let sv = graph(&[(Vec3::x(), Vec3::new(0.0, 3.0, 4.0), EdgeClass::Cross)]);
        assert_eq!(err_vel_graph(&sv, &g, &[1.0]).unwrap(), 5.0);
        assert_eq!(err_vel_graph(&g, &g, &[1.0]).unwrap(), 0.0);
    }

    fn root(position: Vec3, orientation: Quat) -> RootState {
        RootState {
            position,
            orientation,
            linear_velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
        }
    }

    #[test]
    fn root_examples() {
        let p = RewardParams::default();
        let a = root(Vec3::new(1.0, 0.9, 2.0), Quat::identity());
        assert_eq!(err_root(&a, &a, &p), 0.0);
        let raised = root(Vec3::new(1.0, 1.2, 2.0), Quat::identity());
        assert_eq!(err_root(&raised, &a, &p), 0.0);
        let yawed = root(a.position, Quat::from_axis_angle(&Vec3::y_axis(), FRAC_PI_2));
        assert!((err_root(&yawed, &a, &p) - FRAC_PI_2 * FRAC_PI_2).abs() < 1e-12);
        assert!((err_root(&yawed, &a, &p) - 2.4674).abs() < 1e-4);
    }

    #[test]
    fn com_examples() {
        let p = RewardParams::default();
        let z = Vec3::zeros();
        assert_eq!(err_com(&z, &z, &z, &z, &p), 0.0);
        assert_eq!(err_com(&Vec3::new(0.0, 0.7, 0.0), &z, &z, &z, &p), 0.0);
        assert!((err_com(&Vec3::new(0.3, 0.0, 0.4), &z, &z, &z, &p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reward_examples() {
        let p = RewardParams::default();
        let b = reward(0.0, 0.0, 0.0, 0.0, &p);
        assert_eq!(b.r, 1.0);
        let b = reward(LN_2 / p.k1, 0.0, 0.0, 0.0, &p);
        assert!((b.r - 0.5).abs() < 1e-15);
        let mut last = 1.0;
        for e in [0.1, 0.2, 0.4, 0.8] {
            let r = reward(0.0, 0.0, e, 0.0, &p).r;
            assert!(r < last);
            last = r;
        }
        let b = reward(0.3, 0.2, 0.1, 0.4, &p);
        assert!((b.r - b.r_pos_graph * b.r_vel_graph * b.r_root * b.r_com).abs() < 1e-12);
    }

    #[test]
    fn params_reject_negative() {
        let p = RewardParams {
            k3: -1.0,
            ..RewardParams::default()
        };
        assert!(p.validate().is_err());
        RewardParams::default().validate().unwrap();
    }

    #[test]
    fn params_json_defaults() {
        let p: RewardParams = serde_json::from_str(r#"{"k_w": 0.0, "weighting_mode": "ref"}"#).unwrap();
        assert_eq!(p.k_w, 0.0);
        assert_eq!(p.k1, 2.0);
        assert_eq!(p.weighting_mode, WeightingMode::RefOnly);
        assert!(serde_json::from_str::<RewardParams>(r#"{"kw": 1.0}"#).is_err());
    }
}
