//! Kinematic retargeting by per-frame pose optimization against the
//! Interaction Graph reward (or a joint-space baseline), and RL-style
//! observations.

mod analysis;
mod grasp;
mod observation;
mod optimizer;
mod setup;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{apply_action, deltas_from_rotation_vectors};
use crate::motion::{difference_stencil, Frame, Scene};
use crate::reward::{
    joint_based_log_reward, FrameReward, FrameWindow, JointRewardParams, PoseVelocity,
    RewardModel, RewardParams,
};

pub use analysis::{
    contact_analysis, limb_of, mean_contact_cross_error, mean_pair_distance,
    non_contact_limb_self_error, pair_distance, summarize, ContactAnalysis, Limb, RunSummary,
    CONTACT_DISTANCE,
};
pub use grasp::{apply_grasp_constraints, GraspConstraints};
pub use observation::{
    build_observation, observation_len, Observation, ObservationSpec, LINK_DIMS,
    OBSERVATION_LAYOUT_VERSION,
};
pub use optimizer::{central_gradient, maximize, maximize_with_restarts, project, Ascent, OptimizerConfig};
pub use setup::{scaled_scene, substituted_scene};

/// What the per-frame search maximizes.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    InteractionGraph,
    JointBaseline(JointRewardParams),
}

impl Objective {
    pub fn label(&self) -> &'static str {
        match self {
            Objective::InteractionGraph => "interaction_graph",
            Objective::JointBaseline(_) => "joint_baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameStatus {
    pub converged: bool,
    pub iterations: usize,
    /// The optimum scored below `Δq = 0` and was discarded.
    pub reverted: bool,
    /// The backward sweep replaced the forward solution.
    pub refined: bool,
    /// Every active grasp residual is within tolerance.
    pub grasp_held: bool,
    /// Set when the frame could not be optimized and fell back to `Δq = 0`.
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct FrameSolution {
    pub frame: usize,
    pub state: Frame,
    /// Rotation vectors, 3 per non-root joint, characters in scene order.
    pub delta: Vec<f64>,
    /// Mean per-character reward under the objective.
    pub reward: f64,
    pub residuals: Vec<f64>,
    pub status: FrameStatus,
}

#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    pub scene: Scene,
    pub deltas: Vec<Vec<f64>>,
    /// Interaction Graph reward of the optimized clip, per frame.
    pub rewards: Vec<FrameReward>,
    pub residuals: Vec<Vec<f64>>,
    pub status: Vec<FrameStatus>,
}

impl TrajectoryResult {
    pub fn mean_reward(&self) -> f64 {
        self.rewards.iter().map(FrameReward::mean_reward).sum::<f64>() / self.rewards.len() as f64
    }
}

/// Per-frame optimizer over joint-rotation deltas of every character.
///
/// Roots are not optimized. Frame 0 stays at `Δq = 0` so the evaluated clip
/// keeps its T-pose.
#[derive(Debug, Clone)]
pub struct Retargeter {
    reference: Scene,
    initial: Scene,
    model: RewardModel,
    objective: Objective,
    config: OptimizerConfig,
    grasps: GraspConstraints,
    offsets: Vec<usize>,
    dims: usize,
    ref_velocities: Vec<Vec<PoseVelocity>>,
}

impl Retargeter {
    /// `initial` is the evaluated clip at `Δq = 0`, e.g. from [`scaled_scene`].
    pub fn new(
        reference: &Scene,
        initial: &Scene,
        params: RewardParams,
        objective: Objective,
        config: OptimizerConfig,
    ) -> Result<Self> {
        config.validate()?;
        if initial.frame_count() != reference.frame_count() {
            return Err(Error::Structure(format!(
                "initial clip has {} frames, reference has {}",
                initial.frame_count(),
                reference.frame_count()
            )));
        }
        let model = RewardModel::new(reference, initial, params)?;
        let mut ref_velocities = Vec::new();
        if let Objective::JointBaseline(_) = objective {
            for (s, r) in initial.characters.iter().zip(&reference.characters) {
                if !s.skeleton.same_topology(&r.skeleton) {
                    return Err(Error::Structure(format!(
                        "joint baseline needs matching skeletons; '{}' differs from the reference",
                        s.name
                    )));
                }
            }
            ref_velocities = (0..reference.frame_count())
                .map(|t| {
                    let (a, b, rate) = difference_stencil(t, reference.frame_count(), reference.fps);
                    (0..reference.characters.len())
                        .map(|c| {
                            PoseVelocity::from_window(
                                &reference.frames[a].characters[c],
                                &reference.frames[b].characters[c],
                                rate,
                            )
                        })
                        .collect()
                })
                .collect();
        }
        let grasps = GraspConstraints::new(initial, reference)?;
        let mut offsets = Vec::with_capacity(initial.characters.len());
        let mut dims = 0;
        for ch in &initial.characters {
            offsets.push(dims);
            dims += 3 * ch.skeleton.rotation_count();
        }
        Ok(Retargeter {
            reference: reference.clone(),
            initial: initial.clone(),
            model,
            objective,
            config,
            grasps,
            offsets,
            dims,
            ref_velocities,
        })
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    pub fn initial(&self) -> &Scene {
        &self.initial
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    /// Number of optimized parameters.
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn frame_count(&self) -> usize {
        self.initial.frame_count()
    }

    /// Initial frame `t` with deltas `x` composed onto every character.
    pub fn apply(&self, t: usize, x: &[f64]) -> Frame {
        let init = &self.initial.frames[t];
        let characters = init
            .characters
            .iter()
            .enumerate()
            .map(|(c, p)| {
                let n = 3 * p.joint_rotations.len();
                let o = self.offsets[c];
                apply_action(p, &deltas_from_rotation_vectors(&x[o..o + n]))
                    .expect("delta blocks match the skeletons")
            })
            .collect();
        Frame {
            characters,
            objects: init.objects.clone(),
        }
    }

    fn check(&self, t: usize, x: &[f64]) -> Result<()> {
        if t >= self.frame_count() {
            return Err(Error::Structure(format!(
                "frame {t} is outside a clip of {} frames",
                self.frame_count()
            )));
        }
        if x.len() != self.dims {
            return Err(Error::Structure(format!(
                "delta has {} entries, expected {}",
                x.len(),
                self.dims
            )));
        }
        Ok(())
    }

    /// Per-character log rewards of frame `t` with deltas `x`. The velocity
    /// stencil applies the same deltas to the neighbouring initial frames, so
    /// the frame is scored as if the correction were held over the window.
    pub fn character_log_rewards(&self, t: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check(t, x)?;
        let (a, b, rate) = difference_stencil(t, self.frame_count(), self.initial.fps);
        let current = self.apply(t, x);
        let before = (a != t).then(|| self.apply(a, x));
        let after = (b != t).then(|| self.apply(b, x));
        let window = FrameWindow {
            current: &current,
            before: before.as_ref().unwrap_or(&current),
            after: after.as_ref().unwrap_or(&current),
            rate,
        };
        match &self.objective {
            Objective::InteractionGraph => {
                let fr = self.model.evaluate(t, &window)?;
                Ok(fr.characters.iter().map(|b| b.log_reward(self.model.params())).collect())
            }
            Objective::JointBaseline(jp) => (0..current.characters.len())
                .map(|c| {
                    let vel = PoseVelocity::from_window(
                        &window.before.characters[c],
                        &window.after.characters[c],
                        rate,
                    );
                    joint_based_log_reward(
                        &self.initial.characters[c].skeleton,
                        &current.characters[c],
                        &vel,
                        &self.reference.characters[c].skeleton,
                        &self.reference.frames[t].characters[c],
                        &self.ref_velocities[t][c],
                        jp,
                        self.model.params(),
                    )
                })
                .collect(),
        }
    }

    /// Mean per-character reward `r` of frame `t` under the objective.
    pub fn frame_reward(&self, t: usize, x: &[f64]) -> Result<f64> {
        let logs = self.character_log_rewards(t, x)?;
        Ok(logs.iter().map(|l| l.exp()).sum::<f64>() / logs.len() as f64)
    }

    /// The optimizer's gradient estimate of [`Self::frame_reward`] with
    /// respect to the parameters `coords`.
    pub fn reward_gradient(&self, t: usize, x: &[f64], coords: &[usize]) -> Result<Vec<f64>> {
        self.check(t, x)?;
        if let Some(&i) = coords.iter().find(|&&i| i >= self.dims) {
            return Err(Error::Structure(format!("coordinate {i} is out of range ({} dims)", self.dims)));
        }
        let h = self.config.gradient_step;
        let probe = |i: usize, d: f64| {
            let mut y = x.to_vec();
            y[i] += d;
            self.frame_reward(t, &y)
        };
        coords
            .iter()
            .map(|&i| Ok((probe(i, h)? - probe(i, -h)?) / (2.0 * h)))
            .collect()
    }

    fn residuals(&self, t: usize, state: &Frame) -> Vec<f64> {
        self.grasps.residuals(&self.initial.characters, t, state)
    }

    /// Penalized objective: mean log reward minus the mean squared distance
    /// to the `anchors` (neighbouring solutions) and grasp penalties. Errors
    /// map to NaN and abort the search.
    fn penalized(&self, t: usize, x: &[f64], anchors: &[&[f64]], mu: f64) -> f64 {
        let Ok(logs) = self.character_log_rewards(t, x) else {
            return f64::NAN;
        };
        let log = logs.iter().sum::<f64>() / logs.len() as f64;
        let smooth = anchors
            .iter()
            .map(|a| x.iter().zip(*a).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
            .sum::<f64>()
            / anchors.len().max(1) as f64;
        let grasp: f64 = if mu > 0.0 {
            self.residuals(t, &self.apply(t, x)).iter().map(|r| r * r).sum()
        } else {
            0.0
        };
        log - self.config.smoothness * smooth - mu * grasp
    }

    fn final_grasp_weight(&self, t: usize) -> f64 {
        if self.grasps.any_active(t) {
            let rounds = self.config.grasp_rounds.saturating_sub(1) as i32;
            self.config.grasp_weight * self.config.grasp_ramp.powi(rounds)
        } else {
            0.0
        }
    }

    /// Optimizes frame `t` from `start`, penalizing distance to `anchor`.
    fn solve_frame(&self, t: usize, start: &[f64], anchor: &[f64], stream: u64) -> Result<FrameSolution> {
        self.check(t, start)?;
        self.check(t, anchor)?;
        let zero = vec![0.0; self.dims];
        let baseline = self.frame_reward(t, &zero)?;
        let active = self.grasps.any_active(t);
        let rounds = if active { self.config.grasp_rounds } else { 1 };
        let mut mu = if active { self.config.grasp_weight } else { 0.0 };
        let mut x = start.to_vec();
        let mut iterations = 0;
        let mut converged = false;
        for round in 0..rounds {
            let f = |y: &[f64]| self.penalized(t, y, &[anchor], mu);
            let seed = stream * rounds as u64 + round as u64;
            let a = maximize_with_restarts(&f, &x, &self.config, seed).map_err(|e| match e {
                Error::Numerical(m) => Error::Numerical(format!("frame {t}: {m}")),
                other => other,
            })?;
            x = a.x;
            iterations += a.iterations;
            converged = a.converged;
            let res = self.residuals(t, &self.apply(t, &x));
            if res.iter().all(|r| *r < self.config.grasp_tolerance) {
                break;
            }
            mu *= self.config.grasp_ramp;
        }
        let mut reward = self.frame_reward(t, &x)?;
        let reverted = reward < baseline;
        if reverted {
            x = zero;
            reward = baseline;
        }
        let state = self.apply(t, &x);
        let residuals = self.residuals(t, &state);
        Ok(FrameSolution {
            frame: t,
            status: FrameStatus {
                converged,
                iterations,
                reverted,
                refined: false,
                grasp_held: residuals.iter().all(|r| *r < self.config.grasp_tolerance),
                failure: None,
            },
            state,
            delta: x,
            reward,
            residuals,
        })
    }

    /// Optimizes frame `t` warm-started from `previous`, the deltas of frame
    /// `t - 1`, with the smoothness term anchored there.
    pub fn optimize_frame(&self, t: usize, previous: &[f64]) -> Result<FrameSolution> {
        self.solve_frame(t, previous, previous, t as u64)
    }

    fn fixed_frame(&self, t: usize, failure: Option<String>) -> FrameSolution {
        let delta = vec![0.0; self.dims];
        let state = self.apply(t, &delta);
        let residuals = self.residuals(t, &state);
        FrameSolution {
            frame: t,
            status: FrameStatus {
                converged: failure.is_none(),
                iterations: 0,
                reverted: false,
                refined: false,
                grasp_held: residuals.iter().all(|r| *r < self.config.grasp_tolerance),
                failure,
            },
            reward: self.frame_reward(t, &delta).unwrap_or(f64::NAN),
            state,
            delta,
            residuals,
        }
    }

    /// Optimizes every frame. A forward sweep warm-starts each frame from
    /// its predecessor. A backward sweep then re-solves each frame from its
    /// successor and keeps that candidate when it scores higher against both
    /// neighbours. A frame that fails keeps `Δq = 0` and records the failure.
    pub fn optimize_clip(&self) -> Result<TrajectoryResult> {
        let n = self.frame_count();
        let mut solutions: Vec<FrameSolution> = Vec::with_capacity(n);
        solutions.push(self.fixed_frame(0, None));
        for t in 1..n {
            let sol = self
                .optimize_frame(t, &solutions[t - 1].delta)
                .unwrap_or_else(|e| self.fixed_frame(t, Some(e.to_string())));
            solutions.push(sol);
        }
        for t in (1..n.saturating_sub(1)).rev() {
            let next = solutions[t + 1].delta.clone();
            let Ok(mut candidate) = self.solve_frame(t, &next, &next, (n + t) as u64) else {
                continue;
            };
            let mu = self.final_grasp_weight(t);
            let anchors = [solutions[t - 1].delta.as_slice(), next.as_slice()];
            let current = &solutions[t];
            let held = |s: &FrameSolution| s.status.grasp_held;
            let better = (held(&candidate), self.penalized(t, &candidate.delta, &anchors, mu))
                > (held(current), self.penalized(t, &current.delta, &anchors, mu));
            if better {
                candidate.status.iterations += current.status.iterations;
                candidate.status.refined = true;
                solutions[t] = candidate;
            } else {
                solutions[t].status.iterations += candidate.status.iterations;
            }
        }
        let mut scene = self.initial.clone();
        let mut deltas = Vec::with_capacity(n);
        let mut residuals = Vec::with_capacity(n);
        let mut status = Vec::with_capacity(n);
        for (t, s) in solutions.into_iter().enumerate() {
            scene.frames[t] = s.state;
            deltas.push(s.delta);
            residuals.push(s.residuals);
            status.push(s.status);
        }
        let rewards = self.model.evaluate_scene(&scene)?;
        Ok(TrajectoryResult {
            scene,
            deltas,
            rewards,
            residuals,
            status,
        })
    }
}

/// One frame of [`Retargeter::optimize_frame`].
pub fn optimize_frame(retargeter: &Retargeter, frame: usize, previous: &[f64]) -> Result<FrameSolution> {
    retargeter.optimize_frame(frame, previous)
}

/// Retargets `reference` onto the characters of `initial` (the `Δq = 0`
/// clip) frame by frame.
pub fn optimize_clip(
    reference: &Scene,
    initial: &Scene,
    params: RewardParams,
    objective: Objective,
    config: OptimizerConfig,
) -> Result<TrajectoryResult> {
    Retargeter::new(reference, initial, params, objective, config)?.optimize_clip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn short_high_five() -> Scene {
        let mut s = synthetic::high_five_scene();
        s.frames.truncate(6);
        s
    }

    #[test]
    fn identity_retarget_stays_put() {
        let s = short_high_five();
        let r = optimize_clip(
            &s,
            &s,
            RewardParams::default(),
            Objective::InteractionGraph,
            OptimizerConfig::default(),
        )
        .unwrap();
        assert!(r.mean_reward() > 0.99);
        for d in &r.deltas {
            assert!(d.iter().all(|v| v.abs() < 1e-3));
        }
    }

    #[test]
    fn never_below_zero_delta() {
        let reference = short_high_five();
        let sk = &reference.characters[1].skeleton;
        let scales = std::collections::BTreeMap::from([(1, crate::model::ScaleSpec::uniform(sk, 0.7))]);
        let initial = scaled_scene(&reference, &scales).unwrap();
        let rt = Retargeter::new(
            &reference,
            &initial,
            RewardParams::default(),
            Objective::InteractionGraph,
            OptimizerConfig::default(),
        )
        .unwrap();
        let zero = vec![0.0; rt.dims()];
        let sol = rt.optimize_frame(3, &zero).unwrap();
        assert!(sol.reward >= rt.frame_reward(3, &zero).unwrap());
    }

    #[test]
    fn repeated_gradient_coordinates() {
        let reference = short_high_five();
        let sk = &reference.characters[1].skeleton;
        let scales = std::collections::BTreeMap::from([(1, crate::model::ScaleSpec::uniform(sk, 0.7))]);
        let initial = scaled_scene(&reference, &scales).unwrap();
        let rt = Retargeter::new(
            &reference,
            &initial,
            RewardParams::default(),
            Objective::InteractionGraph,
            OptimizerConfig::default(),
        )
        .unwrap();
        let x: Vec<f64> = (0..rt.dims()).map(|i| 0.01 * (i % 7) as f64).collect();
        let g = rt.reward_gradient(3, &x, &[5, 5, 9]).unwrap();
        assert_eq!(g[0], g[1]);
        assert!(g[0] != 0.0);
        assert!(rt.reward_gradient(3, &x, &[rt.dims()]).is_err());
    }

    #[test]
    fn baseline_rejects_other_topology() {
        let reference = synthetic::two_character_idle_scene(4);
        let initial = substituted_scene(
            &reference,
            0,
            crate::presets::robot_skeleton(),
            crate::presets::robot_markers(),
        )
        .unwrap();
        let err = Retargeter::new(
            &reference,
            &initial,
            RewardParams::default(),
            Objective::JointBaseline(JointRewardParams::default()),
            OptimizerConfig::default(),
        );
        assert!(matches!(err, Err(Error::Structure(_))));
    }
}
