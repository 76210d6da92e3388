use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings of the per-frame pose search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Length of the first (gradient) step, radians.
    pub initial_step: f64,
    /// Curvature pairs kept by the quasi-Newton direction.
    pub memory: usize,
    /// Sufficient-increase constant of the line search.
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Weight of `‖Δq_t - Δq_{t-1}‖²`.
    pub smoothness: f64,
    /// Bound on each joint's rotation-vector norm, radians.
    pub delta_bound: f64,
    /// Extra randomly perturbed starts per frame.
    pub restarts: usize,
    pub restart_spread: f64,
    /// Stop once an accepted step gains less than this.
    pub tolerance: f64,
    /// Central-difference step of the gradient estimate.
    pub gradient_step: f64,
    /// Initial penalty weight on squared grasp residuals (1/m²).
    pub grasp_weight: f64,
    pub grasp_ramp: f64,
    pub grasp_rounds: usize,
    /// Residual under which a grasp counts as held, m.
    pub grasp_tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 60,
            initial_step: 0.05,
            memory: 8,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 30,
            smoothness: 0.1,
            delta_bound: 1.0,
            restarts: 0,
            restart_spread: 0.1,
            tolerance: 1e-7,
            gradient_step: 1e-6,
            grasp_weight: 1e3,
            grasp_ramp: 10.0,
            grasp_rounds: 3,
            grasp_tolerance: 0.005,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("initial_step", self.initial_step),
            ("armijo", self.armijo),
            ("delta_bound", self.delta_bound),
            ("tolerance", self.tolerance),
            ("gradient_step", self.gradient_step),
            ("grasp_ramp", self.grasp_ramp),
            ("grasp_tolerance", self.grasp_tolerance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("optimizer {name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("smoothness", self.smoothness),
            ("restart_spread", self.restart_spread),
            ("grasp_weight", self.grasp_weight),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!(
                    "optimizer {name} must be non-negative, got {v}"
                )));
            }
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Validation(format!(
                "optimizer backtrack must be in (0, 1), got {}",
                self.backtrack
            )));
        }
        if self.memory == 0 || self.grasp_rounds == 0 {
            return Err(Error::Validation(
                "optimizer memory and grasp_rounds must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Result of one bounded ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct Ascent {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Central-difference gradient; coordinates are probed in parallel and
/// collected in order, so the result does not depend on the thread count.
pub fn central_gradient<F>(f: &F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut probe = x.to_vec();
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Clamps every 3-block (one joint's rotation vector) to norm `bound`.
pub fn project(x: &mut [f64], bound: f64) {
    for c in x.chunks_exact_mut(3) {
        let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        if n > bound {
            let s = bound / n;
            c.iter_mut().for_each(|v| *v *= s);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Quasi-Newton ascent direction from the two-loop recursion (run on `-f`).
fn lbfgs_direction(g: &[f64], memory: &VecDeque<Pair>) -> Vec<f64> {
    let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut alpha = Vec::with_capacity(memory.len());
    for p in memory.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        q.iter_mut().zip(&p.y).for_each(|(qi, yi)| *qi -= a * yi);
        alpha.push(a);
    }
    let last = memory.back().expect("non-empty memory");
    let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
    let mut r: Vec<f64> = q.iter().map(|v| gamma * v).collect();
    for (p, a) in memory.iter().zip(alpha.iter().rev()) {
        let b = p.rho * dot(&p.y, &r);
        r.iter_mut().zip(&p.s).for_each(|(ri, si)| *ri += (a - b) * si);
    }
    r.iter().map(|v| -v).collect()
}

fn finite_or_err(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("non-finite objective {what}")))
    }
}

/// Projected backtracking search along `d`. Accepts only strict increases
/// that also satisfy the sufficient-increase condition.
fn line_search<F>(
    f: &F,
    x: &[f64],
    fx: f64,
    g: &[f64],
    d: &[f64],
    config: &OptimizerConfig,
) -> Option<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut alpha = 1.0;
    for _ in 0..=config.max_backtracks {
        let mut xn: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        project(&mut xn, config.delta_bound);
        let step: Vec<f64> = xn.iter().zip(x).map(|(a, b)| a - b).collect();
        let fxn = f(&xn);
        if fxn.is_finite() && fxn > fx && fxn >= fx + config.armijo * dot(g, &step) {
            return Some((xn, fxn));
        }
        alpha *= config.backtrack;
    }
    None
}

/// Bounded L-BFGS ascent from `x0` with finite-difference gradients.
/// Accepted iterates strictly increase `f`.
pub fn maximize<F>(f: &F, x0: &[f64], config: &OptimizerConfig) -> Result<Ascent>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut x = x0.to_vec();
    project(&mut x, config.delta_bound);
    let mut fx = finite_or_err(f(&x), "at the start point")?;
    let mut g = central_gradient(f, &x, config.gradient_step);
    let mut memory: VecDeque<Pair> = VecDeque::with_capacity(config.memory);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient after {iterations} iterations (objective {fx})"
            )));
        }
        let gn = norm(&g);
        if gn == 0.0 {
            converged = true;
            break;
        }
        let steepest: Vec<f64> = g.iter().map(|v| v * config.initial_step / gn).collect();
        let mut d = if memory.is_empty() {
            steepest.clone()
        } else {
            lbfgs_direction(&g, &memory)
        };
        if !(dot(&d, &g) > 0.0) {
            d = steepest.clone();
        }
        let accepted = line_search(f, &x, fx, &g, &d, config).or_else(|| {
            if memory.is_empty() {
                None
            } else {
                memory.clear();
                line_search(f, &x, fx, &g, &steepest, config)
            }
        });
        iterations += 1;
        let Some((xn, fxn)) = accepted else {
            converged = true;
            break;
        };
        let gain = fxn - fx;
        let gnew = central_gradient(f, &xn, config.gradient_step);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&gnew).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if memory.len() == config.memory {
                memory.pop_front();
            }
            memory.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        x = xn;
        fx = fxn;
        g = gnew;
        if gain < config.tolerance {
            converged = true;
            break;
        }
    }
    Ok(Ascent {
        x,
        value: fx,
        iterations,
        converged,
    })
}

fn start_seed(seed: u64, stream: u64, index: usize) -> u64 {
    seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (index as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9)
}

/// [`maximize`] from `x0` plus `config.restarts` seeded perturbations of it.
/// Starts run in parallel; the best value wins, ties going to the earliest
/// start.
pub fn maximize_with_restarts<F>(
    f: &F,
    x0: &[f64],
    config: &OptimizerConfig,
    stream: u64,
) -> Result<Ascent>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let starts: Vec<Vec<f64>> = (0..=config.restarts)
        .map(|i| {
            if i == 0 {
                return x0.to_vec();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(start_seed(config.seed, stream, i));
            x0.iter()
                .map(|v| v + rng.gen_range(-config.restart_spread..=config.restart_spread))
                .collect()
        })
        .collect();
    let runs: Vec<Result<Ascent>> = starts.par_iter().map(|s| maximize(f, s, config)).collect();
    let mut best: Option<Ascent> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(x: &[f64]) -> f64 {
        -(x[0] - 0.3).powi(2) - 2.0 * (x[1] + 0.2).powi(2) - 0.5 * (x[2] - 0.1).powi(2)
    }

    #[test]
    fn gradient_of_quadratic() {
        let g = central_gradient(&quadratic, &[0.0, 0.0, 0.0], 1e-6);
        let want = [0.6, -0.8, 0.1];
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn finds_interior_maximum() {
        let a = maximize(&quadratic, &[0.0; 3], &OptimizerConfig::default()).unwrap();
        assert!((a.x[0] - 0.3).abs() < 1e-3);
        assert!((a.x[1] + 0.2).abs() < 1e-3);
        assert!((a.x[2] - 0.1).abs() < 1e-3);
    }

    #[test]
    fn respects_the_bound() {
        let far = |x: &[f64]| -(x[0] - 5.0).powi(2) - x[1].powi(2) - x[2].powi(2);
        let cfg = OptimizerConfig::default();
        let a = maximize(&far, &[0.0; 3], &cfg).unwrap();
        assert!((norm(&a.x) - cfg.delta_bound).abs() < 1e-9);
        assert!(a.x[0] > 0.99);
    }

    #[test]
    fn never_decreases_the_objective() {
        let rugged = |x: &[f64]| (5.0 * x[0]).sin() + (3.0 * x[1]).cos() - x[2] * x[2];
        let x0 = [0.4, -0.7, 0.2];
        let a = maximize(&rugged, &x0, &OptimizerConfig::default()).unwrap();
        assert!(a.value >= rugged(&x0));
    }

    #[test]
    fn restarts_are_deterministic() {
        let rugged = |x: &[f64]| (5.0 * x[0]).sin() + (3.0 * x[1]).cos() - x[2] * x[2];
        let cfg = OptimizerConfig {
            restarts: 4,
            seed: 9,
            ..Default::default()
        };
        let a = maximize_with_restarts(&rugged, &[0.1, 0.1, 0.1], &cfg, 3).unwrap();
        let b = maximize_with_restarts(&rugged, &[0.1, 0.1, 0.1], &cfg, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_objective_is_numerical() {
        let bad = |_: &[f64]| f64::NAN;
        assert!(matches!(
            maximize(&bad, &[0.0; 3], &OptimizerConfig::default()),
            Err(Error::Numerical(_))
        ));
    }
}
