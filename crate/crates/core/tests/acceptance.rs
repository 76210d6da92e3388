//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always print. The process
//! fails when a criterion fails that is not listed in `KNOWN_FAILURES`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use interplay_core::cli::RunParams;
use interplay_core::graph::{perturb, tetrahedra_edges, tetrahedralize, EdgeClass, EntityRef};
use interplay_core::model::ScaleSpec;
use interplay_core::retarget::{
    contact_analysis, scaled_scene, summarize, Objective, Retargeter, RunSummary,
    CONTACT_DISTANCE,
};
use interplay_core::reward::{
    edge_weights, err_cross_edge, JointRewardParams, RewardModel, RewardParams,
    WeightingMode,
};
use interplay_core::{motion, synthetic, InteractionGraph, Node, Scene, Vec3};

/// Criteria that fail for a documented reason (see the README).
const KNOWN_FAILURES: &[u32] = &[9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

// 1. Weight normalization over random graphs.
fn weight_normalization() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut graphs = 0;
    while graphs < 1000 {
        let n = rng.gen_range(4..=40);
        let nodes: Vec<Node> = (0..n)
            .map(|i| Node {
                entity: match rng.gen_range(0..3) {
                    0 => EntityRef::Character(0),
                    1 => EntityRef::Character(1),
                    _ => EntityRef::Object(0),
                },
                marker: i,
                p: Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0), rng.gen_range(-1.0..1.0)),
                v: Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            })
            .collect();
        let Ok(reference) = InteractionGraph::from_nodes(nodes.clone()) else {
            continue;
        };
        let moved: Vec<Node> = nodes
            .iter()
            .map(|n| Node {
                p: n.p * rng.gen_range(0.3..3.0) + Vec3::new(0.0, rng.gen_range(-0.5..0.5), 0.0),
                ..*n
            })
            .collect();
        let sim = InteractionGraph::with_connectivity(moved, &reference.keys()).unwrap();
        let k_w = rng.gen_range(0.0..40.0);
        for mode in [WeightingMode::RefOnly, WeightingMode::Bidirectional] {
            let params = RewardParams {
                k_w,
                weighting_mode: mode,
                ..Default::default()
            };
            let w = edge_weights(&sim, &reference, &params).unwrap();
            worst = worst.max((w.iter().sum::<f64>() - 1.0).abs());
        }
        graphs += 1;
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!("{graphs} graphs, max |sum w - 1| = {worst:.2e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

// 2. Evaluated scene identical to the reference.
fn perfect_imitation() -> Outcome {
    let scene = synthetic::two_character_idle_scene(300);
    let start = Instant::now();
    let model = RewardModel::new(&scene, &scene, RewardParams::default()).unwrap();
    let rewards = model.evaluate_scene(&scene).unwrap();
    let elapsed = start.elapsed();
    let mut worst_r: f64 = 0.0;
    let mut worst_err: f64 = 0.0;
    for b in rewards.iter().flat_map(|f| &f.characters) {
        worst_r = worst_r.max((b.r - 1.0).abs());
        for e in [b.err_pos_graph, b.err_vel_graph, b.err_root, b.err_com] {
            worst_err = worst_err.max(e.abs());
        }
    }
    outcome(
        rewards.len() == 300 && worst_r <= 1e-12 && worst_err == 0.0 && elapsed < Duration::from_secs(5),
        format!(
            "300 frames, max |r - 1| = {worst_r:.2e}, max error = {worst_err:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

// 3. Uniform scaling with identical joint rotations leaves every self edge exact.
fn scale_robustness() -> Outcome {
    let reference = synthetic::high_five_scene();
    let mut worst: f64 = 0.0;
    let mut edges = 0usize;
    for s in [0.5, 0.8, 1.3, 2.0] {
        let scales: BTreeMap<usize, ScaleSpec> = reference
            .characters
            .iter()
            .enumerate()
            .map(|(c, ch)| (c, ScaleSpec::uniform(&ch.skeleton, s)))
            .collect();
        let scaled = scaled_scene(&reference, &scales).unwrap();
        let model = RewardModel::new(&reference, &scaled, RewardParams::default()).unwrap();
        for fr in model.evaluate_scene(&scaled).unwrap() {
            for (k, e) in fr.edges.iter().zip(&fr.edge_errors) {
                if matches!(k.class, EdgeClass::SelfConnection(_)) {
                    worst = worst.max(*e);
                    edges += 1;
                }
            }
        }
    }
    outcome(worst <= 1e-9, format!("{edges} self edges over 4 scales, max err_self = {worst:.2e}"))
}

// 4. The cross-edge error is symmetric in its arguments.
fn cross_edge_symmetry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let v = |rng: &mut ChaCha8Rng| {
        let scale = 10f64.powf(rng.gen_range(-8.0..1.0));
        Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    };
    for _ in 0..1_000_000 {
        let a = v(&mut rng);
        let b = v(&mut rng);
        worst = worst.max((err_cross_edge(&a, &b) - err_cross_edge(&b, &a)).abs());
    }
    outcome(worst <= 1e-15, format!("1e6 pairs, max |e(a,b) - e(b,a)| = {worst:.2e}"))
}

/// Circumcenter and squared radius of a tetrahedron, or `None` when flat.
fn circumsphere(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> Option<(Vec3, f64)> {
    let rows = [b - a, c - a, d - a];
    let m = Matrix3::from_rows(&[rows[0].transpose(), rows[1].transpose(), rows[2].transpose()]);
    let volume = m.determinant();
    if volume.abs() < 1e-12 {
        return None;
    }
    let rhs = Vector3::new(rows[0].norm_squared(), rows[1].norm_squared(), rows[2].norm_squared()) * 0.5;
    let x = m.lu().solve(&rhs)?;
    Some((a + x, x.norm_squared()))
}

fn empty_sphere(points: &[Vec3], tet: [usize; 4]) -> Option<bool> {
    let [a, b, c, d] = tet.map(|i| points[i]);
    let (center, r2) = circumsphere(&a, &b, &c, &d)?;
    Some(
        points
            .iter()
            .enumerate()
            .filter(|(i, _)| !tet.contains(i))
            .all(|(_, p)| (p - center).norm_squared() > r2),
    )
}

// 5. Delaunay output against a brute-force empty-circumsphere oracle.
fn delaunay_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad_sets = 0;
    for _ in 0..100 {
        let n = rng.gen_range(5..=12);
        let raw: Vec<Vec3> = (0..n)
            .map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let points = perturb(&raw);
        let tets = tetrahedralize(&raw).unwrap();
        let engine_ok = tets.iter().all(|t| empty_sphere(&points, *t) == Some(true));

        let mut oracle = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        if empty_sphere(&points, [a, b, c, d]) == Some(true) {
                            oracle.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        let engine_edges: BTreeSet<(usize, usize)> = tetrahedra_edges(&tets).into_iter().collect();
        let oracle_edges: BTreeSet<(usize, usize)> = tetrahedra_edges(&oracle).into_iter().collect();
        if !engine_ok || engine_edges != oracle_edges {
            bad_sets += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        bad_sets == 0 && elapsed < Duration::from_secs(60),
        format!("100 point sets, {bad_sets} disagreements, {:.2} s", elapsed.as_secs_f64()),
    )
}

// 6. Vertical offsets of the evaluated character do not touch err_root or err_com.
fn height_exclusion() -> Outcome {
    let reference = synthetic::high_five_scene();
    let sk = &reference.characters[1].skeleton;
    let evaluated = scaled_scene(&reference, &BTreeMap::from([(1, ScaleSpec::uniform(sk, 0.8))])).unwrap();
    let model = RewardModel::new(&reference, &evaluated, RewardParams::default()).unwrap();
    let base = model.evaluate_scene(&evaluated).unwrap();
    let mut worst: f64 = 0.0;
    for h in [-0.3, 0.1, 0.7, 2.0] {
        for c in 0..2 {
            let mut lifted = evaluated.clone();
            for f in &mut lifted.frames {
                f.characters[c].root_position.y += h;
            }
            for (a, b) in base.iter().zip(model.evaluate_scene(&lifted).unwrap()) {
                for (x, y) in a.characters.iter().zip(&b.characters) {
                    worst = worst.max((x.err_root - y.err_root).abs());
                    worst = worst.max((x.err_com - y.err_com).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("4 offsets x 2 characters, max change = {worst:.2e}"))
}

fn high_five_setup(scale: f64) -> (Scene, Scene) {
    let reference = synthetic::high_five_scene();
    let sk = &reference.characters[1].skeleton;
    let initial = scaled_scene(&reference, &BTreeMap::from([(1, ScaleSpec::uniform(sk, scale))])).unwrap();
    (reference, initial)
}

// 7. The optimizer's gradient estimate against a five-point stencil.
fn gradient_check() -> Outcome {
    let (reference, initial) = high_five_setup(0.5);
    let rt = Retargeter::new(
        &reference,
        &initial,
        RewardParams::default(),
        Objective::InteractionGraph,
        Default::default(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let t = rng.gen_range(0..rt.frame_count());
        let x: Vec<f64> = (0..rt.dims()).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let coords: Vec<usize> = (0..10).map(|_| rng.gen_range(0..rt.dims())).collect();
        let got = rt.reward_gradient(t, &x, &coords).unwrap();
        let oracle: Vec<f64> = coords
            .iter()
            .map(|&i| {
                let f = |d: f64| {
                    let mut y = x.clone();
                    y[i] += d;
                    rt.frame_reward(t, &y).unwrap()
                };
                (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
            })
            .collect();
        let diff: f64 = got.iter().zip(&oracle).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = oracle.iter().map(|b| b * b).sum::<f64>().sqrt();
        worst = worst.max(diff / norm.max(1e-12));
    }
    outcome(worst < 1e-4, format!("50 frames x 10 coordinates, max relative error = {worst:.2e}"))
}

struct Demo {
    initial: RunSummary,
    graph: RunSummary,
    baseline: RunSummary,
    uniform: RunSummary,
    elapsed_contrast: Duration,
}

fn run_demo() -> Demo {
    let params = RunParams::load(Path::new(&data("high_five_demo_params.json"))).unwrap();
    let (reference, initial) = high_five_setup(0.5);
    let model = RewardModel::new(&reference, &initial, params.reward).unwrap();
    let contact = contact_analysis(&model, CONTACT_DISTANCE).unwrap();
    let run = |reward: RewardParams, objective: Objective| {
        let rt = Retargeter::new(&reference, &initial, reward, objective, params.optimizer.clone()).unwrap();
        let result = rt.optimize_clip().unwrap();
        summarize(&model, &result.scene, &contact).unwrap()
    };
    let start = Instant::now();
    let graph = run(params.reward, Objective::InteractionGraph);
    let baseline = run(params.reward, Objective::JointBaseline(JointRewardParams::default()));
    let elapsed_contrast = start.elapsed();
    let uniform = run(
        RewardParams {
            k_w: 0.0,
            ..params.reward
        },
        Objective::InteractionGraph,
    );
    Demo {
        initial: summarize(&model, &initial, &contact).unwrap(),
        graph,
        baseline,
        uniform,
        elapsed_contrast,
    }
}

// 8. Graph objective reaches the contact; the joint baseline does not.
fn retargeting_contrast(demo: &Demo) -> Outcome {
    let reduction = demo.initial.contact_cross_error / demo.graph.contact_cross_error;
    outcome(
        demo.graph.hand_distance < 0.05
            && demo.baseline.hand_distance > 0.15
            && reduction >= 5.0
            && demo.elapsed_contrast < Duration::from_secs(600),
        format!(
            "{} contact frames, hand distance IG {:.4} m / baseline {:.4} m / initial {:.4} m, \
             cross error {:.4} -> {:.4} ({reduction:.1}x), {:.0} s",
            demo.graph.contact_frames,
            demo.graph.hand_distance,
            demo.baseline.hand_distance,
            demo.initial.hand_distance,
            demo.initial.contact_cross_error,
            demo.graph.contact_cross_error,
            demo.elapsed_contrast.as_secs_f64()
        ),
    )
}

// 9. Uniform weights against the weighted run on non-contact limbs.
fn weighting_ablation(demo: &Demo) -> Outcome {
    let (u, w) = (demo.uniform.non_contact_self_error, demo.graph.non_contact_self_error);
    outcome(
        u >= 1.1 * w,
        format!(
            "non-contact limb err_self uniform {u:.4} vs weighted {w:.4} (ratio {:.2}, need >= 1.10); \
             uniform hand distance {:.4} m",
            u / w,
            demo.uniform.hand_distance
        ),
    )
}

// 10. CLI outputs are byte-identical across repeats and thread counts.
fn cli_determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_interplay");
    let dir = tempfile::tempdir().unwrap();
    let mut clip = synthetic::high_five_scene();
    clip.frames.truncate(12);
    let clip_path = dir.path().join("clip.json");
    motion::save_scene(&clip, &clip_path).unwrap();
    let params_path = dir.path().join("params.json");
    std::fs::write(&params_path, r#"{"optimizer": {"max_iterations": 15, "restarts": 2}}"#).unwrap();
    let clip_s = clip_path.to_str().unwrap();
    let params_s = params_path.to_str().unwrap();
    let ref_data = data("two_idle.json");
    let eval_data = data("two_idle_perturbed.json");
    let invocations: Vec<Vec<&str>> = vec![
        vec!["synth", "--name", "box-carry"],
        vec!["build-graph", "--ref", &ref_data, "--frame", "3"],
        vec!["eval", "--ref", &ref_data, "--eval", &eval_data, "--format", "csv"],
        vec!["export", "--ref", &ref_data],
        vec!["retarget", "--ref", clip_s, "--scale", "b:*=0.7", "--params", params_s, "--seed", "3"],
    ];
    let mut mismatches = Vec::new();
    for args in &invocations {
        let outputs: Vec<Vec<u8>> = ["1", "1", "4"]
            .iter()
            .map(|threads| {
                let out = Command::new(exe).args(args).args(["--threads", threads]).output().unwrap();
                assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
                out.stdout
            })
            .collect();
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            mismatches.push(args[0]);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{} invocations x (1, 1, 4 threads), mismatches: {mismatches:?}", invocations.len()),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "weight normalization", weight_normalization()),
        (2, "perfect-imitation fixed point", perfect_imitation()),
        (3, "scale robustness", scale_robustness()),
        (4, "cross-edge symmetry", cross_edge_symmetry()),
        (5, "delaunay oracle", delaunay_oracle()),
        (6, "height exclusion", height_exclusion()),
        (7, "gradient check", gradient_check()),
    ];
    let demo = run_demo();
    results.push((8, "retargeting contrast", retargeting_contrast(&demo)));
    results.push((9, "edge-weighting ablation", weighting_ablation(&demo)));
    results.push((10, "cli determinism", cli_determinism()));

    let mut unexpected = Vec::new();
    for (n, name, o) in &results {
        let known = KNOWN_FAILURES.contains(n);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {n:>2} {tag:<12} {name}: {}", o.detail);
        if !o.pass && !known {
            unexpected.push(*n);
        }
    }
    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
