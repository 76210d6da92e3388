//! The `interplay` command line.
//!
//! Every output carries a header with the tool version, output format and
//! version, the full parameter set and the seed. Failures print one JSON
//! error document on stderr and exit with 2 (bad input), 3 (numerical or
//! geometric failure) or 4 (I/O).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{build_graph, EntityRef};
use crate::model::ScaleSpec;
use crate::motion::{load_scene, scene_to_json, write_marker_csv, Scene};
use crate::presets;
use crate::retarget::{
    contact_analysis, scaled_scene, substituted_scene, summarize, Objective, ObservationSpec,
    OptimizerConfig, Retargeter, RunSummary, CONTACT_DISTANCE,
};
use crate::reward::{FrameReward, JointRewardParams, RewardModel, RewardParams, WeightingMode};
use crate::synthetic;
use crate::VERSION;

/// Version of the JSON/CSV documents written by the CLI.
pub const OUTPUT_FORMAT_VERSION: u32 = 1;

/// Everything a params file can set. Missing sections take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    pub reward: RewardParams,
    pub optimizer: OptimizerConfig,
    pub joint_baseline: JointRewardParams,
    pub observation: ObservationSpec,
}

impl RunParams {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: RunParams =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("params file: {e}")))?;
        p.reward.validate()?;
        p.optimizer.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Parser)]
#[command(name = "interplay", version, about = "Interaction graphs, rewards and retargeting for multi-character motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump the Interaction Graph of every frame (nodes, edges, classes, features).
    BuildGraph(BuildGraphArgs),
    /// Score an evaluated scene against a reference, per frame and character.
    Eval(EvalArgs),
    /// Retarget a reference scene onto scaled or substituted characters.
    Retarget(RetargetArgs),
    /// Retarget with the graph objective and the joint baseline and tabulate both.
    Compare(CompareArgs),
    /// Write marker tracks as CSV.
    Export(ExportArgs),
    /// Write one of the bundled synthetic scenes.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON params file (sections: reward, optimizer, joint_baseline, observation).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Overrides the edge weighting mode of the params.
    #[arg(long, value_enum)]
    weighting_mode: Option<Weighting>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Weighting {
    Ref,
    Bidir,
}

#[derive(Debug, Args)]
struct BuildGraphArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Only this frame.
    #[arg(long)]
    frame: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    eval: PathBuf,
    /// Output format; inferred from the `--out` extension, JSON otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct TargetArgs {
    /// Limb scaling `[character:]joint=factor`; `*` scales every joint and
    /// no character prefix means every character. Repeatable.
    #[arg(long)]
    scale: Vec<String>,
    /// Character substitution `character=robot|humanoid|<scene file>`; a
    /// scene file contributes its first character.
    #[arg(long)]
    target: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    /// Interaction Graph reward.
    Ig,
    /// Joint-space tracking baseline.
    Joint,
}

#[derive(Debug, Args)]
struct RetargetArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Ig)]
    objective: ObjectiveArg,
    /// Per-frame reward trace (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    /// Reference cross-character distance below which a frame is a contact frame, m.
    #[arg(long, default_value_t = CONTACT_DISTANCE)]
    contact_distance: f64,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthName {
    HighFive,
    BoxCarry,
    TwoIdle,
    Single,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    name: SynthName,
    /// Clip length for the idle scenes.
    #[arg(long, default_value_t = 30)]
    frames: usize,
    #[command(flatten)]
    common: Common,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let doc = json!({"error": {"kind": "usage", "message": e.to_string().trim_end(), "exit_code": 2}});
            eprintln!("{doc}");
            return 2;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            let doc = json!({"error": {"kind": e.kind(), "message": e.to_string(), "exit_code": code}});
            eprintln!("{doc}");
            code
        }
    }
}

fn execute(command: Command) -> Result<()> {
    let common = match &command {
        Command::BuildGraph(a) => &a.common,
        Command::Eval(a) => &a.common,
        Command::Retarget(a) => &a.common,
        Command::Compare(a) => &a.common,
        Command::Export(a) => &a.common,
        Command::Synth(a) => &a.common,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
    pool.install(|| match command {
        Command::BuildGraph(a) => build_graph_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Retarget(a) => retarget_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Export(a) => export_cmd(a),
        Command::Synth(a) => synth_cmd(a),
    })
}

struct Context {
    params: RunParams,
    source: String,
    seed: u64,
}

impl Context {
    fn new(common: &Common) -> Result<Self> {
        if let Some(out) = &common.out {
            check_output(out)?;
        }
        let (mut params, source) = match &common.params {
            Some(p) => (RunParams::load(p)?, p.display().to_string()),
            None => (RunParams::default(), "defaults".to_string()),
        };
        if let Some(w) = common.weighting_mode {
            params.reward.weighting_mode = match w {
                Weighting::Ref => WeightingMode::RefOnly,
                Weighting::Bidir => WeightingMode::Bidirectional,
            };
        }
        params.optimizer.seed = common.seed;
        Ok(Context {
            params,
            source,
            seed: common.seed,
        })
    }

    fn header(&self, command: &str, format: &str, extra: Value) -> Value {
        json!({
            "tool": "interplay",
            "version": VERSION,
            "command": command,
            "format": format,
            "format_version": OUTPUT_FORMAT_VERSION,
            "seed": self.seed,
            "params_source": self.source,
            "params_are_placeholders": self.source == "defaults",
            "params": self.params,
            "run": extra,
        })
    }
}

fn check_output(path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Error::io(
            path.display().to_string(),
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ));
    }
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::io(p.display().to_string(), e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn to_json(value: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

fn format_of(explicit: Option<Format>, out: Option<&Path>) -> Format {
    explicit.unwrap_or_else(|| match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Json,
    })
}

use crate::motion::number;

fn csv_header(header: &Value) -> Vec<u8> {
    format!("# {}\n", serde_json::to_string(header).expect("json values serialize")).into_bytes()
}

fn entity_json(scene: &Scene, e: EntityRef) -> Value {
    let kind = if e.is_character() { "character" } else { "object" };
    json!({"kind": kind, "index": e.index(), "name": scene.entity_name(e)})
}

fn build_graph_cmd(a: BuildGraphArgs) -> Result<()> {
    let ctx = Context::new(&a.common)?;
    let scene = load_scene(&a.reference)?;
    let frames: Vec<usize> = match a.frame {
        Some(f) if f >= scene.frame_count() => {
            return Err(Error::Structure(format!(
                "frame {f} is outside a clip of {} frames",
                scene.frame_count()
            )))
        }
        Some(f) => vec![f],
        None => (0..scene.frame_count()).collect(),
    };
    let dumps = frames
        .par_iter()
        .map(|&f| {
            let g = build_graph(&scene, f)?;
            let nodes: Vec<Value> = g
                .nodes
                .iter()
                .map(|n| {
                    json!({
                        "entity": entity_json(&scene, n.entity),
                        "marker": scene.marker_config(n.entity).markers[n.marker].name,
                        "p": [n.p.x, n.p.y, n.p.z],
                        "v": [n.v.x, n.v.y, n.v.z],
                    })
                })
                .collect();
            let edges: Vec<Value> = g
                .edges
                .iter()
                .map(|e| {
                    json!({
                        "i": e.i,
                        "j": e.j,
                        "class": e.class.label(),
                        "p": [e.p.x, e.p.y, e.p.z],
                        "v": [e.v.x, e.v.y, e.v.z],
                    })
                })
                .collect();
            Ok(json!({"frame": f, "node_count": nodes.len(), "edge_count": edges.len(), "nodes": nodes, "edges": edges}))
        })
        .collect::<Result<Vec<Value>>>()?;
    let header = ctx.header(
        "build-graph",
        "interplay-graph",
        json!({"ref": a.reference.display().to_string(), "frame": a.frame}),
    );
    emit(a.common.out.as_deref(), &to_json(&json!({"header": header, "frames": dumps})))
}

const BREAKDOWN_COLUMNS: [&str; 9] = [
    "err_pos_graph",
    "err_vel_graph",
    "err_root",
    "err_com",
    "r_pos_graph",
    "r_vel_graph",
    "r_root",
    "r_com",
    "r",
];

fn eval_rows(rewards: &[FrameReward]) -> Vec<(usize, usize, [f64; 9], usize)> {
    rewards
        .iter()
        .flat_map(|fr| {
            fr.characters.iter().enumerate().map(move |(c, b)| {
                (
                    fr.frame,
                    c,
                    [
                        b.err_pos_graph,
                        b.err_vel_graph,
                        b.err_root,
                        b.err_com,
                        b.r_pos_graph,
                        b.r_vel_graph,
                        b.r_root,
                        b.r_com,
                        b.r,
                    ],
                    fr.clamp_count,
                )
            })
        })
        .collect()
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let ctx = Context::new(&a.common)?;
    let reference = load_scene(&a.reference)?;
    let evaluated = load_scene(&a.eval)?;
    let model = RewardModel::new(&reference, &evaluated, ctx.params.reward)?;
    let rewards = model.evaluate_scene(&evaluated)?;
    let header = ctx.header(
        "eval",
        "interplay-eval",
        json!({"ref": a.reference.display().to_string(), "eval": a.eval.display().to_string()}),
    );
    let out = a.common.out.as_deref();
    let bytes = match format_of(a.format, out) {
        Format::Csv => {
            let mut buf = csv_header(&header);
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut cols = vec!["frame", "character"];
            cols.extend(BREAKDOWN_COLUMNS);
            cols.push("clamp_count");
            w.write_record(&cols).map_err(csv_error)?;
            for (f, c, values, clamps) in eval_rows(&rewards) {
                let mut rec = vec![f.to_string(), evaluated.characters[c].name.clone()];
                rec.extend(values.iter().map(|v| number(*v)));
                rec.push(clamps.to_string());
                w.write_record(&rec).map_err(csv_error)?;
            }
            buf.extend(w.into_inner().map_err(|e| Error::io("<eval csv>", e.into_error()))?);
            buf
        }
        Format::Json => {
            let frames: Vec<Value> = rewards
                .iter()
                .map(|fr| {
                    let characters: Vec<Value> = fr
                        .characters
                        .iter()
                        .zip(&evaluated.characters)
                        .map(|(b, ch)| {
                            let mut v = serde_json::to_value(b).expect("breakdown serializes");
                            v["character"] = json!(ch.name);
                            v
                        })
                        .collect();
                    json!({"frame": fr.frame, "mean_r": fr.mean_reward(), "clamp_count": fr.clamp_count, "characters": characters})
                })
                .collect();
            let mean = rewards.iter().map(FrameReward::mean_reward).sum::<f64>() / rewards.len() as f64;
            to_json(&json!({"header": header, "mean_reward": mean, "frames": frames}))
        }
    };
    emit(out, &bytes)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Schema(format!("csv output: {e}"))
}

fn character_index(scene: &Scene, key: &str) -> Result<usize> {
    if let Ok(i) = key.parse::<usize>() {
        if i < scene.characters.len() {
            return Ok(i);
        }
    }
    scene
        .characters
        .iter()
        .position(|c| c.name == key)
        .ok_or_else(|| Error::Validation(format!("no character '{key}' in the scene")))
}

/// Parses `--scale` entries into per-character specs.
fn parse_scales(scene: &Scene, entries: &[String]) -> Result<BTreeMap<usize, ScaleSpec>> {
    let mut specs: BTreeMap<usize, ScaleSpec> = BTreeMap::new();
    for entry in entries {
        let (lhs, factor) = entry
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("scale '{entry}' is not [character:]joint=factor")))?;
        let factor: f64 = factor
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("scale '{entry}' has a bad factor")))?;
        let (chars, joint) = match lhs.split_once(':') {
            Some((c, j)) => (vec![character_index(scene, c.trim())?], j.trim()),
            None => ((0..scene.characters.len()).collect(), lhs.trim()),
        };
        for c in chars {
            let sk = &scene.characters[c].skeleton;
            let spec = specs.entry(c).or_default();
            if joint == "*" {
                for j in sk.joints() {
                    spec.factors.insert(j.name.clone(), factor);
                }
            } else {
                if sk.joint_index(joint).is_none() {
                    return Err(Error::Validation(format!(
                        "character '{}' has no joint '{joint}'",
                        scene.characters[c].name
                    )));
                }
                spec.factors.insert(joint.to_string(), factor);
            }
        }
    }
    for (c, spec) in &specs {
        spec.validate(&scene.characters[*c].skeleton)?;
    }
    Ok(specs)
}

/// The `Δq = 0` clip for the requested substitutions and scales.
fn initial_scene(reference: &Scene, target: &TargetArgs) -> Result<(Scene, Value)> {
    let mut scene = reference.clone();
    let mut applied = Vec::new();
    for entry in &target.target {
        let (c, what) = entry
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("target '{entry}' is not character=preset|file")))?;
        let c = character_index(&scene, c.trim())?;
        let (skeleton, markers) = match what.trim() {
            "robot" => (presets::robot_skeleton(), presets::robot_markers()),
            "humanoid" => (presets::humanoid_skeleton(), presets::humanoid_markers()),
            path => {
                let donor = load_scene(path)?;
                let ch = donor.characters.into_iter().next().ok_or_else(|| {
                    Error::Validation(format!("target scene '{path}' has no character"))
                })?;
                (ch.skeleton, ch.markers)
            }
        };
        scene = substituted_scene(&scene, c, skeleton, markers)?;
        applied.push(json!({"character": scene.characters[c].name, "target": what.trim()}));
    }
    let scales = parse_scales(&scene, &target.scale)?;
    let scene = scaled_scene(&scene, &scales)?;
    let scale_doc: Vec<Value> = scales
        .iter()
        .map(|(c, s)| json!({"character": scene.characters[*c].name, "factors": s.factors}))
        .collect();
    Ok((scene, json!({"targets": applied, "scales": scale_doc})))
}

fn objective_of(arg: ObjectiveArg, params: &RunParams) -> Objective {
    match arg {
        ObjectiveArg::Ig => Objective::InteractionGraph,
        ObjectiveArg::Joint => Objective::JointBaseline(params.joint_baseline),
    }
}

fn retarget_cmd(a: RetargetArgs) -> Result<()> {
    let ctx = Context::new(&a.common)?;
    if let Some(t) = &a.trace {
        check_output(t)?;
    }
    let reference = load_scene(&a.reference)?;
    let (initial, setup) = initial_scene(&reference, &a.target)?;
    let objective = objective_of(a.objective, &ctx.params);
    let rt = Retargeter::new(
        &reference,
        &initial,
        ctx.params.reward,
        objective.clone(),
        ctx.params.optimizer.clone(),
    )?;
    let result = rt.optimize_clip()?;
    let failures = result.status.iter().filter(|s| s.failure.is_some()).count();
    let header = ctx.header(
        "retarget",
        crate::motion::FORMAT_NAME,
        json!({
            "ref": a.reference.display().to_string(),
            "objective": objective.label(),
            "setup": setup,
            "mean_reward": result.mean_reward(),
            "failed_frames": failures,
        }),
    );
    let mut scene = result.scene.clone();
    scene.metadata = Some(header.clone());
    emit(a.common.out.as_deref(), scene_to_json(&scene).as_bytes())?;
    if let Some(t) = &a.trace {
        let mut buf = csv_header(&header);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "frame",
            "reward",
            "converged",
            "iterations",
            "reverted",
            "refined",
            "grasp_held",
            "max_residual",
            "failure",
        ])
        .map_err(csv_error)?;
        for (t, ((fr, st), res)) in result
            .rewards
            .iter()
            .zip(&result.status)
            .zip(&result.residuals)
            .enumerate()
        {
            w.write_record([
                t.to_string(),
                number(fr.mean_reward()),
                st.converged.to_string(),
                st.iterations.to_string(),
                st.reverted.to_string(),
                st.refined.to_string(),
                st.grasp_held.to_string(),
                number(res.iter().copied().fold(0.0, f64::max)),
                st.failure.clone().unwrap_or_default(),
            ])
            .map_err(csv_error)?;
        }
        buf.extend(w.into_inner().map_err(|e| Error::io("<trace csv>", e.into_error()))?);
        fs::write(t, buf).map_err(|e| Error::io(t.display().to_string(), e))?;
    }
    Ok(())
}

const SUMMARY_COLUMNS: [&str; 6] = [
    "mean_reward",
    "contact_frames",
    "contact_cross_error",
    "hand_distance",
    "hand_distance_max",
    "non_contact_self_error",
];

fn summary_values(s: &RunSummary) -> [f64; 6] {
    [
        s.mean_reward,
        s.contact_frames as f64,
        s.contact_cross_error,
        s.hand_distance,
        s.hand_distance_max,
        s.non_contact_self_error,
    ]
}

fn compare_cmd(a: CompareArgs) -> Result<()> {
    let ctx = Context::new(&a.common)?;
    if !(a.contact_distance > 0.0) {
        return Err(Error::Validation("contact distance must be positive".into()));
    }
    let reference = load_scene(&a.reference)?;
    let (initial, setup) = initial_scene(&reference, &a.target)?;
    let model = RewardModel::new(&reference, &initial, ctx.params.reward)?;
    let contact = contact_analysis(&model, a.contact_distance)?;
    let mut rows: Vec<(&str, RunSummary)> = vec![("initial", summarize(&model, &initial, &contact)?)];
    for arg in [ObjectiveArg::Ig, ObjectiveArg::Joint] {
        let objective = objective_of(arg, &ctx.params);
        let rt = Retargeter::new(
            &reference,
            &initial,
            ctx.params.reward,
            objective.clone(),
            ctx.params.optimizer.clone(),
        )?;
        let result = rt.optimize_clip()?;
        rows.push((objective.label(), summarize(&model, &result.scene, &contact)?));
    }
    let names = model.node_names();
    let pair_name = |i: usize| format!("{}/{}", reference.entity_name(names[i].0), names[i].1);
    let header = ctx.header(
        "compare",
        "interplay-compare",
        json!({
            "ref": a.reference.display().to_string(),
            "setup": setup,
            "contact_distance": a.contact_distance,
            "contact_pair": [pair_name(contact.pair.0), pair_name(contact.pair.1)],
            "contact_frames": contact.frames,
        }),
    );
    let out = a.common.out.as_deref();
    let bytes = match format_of(a.format, out) {
        Format::Csv => {
            let mut buf = csv_header(&header);
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut cols = vec!["run"];
            cols.extend(SUMMARY_COLUMNS);
            w.write_record(&cols).map_err(csv_error)?;
            for (name, s) in &rows {
                let mut rec = vec![name.to_string()];
                rec.extend(summary_values(s).iter().map(|v| number(*v)));
                w.write_record(&rec).map_err(csv_error)?;
            }
            buf.extend(w.into_inner().map_err(|e| Error::io("<compare csv>", e.into_error()))?);
            buf
        }
        Format::Json => {
            let table: Vec<Value> = rows
                .iter()
                .map(|(name, s)| {
                    let mut v = serde_json::to_value(s).expect("summary serializes");
                    v["run"] = json!(name);
                    v
                })
                .collect();
            to_json(&json!({"header": header, "rows": table}))
        }
    };
    emit(out, &bytes)
}

fn export_cmd(a: ExportArgs) -> Result<()> {
    let ctx = Context::new(&a.common)?;
    let scene = load_scene(&a.reference)?;
    let header = ctx.header(
        "export",
        "interplay-markers",
        json!({"ref": a.reference.display().to_string()}),
    );
    let mut buf = Vec::new();
    let line = serde_json::to_string(&header).expect("json values serialize");
    write_marker_csv(&scene, &[line], &mut buf)?;
    emit(a.common.out.as_deref(), &buf)
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let ctx = Context::new(&a.common)?;
    if a.frames < 2 {
        return Err(Error::Validation("synthetic clips need at least 2 frames".into()));
    }
    let (name, mut scene) = match a.name {
        SynthName::HighFive => ("high-five", synthetic::high_five_scene()),
        SynthName::BoxCarry => ("box-carry", synthetic::box_carry_scene()),
        SynthName::TwoIdle => ("two-idle", synthetic::two_character_idle_scene(a.frames)),
        SynthName::Single => ("single", synthetic::single_character_scene(a.frames)),
    };
    scene.metadata = Some(ctx.header("synth", crate::motion::FORMAT_NAME, json!({"name": name})));
    emit(a.common.out.as_deref(), scene_to_json(&scene).as_bytes())
}
