//! Argument parsing and the four subcommands.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cfpose::io::{read_point_set, read_truth, to_json_pretty, write_point_set, TruthFile};
use cfpose::simgen::gen_scene;
use cfpose::{Basis, Model, ModelKind, Pose, PoseProblem, SolverConfig, TranslationKind};
use cfpose_ingest::{load_image, render_points, save_image, HsvThreshold, Intrinsics};
use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use serde_json::json;

use crate::bench::{run_benchmark, write_csv};
use crate::config::{parse_json, preset, read_json, BenchmarkConfig, ExperimentConfig};
use crate::error::{CliError, CliResult, ExitKind};
use crate::register::{register, RegisterConfig};
use crate::trial::{estimate, trial_data, EstimateOptions, ReportContext, TrialReport};

#[derive(Debug, Parser)]
#[command(name = "cfpose", version, about = "Correspondence-free relative pose estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded scene and write P, Q and truth files.
    Simulate(SimulateArgs),
    /// Estimate the pose relating two point-set files.
    Estimate(EstimateArgs),
    /// Run a seeded benchmark protocol and write CSV and JSON summaries.
    Benchmark(BenchmarkArgs),
    /// Reproject one image's pattern into another through a pose.
    Register(RegisterArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment config (JSON). Defaults apply to omitted fields.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Take the experiment of a named preset (its first cell).
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the scene seed and the trial index.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the number of pattern samples.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Print the resolved config and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Point-set file of the first set (JSON).
    #[arg(long)]
    pub p: PathBuf,
    /// Point-set file of the second set (JSON).
    #[arg(long)]
    pub q: PathBuf,
    /// rigid3d, bearing3d2d, epipolar2d2d or homography2d2d.
    #[arg(long)]
    pub model: String,
    /// Named basis (paper18, identity) or a JSON basis file.
    #[arg(long, default_value = "paper18")]
    pub basis: String,
    /// Reject outliers by random sample consensus.
    #[arg(long)]
    pub ransac: bool,
    /// RANSAC hypotheses.
    #[arg(long, default_value_t = 50)]
    pub hypotheses: usize,
    /// Cluster gray values into K groups and keep the paired clusters.
    #[arg(long, value_name = "K")]
    pub occlusion_kmeans: Option<usize>,
    /// Initial pose: JSON, a JSON file, or comma-separated parameters.
    #[arg(long)]
    pub theta0: Option<String>,
    /// Draw the initial pose around the truth with this scale instead.
    #[arg(long, requires = "truth", conflicts_with = "theta0")]
    pub b_i: Option<f64>,
    /// Number of starts.
    #[arg(long, default_value_t = 1)]
    pub multistart: usize,
    /// Spread of the extra starts around the initial pose.
    #[arg(long, default_value_t = 0.2)]
    pub multistart_scale: f64,
    /// Seed for the extra starts and RANSAC subsets.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Truth file; enables error and success fields.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Plane normal for the homography model.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.0, 0.0, 1.0])]
    pub normal: Vec<f64>,
    /// Plane offset for the homography model.
    #[arg(long, default_value_t = 1.0)]
    pub offset: f64,
    /// Largest parameter error counted as a success.
    #[arg(long, default_value_t = 0.1)]
    pub success_threshold: f64,
    /// Report path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Preset name: table1a, table1b, runtime, outliers150, occlusion, epipolar.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Benchmark config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trials per cell; overrides the preset or config.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Base seed; trial s uses seeds derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for summary.json, summary.csv and trials.jsonl.
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Image whose pattern is reprojected.
    #[arg(long)]
    pub p_image: PathBuf,
    /// Image the pattern is reprojected into.
    #[arg(long)]
    pub q_image: PathBuf,
    /// Pose: JSON, a JSON file (a pose or an estimate report), or six comma-separated values.
    #[arg(long)]
    pub pose: String,
    #[arg(long, default_value_t = 800.0)]
    pub focal_length: f64,
    /// Principal point `CX CY` in pixels; the image center when omitted.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub principal_point: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.0, 0.0, 1.0])]
    pub normal: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub offset: f64,
    /// HSV threshold `HUE_LO HUE_HI SAT_MIN VAL_MIN`, hue in degrees.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub hsv: Option<Vec<f64>>,
    /// Overlay image path (PNG or PPM).
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command. Returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitKind::Usage.code() } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cfpose: {}", e.message);
            e.kind.code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Estimate(a) => estimate_cmd(&a),
        Command::Benchmark(a) => benchmark(&a),
        Command::Register(a) => register_cmd(&a),
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))
}

fn resolve_experiment(a: &SimulateArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(path), _) => read_json::<ExperimentConfig>(path)?,
        (None, Some(name)) => preset(name)?.cells().remove(0).experiment,
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.scene.seed = seed;
        cfg.trial = seed;
    }
    if let Some(n) = a.samples {
        cfg.scene.samples = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let cfg = resolve_experiment(a)?;
    if a.print_config {
        print!("{}", to_json_pretty(&cfg));
        return Ok(());
    }
    let scene = gen_scene(&cfg.scene)?;
    let data = trial_data(&cfg, &scene, cfg.trial)?;
    create_dir(&a.out)?;
    let source = json!({ "generator": "simulate", "seed": cfg.scene.seed, "trial": cfg.trial });
    write_point_set(&a.out.join("p.json"), &data.p, json!({ "view": "P", "meta": source }))?;
    write_point_set(&a.out.join("q.json"), &data.q, json!({ "view": "Q", "meta": source }))?;
    let clean = data.q_origin.iter().enumerate().all(|(i, o)| *o == Some(i)) && data.q_origin.len() == scene.q_clean.len();
    let truth = TruthFile {
        model: crate::trial::model_for(cfg.scene.model).kind(),
        theta_true: cfg.scene.theta_true,
        oracle: scene.oracle.clone(),
        q_origin: if clean { Vec::new() } else { data.q_origin.clone() },
    };
    cfpose::io::write_truth(&a.out.join("truth.json"), &truth)?;
    write_file(&a.out.join("theta0.json"), &to_json_pretty(&data.theta0))?;
    write_file(&a.out.join("config.json"), &to_json_pretty(&cfg))?;

    if let Some(r) = cfg.render {
        let intr = Intrinsics::new(r.focal_length.unwrap_or(cfg.scene.focal_length));
        let uv = |s: &cfpose::Points| -> Vec<(f64, f64)> {
            s.points().iter().map(|p| (p.x / p.z, p.y / p.z)).collect()
        };
        for (name, set) in [("p.png", &data.p), ("q.png", &data.q)] {
            let (img, _) = render_points(uv(set), r.width, r.height, &intr, [255, 0, 0], [235, 235, 230]);
            save_image(&a.out.join(name), &img)?;
        }
    }
    eprintln!(
        "wrote {} P and {} Q points to {}",
        data.p.len(),
        data.q.len(),
        a.out.display()
    );
    Ok(())
}

/// Reads a pose from inline JSON, a JSON file (pose or report), or a
/// comma-separated parameter list laid out for `kind`.
pub fn parse_pose(text: &str, kind: TranslationKind) -> CliResult<Pose> {
    let from_value = |v: serde_json::Value, origin: &str| -> CliResult<Pose> {
        let v = match v.get("theta_hat") {
            Some(inner) => inner.clone(),
            None => v,
        };
        serde_json::from_value(v).map_err(|e| CliError::format(format!("{origin}: {e}")))
    };
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        return from_value(parse_json(trimmed, "pose")?, "pose");
    }
    if trimmed.contains(',') || trimmed.parse::<f64>().is_ok() {
        let vals = trimmed
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::usage(format!("pose `{trimmed}`: {e}")))?;
        return Pose::from_slice(kind, &vals).map_err(|e| CliError::usage(e.to_string()));
    }
    let path = Path::new(trimmed);
    let v: serde_json::Value = read_json(path)?;
    from_value(v, &path.display().to_string())
}

fn model_from_args(a: &EstimateArgs) -> CliResult<Model> {
    let kind: ModelKind = a.model.parse().map_err(|e: cfpose::Error| CliError::usage(e.to_string()))?;
    Ok(match kind {
        ModelKind::Rigid3D => Model::Rigid3D,
        ModelKind::Bearing3D2D => Model::Bearing3D2D,
        ModelKind::Epipolar2D2D => Model::Epipolar2D2D,
        ModelKind::Homography2D2D => {
            Model::homography(Vector3::new(a.normal[0], a.normal[1], a.normal[2]), a.offset)?
        }
    })
}

fn basis_from_arg(arg: &str) -> CliResult<Basis> {
    match Basis::by_name(arg) {
        Ok(b) => Ok(b),
        Err(_) if Path::new(arg).exists() => {
            let text = fs::read_to_string(arg).map_err(|e| CliError::io(format!("{arg}: {e}")))?;
            Ok(Basis::from_json(&text)?)
        }
        Err(e) => Err(CliError::usage(e.to_string())),
    }
}

pub fn estimate_cmd(a: &EstimateArgs) -> CliResult<()> {
    if a.multistart == 0 {
        return Err(CliError::usage("--multistart must be at least 1"));
    }
    let model = model_from_args(a)?;
    let basis = basis_from_arg(&a.basis)?;
    let (set_p, _) = read_point_set(&a.p)?;
    let (set_q, _) = read_point_set(&a.q)?;
    let (dp, dq) = model.set_dims();
    if set_p.dim() != dp || set_q.dim() != dq {
        return Err(CliError::usage(format!(
            "model {} expects {dp}D P and {dq}D Q points, got {}D and {}D",
            model.kind().name(),
            set_p.dim(),
            set_q.dim()
        )));
    }
    let truth = a.truth.as_deref().map(read_truth).transpose()?;
    if let Some(t) = &truth {
        if t.theta_true.translation.kind() != model.translation_kind() {
            return Err(CliError::usage("truth pose does not match the model's translation layout"));
        }
    }
    let kind = model.translation_kind();
    let theta0 = match (&a.theta0, a.b_i, &truth) {
        (Some(text), _, _) => parse_pose(text, kind)?,
        (None, Some(b_i), Some(t)) => {
            let mut rng = cfpose::simgen::rng_for(
                crate::trial::seeds::INIT + a.seed,
                crate::trial::seeds::INIT_STREAM,
            );
            cfpose::simgen::perturb_pose_normal(&t.theta_true, b_i, &mut rng)
        }
        _ => Pose::identity(kind),
    };
    model.check_pose(&theta0).map_err(|e| CliError::usage(e.to_string()))?;

    let opts = EstimateOptions {
        solver: SolverConfig::default(),
        ransac: a.ransac.then(|| cfpose::RansacConfig {
            hypotheses: a.hypotheses,
            seed: a.seed,
            ..Default::default()
        }),
        occlusion: a.occlusion_kmeans.map(|k| cfpose::OcclusionConfig {
            clusters: k,
            seed: a.seed,
            ..Default::default()
        }),
        multistart: a.multistart,
        multistart_scale: a.multistart_scale,
        seed: a.seed,
    };
    let clock = Instant::now();
    let problem = PoseProblem::new(model, set_p, set_q, basis)?;
    let out = estimate(&problem, &theta0, &opts)?;
    let runtime_ms = clock.elapsed().as_secs_f64() * 1e3;
    let config = json!({
        "p": a.p, "q": a.q, "model": model, "basis": a.basis, "truth": a.truth,
        "options": opts, "theta0": theta0,
    });
    let report = TrialReport::build(
        model.kind(),
        &out,
        ReportContext {
            seed: a.seed,
            theta0: &theta0,
            theta_true: truth.as_ref().map(|t| &t.theta_true),
            success_threshold: a.success_threshold,
            runtime_ms,
            config,
        },
    );
    emit(a.out.as_deref(), &to_json_pretty(&report))
}

pub fn benchmark(a: &BenchmarkArgs) -> CliResult<()> {
    let (name, mut cfg) = match (&a.preset, &a.config) {
        (Some(p), _) => (p.clone(), preset(p)?),
        (None, Some(path)) => (path.display().to_string(), read_json::<BenchmarkConfig>(path)?),
        (None, None) => return Err(CliError::usage("benchmark needs --preset or --config")),
    };
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let (summary, records) = run_benchmark(&name, &cfg)?;
    create_dir(&a.out)?;
    write_file(&a.out.join("summary.json"), &to_json_pretty(&summary))?;
    write_csv(&summary, &a.out.join("summary.csv"))?;
    let mut lines = String::new();
    for r in &records {
        lines.push_str(&serde_json::to_string(r).expect("serializable record"));
        lines.push('\n');
    }
    write_file(&a.out.join("trials.jsonl"), &lines)?;
    for c in &summary.cells {
        eprintln!("{:<24} {:>4}/{:<4} mean {:.1} ms", c.label, c.successes, c.trials, c.mean_runtime_ms);
    }
    if let Some(fit) = summary.runtime_fit {
        eprintln!("runtime fit: slope {:.3e} ms/point, R² {:.4}", fit.slope, fit.r_squared);
    }
    Ok(())
}

pub fn register_cmd(a: &RegisterArgs) -> CliResult<()> {
    let theta = parse_pose(&a.pose, TranslationKind::Free)?;
    let threshold = match &a.hsv {
        Some(v) => HsvThreshold { hue_lo: v[0], hue_hi: v[1], sat_min: v[2], val_min: v[3] },
        None => HsvThreshold::default(),
    };
    let cfg = RegisterConfig {
        threshold,
        intrinsics: Intrinsics {
            focal_length: a.focal_length,
            principal_point: a.principal_point.as_ref().map(|v| [v[0], v[1]]),
        },
        normal: [a.normal[0], a.normal[1], a.normal[2]],
        offset: a.offset,
    };
    let p_img = load_image(&a.p_image)?;
    let q_img = load_image(&a.q_image)?;
    let (report, overlay) = register(&p_img, &q_img, &theta, &cfg)?;
    if let Some(path) = &a.overlay {
        save_image(path, &overlay)?;
    }
    emit(a.out.as_deref(), &to_json_pretty(&report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_parsing_forms() {
        let p = parse_pose("0.1,0.2,0.3,1,2,3", TranslationKind::Free).unwrap();
        assert_eq!(p, Pose::rigid(0.1, 0.2, 0.3, Vector3::new(1.0, 2.0, 3.0)));
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(parse_pose(&json, TranslationKind::Free).unwrap(), p);
        let report = format!("{{\"theta_hat\": {json}, \"other\": 1}}");
        assert_eq!(parse_pose(&report, TranslationKind::Free).unwrap(), p);
        assert_eq!(parse_pose("1,2", TranslationKind::Free).unwrap_err().kind, ExitKind::Usage);
        let d = parse_pose("0,0,0,0.5,0.1", TranslationKind::UnitDirection).unwrap();
        assert_eq!(d.dof(), 5);
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(main_with_args(["cfpose", "estimate", "--bogus"]), 64);
        assert_eq!(main_with_args(["cfpose"]), 64);
        assert_eq!(main_with_args(["cfpose", "--help"]), 0);
    }
}
