//! One seeded trial: corrupt the second view, draw an initial pose, estimate,
//! and score against the truth. The benchmark command and the acceptance
//! suite both go through here.

use std::time::Instant;

use cfpose::geometry::rotation_angle_between;
use cfpose::simgen::{
    gen_scene, inject_outliers, mismatch_mask, occlude, perturb, perturb_pose_normal,
    perturb_pose_uniform, rng_for, Scene, SceneModel,
};
use cfpose::{
    ransac_solve, select_by_gray, solve, Basis, Convergence, Model, ModelKind, OcclusionConfig,
    Points, Pose, PoseEstimate, PoseProblem, RansacConfig, SolverConfig, Translation,
};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, InitDistribution};
use crate::error::CliResult;

/// Per-trial seed offsets, one per random stage.
pub mod seeds {
    pub const NOISE: u64 = 1000;
    pub const MISMATCH: u64 = 2000;
    pub const INIT: u64 = 3000;
    pub const OUTLIERS: u64 = 4000;
    pub const OCCLUSION: u64 = 5000;
    /// Stream of the initial-pose generator.
    pub const INIT_STREAM: u64 = 7;
    pub const MULTISTART_STREAM: u64 = 11;
}

/// Input of one trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub p: Points,
    pub q: Points,
    /// Index in the clean `Q` of each delivered point; `None` for injected ones.
    pub q_origin: Vec<Option<usize>>,
    pub theta_true: Pose,
    pub theta0: Pose,
}

pub fn model_for(scene: SceneModel) -> Model {
    match scene {
        SceneModel::Bearing => Model::Bearing3D2D,
        SceneModel::Epipolar { .. } => Model::Epipolar2D2D,
    }
}

pub fn draw_theta0(cfg: &ExperimentConfig, s: u64) -> Pose {
    let mut rng = rng_for(seeds::INIT + s, seeds::INIT_STREAM);
    let truth = &cfg.scene.theta_true;
    match cfg.init {
        InitDistribution::Normal => perturb_pose_normal(truth, cfg.noise.b_i, &mut rng),
        InitDistribution::Uniform => perturb_pose_uniform(truth, cfg.noise.b_i, &mut rng),
    }
}

/// Applies noise, mismatch subsampling, outliers and occlusion to the clean
/// scene, in that order, with seeds derived from the trial seed `s`.
pub fn trial_data(cfg: &ExperimentConfig, scene: &Scene, s: u64) -> CliResult<TrialData> {
    let noise = &cfg.noise;
    let mut q = scene.q_clean.clone();
    let mut origin: Vec<Option<usize>> = (0..q.len()).map(Some).collect();
    if noise.b_p > 0.0 {
        q = perturb(&q, noise.b_p, seeds::NOISE + s)?;
    }
    if let Some(b_m) = noise.b_m {
        let keep = mismatch_mask(q.len(), b_m, seeds::MISMATCH + s);
        q = q.select(&keep)?;
        origin = origin.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(o, _)| o).collect();
    }
    if noise.outliers > 0 {
        let (with, _) = inject_outliers(&q, noise.outliers, &noise.outlier_box, cfg.outlier_gray, seeds::OUTLIERS + s)?;
        q = with;
        origin.extend(std::iter::repeat_n(None, noise.outliers));
    }
    if let Some(occ) = &cfg.occlusion {
        let (with, from) = occlude(&q, occ.fraction, &occ.region, occ.gray, seeds::OCCLUSION + s)?;
        q = with;
        origin = from.into_iter().map(|i| i.and_then(|i| origin[i])).collect();
    }
    Ok(TrialData {
        p: scene.p.clone(),
        q,
        q_origin: origin,
        theta_true: cfg.scene.theta_true,
        theta0: draw_theta0(cfg, s),
    })
}

/// Estimation options shared by `estimate` and benchmark trials.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub solver: SolverConfig,
    pub ransac: Option<RansacConfig>,
    pub occlusion: Option<OcclusionConfig>,
    /// Number of starts; the extra ones are drawn around `θ0`.
    pub multistart: usize,
    pub multistart_scale: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RansacDiagnostics {
    /// Plain fit on all points.
    pub initial_theta: Pose,
    pub initial_objective: f64,
    pub best_hypothesis: usize,
    pub inlier_fraction: f64,
    pub threshold_p: f64,
    pub threshold_q: f64,
    pub rejected_p: usize,
    pub rejected_q: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub mean: f64,
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeptPair {
    pub p: usize,
    pub q: usize,
    pub mean_p: f64,
    pub mean_q: f64,
    pub size_p: usize,
    pub size_q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionDiagnostics {
    pub clusters_p: Vec<ClusterInfo>,
    pub clusters_q: Vec<ClusterInfo>,
    pub kept_pairs: Vec<KeptPair>,
    pub kept_p: usize,
    pub kept_q: usize,
}

#[derive(Debug, Clone)]
pub struct EstimateOutcome {
    pub estimate: PoseEstimate,
    /// Start that produced `estimate`.
    pub start: Pose,
    pub ransac: Option<RansacDiagnostics>,
    pub occlusion: Option<OcclusionDiagnostics>,
    pub n_p: usize,
    pub n_q: usize,
}

fn multistart_poses(theta0: &Pose, opts: &EstimateOptions) -> Vec<Pose> {
    let mut rng = rng_for(opts.seed, seeds::MULTISTART_STREAM);
    let mut starts = vec![*theta0];
    for _ in 1..opts.multistart.max(1) {
        starts.push(perturb_pose_normal(theta0, opts.multistart_scale, &mut rng));
    }
    starts
}

/// Runs gray-cluster selection, then plain or RANSAC estimation from every start,
/// keeping the lowest objective (earliest start on ties).
pub fn estimate(problem: &PoseProblem, theta0: &Pose, opts: &EstimateOptions) -> CliResult<EstimateOutcome> {
    let mut occlusion = None;
    let restricted;
    let problem = match &opts.occlusion {
        None => problem,
        Some(ocfg) => {
            let sel = select_by_gray(problem.set_p(), problem.set_q(), ocfg)?;
            let info = |c: &cfpose::GrayCluster| ClusterInfo { mean: c.mean, size: c.members.len() };
            occlusion = Some(OcclusionDiagnostics {
                clusters_p: sel.clusters_p.iter().map(info).collect(),
                clusters_q: sel.clusters_q.iter().map(info).collect(),
                kept_pairs: sel
                    .pairing
                    .pairs
                    .iter()
                    .map(|c| KeptPair {
                        p: c.p,
                        q: c.q,
                        mean_p: sel.clusters_p[c.p].mean,
                        mean_q: sel.clusters_q[c.q].mean,
                        size_p: sel.clusters_p[c.p].members.len(),
                        size_q: sel.clusters_q[c.q].members.len(),
                    })
                    .collect(),
                kept_p: sel.mask_p.iter().filter(|m| **m).count(),
                kept_q: sel.mask_q.iter().filter(|m| **m).count(),
            });
            restricted = problem.restrict(&sel.mask_p, &sel.mask_q)?;
            &restricted
        }
    };

    let mut best: Option<(PoseEstimate, Pose, Option<RansacDiagnostics>)> = None;
    let mut last_err = None;
    for start in multistart_poses(theta0, opts) {
        let attempt = match &opts.ransac {
            None => solve(problem, &start, &opts.solver).map(|e| (e, None)),
            Some(rcfg) => ransac_solve(problem, &start, rcfg, &opts.solver).map(|out| {
                let diag = RansacDiagnostics {
                    initial_theta: out.initial.theta,
                    initial_objective: out.initial.objective,
                    best_hypothesis: out.best_hypothesis,
                    inlier_fraction: out.inlier_fraction,
                    threshold_p: out.threshold.p,
                    threshold_q: out.threshold.q,
                    rejected_p: out.mask_p.iter().filter(|m| !**m).count(),
                    rejected_q: out.mask_q.iter().filter(|m| !**m).count(),
                };
                (out.estimate, Some(diag))
            }),
        };
        match attempt {
            Ok((est, diag)) => {
                if best.as_ref().is_none_or(|(b, _, _)| est.objective < b.objective) {
                    best = Some((est, start, diag));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (estimate, start, ransac) = match best {
        Some(b) => b,
        None => return Err(last_err.expect("at least one start").into()),
    };
    Ok(EstimateOutcome {
        estimate,
        start,
        ransac,
        occlusion,
        n_p: problem.set_p().len(),
        n_q: problem.set_q().len(),
    })
}

/// Errors of an estimate against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseErrors {
    /// Parameter distance with wrapped angles. For a unit-direction translation
    /// the nearer of `±T` is used.
    pub parameter: f64,
    pub rotation_deg: f64,
    /// Angle between translation directions; up to sign for unit directions.
    pub translation_deg: f64,
}

fn flipped(theta: &Pose) -> Option<Pose> {
    match theta.translation {
        Translation::Direction { .. } => {
            let t = -theta.translation_vector();
            Some(Pose::new(theta.angles, Translation::direction_of(&t).ok()?))
        }
        Translation::Free(_) => None,
    }
}

pub fn pose_errors(hat: &Pose, truth: &Pose) -> PoseErrors {
    let mut parameter = hat.distance(truth);
    if let Some(alt) = flipped(truth) {
        parameter = parameter.min(hat.distance(&alt));
    }
    let rotation_deg = rotation_angle_between(&hat.rotation(), &truth.rotation()).to_degrees();
    let (a, b) = (hat.translation_vector(), truth.translation_vector());
    let denom = a.norm() * b.norm();
    let mut translation_deg = if denom > 0.0 {
        (a.dot(&b) / denom).clamp(-1.0, 1.0).acos().to_degrees()
    } else {
        0.0
    };
    if matches!(truth.translation, Translation::Direction { .. }) {
        translation_deg = translation_deg.min(180.0 - translation_deg);
    }
    PoseErrors { parameter, rotation_deg, translation_deg }
}

/// Machine-readable record of one estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub model: ModelKind,
    pub theta_true: Option<Pose>,
    pub theta0: Pose,
    pub theta_hat: Pose,
    /// `‖θ̂ − θ*‖`; absent when the truth is unknown.
    pub error: Option<f64>,
    /// `error ≤ success_threshold`.
    pub success: Option<bool>,
    pub success_threshold: f64,
    pub rotation_error_deg: Option<f64>,
    pub translation_error_deg: Option<f64>,
    /// Error of the plain fit when RANSAC ran.
    pub pre_ransac_error: Option<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub convergence: Convergence,
    pub runtime_ms: f64,
    pub n_p: usize,
    pub n_q: usize,
    pub ransac: Option<RansacDiagnostics>,
    pub occlusion: Option<OcclusionDiagnostics>,
    pub config: serde_json::Value,
}

/// Inputs to [`TrialReport::build`] that do not come from the estimator.
pub struct ReportContext<'a> {
    pub seed: u64,
    pub theta0: &'a Pose,
    pub theta_true: Option<&'a Pose>,
    pub success_threshold: f64,
    pub runtime_ms: f64,
    pub config: serde_json::Value,
}

impl TrialReport {
    pub fn build(model: ModelKind, out: &EstimateOutcome, ctx: ReportContext<'_>) -> Self {
        let errors = ctx.theta_true.map(|t| pose_errors(&out.estimate.theta, t));
        let pre = match (ctx.theta_true, &out.ransac) {
            (Some(t), Some(r)) => Some(pose_errors(&r.initial_theta, t).parameter),
            _ => None,
        };
        Self {
            seed: ctx.seed,
            model,
            theta_true: ctx.theta_true.copied(),
            theta0: *ctx.theta0,
            theta_hat: out.estimate.theta,
            error: errors.map(|e| e.parameter),
            success: errors.map(|e| e.parameter <= ctx.success_threshold),
            success_threshold: ctx.success_threshold,
            rotation_error_deg: errors.map(|e| e.rotation_deg),
            translation_error_deg: errors.map(|e| e.translation_deg),
            pre_ransac_error: pre,
            objective: out.estimate.objective,
            iterations: out.estimate.iterations,
            convergence: out.estimate.reason,
            runtime_ms: ctx.runtime_ms.max(f64::MIN_POSITIVE),
            n_p: out.n_p,
            n_q: out.n_q,
            ransac: out.ransac.clone(),
            occlusion: out.occlusion.clone(),
            config: ctx.config,
        }
    }
}

/// Options implied by an experiment for trial seed `s`.
pub fn experiment_options(cfg: &ExperimentConfig, s: u64) -> EstimateOptions {
    EstimateOptions {
        solver: cfg.solver,
        ransac: cfg.ransac.map(|r| RansacConfig { seed: r.seed.wrapping_add(s), ..r }),
        occlusion: cfg
            .occlusion
            .as_ref()
            .map(|o| OcclusionConfig { seed: o.kmeans.seed.wrapping_add(s), ..o.kmeans }),
        multistart: 1,
        multistart_scale: 0.0,
        seed: s,
    }
}

/// Runs trial `s` on a scene generated from `cfg.scene`. The runtime covers
/// problem construction and estimation.
pub fn run_trial(cfg: &ExperimentConfig, scene: &Scene, s: u64) -> CliResult<TrialReport> {
    let data = trial_data(cfg, scene, s)?;
    let model = model_for(cfg.scene.model);
    let opts = experiment_options(cfg, s);
    let clock = Instant::now();
    let problem = PoseProblem::new(model, data.p, data.q, Basis::paper18())?;
    let out = estimate(&problem, &data.theta0, &opts)?;
    let runtime_ms = clock.elapsed().as_secs_f64() * 1e3;
    Ok(TrialReport::build(
        model.kind(),
        &out,
        ReportContext {
            seed: s,
            theta0: &data.theta0,
            theta_true: Some(&data.theta_true),
            success_threshold: cfg.success_threshold,
            runtime_ms,
            config: serde_json::to_value(cfg).expect("serializable config"),
        },
    ))
}

/// Generates the scene once and runs trial `s`.
pub fn run_single(cfg: &ExperimentConfig, s: u64) -> CliResult<TrialReport> {
    let scene = gen_scene(&cfg.scene)?;
    run_trial(cfg, &scene, s)
}
