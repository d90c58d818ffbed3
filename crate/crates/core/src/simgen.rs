//! Synthetic scenes: a smooth planar pattern seen by two pinhole cameras.
//!
//! The first camera looks straight at the pattern plane at depth `λ`. Points are
//! carried in normalized image coordinates (pixels divided by the focal length).
//! The second view is obtained by moving the camera with `(R, T)`; a 3D point `X`
//! in the first camera frame becomes `R X + T` in the second. For the bearing
//! model the pose is expressed with the depth-scaled translation `T̄ = T / λ`.

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{EulerAngles, PointSet, PoseParams, Translation};

/// Deterministic RNG for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Closed pattern curve in the plane, in normalized image units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CurveKind {
    /// `r(t) = a + b cos(lobes · t)` around `center`.
    Limacon {
        a: f64,
        b: f64,
        lobes: u32,
        center: [f64; 2],
    },
    Ellipse {
        rx: f64,
        ry: f64,
        center: [f64; 2],
    },
    /// `r(t) = a + Σ amplitude · cos(order · t + phase)` over `[order, amplitude, phase]` rows.
    Radial {
        a: f64,
        harmonics: Vec<[f64; 3]>,
        center: [f64; 2],
    },
}

impl Default for CurveKind {
    fn default() -> Self {
        CurveKind::Limacon {
            a: 0.405,
            b: 0.225,
            lobes: 1,
            center: [0.045, -0.018],
        }
    }
}

impl CurveKind {
    pub fn point(&self, t: f64) -> [f64; 2] {
        match *self {
            CurveKind::Limacon { a, b, lobes, center } => {
                let r = a + b * (lobes as f64 * t).cos();
                [center[0] + r * t.cos(), center[1] + r * t.sin()]
            }
            CurveKind::Ellipse { rx, ry, center } => {
                [center[0] + rx * t.cos(), center[1] + ry * t.sin()]
            }
            CurveKind::Radial { a, ref harmonics, center } => {
                let r = a + harmonics.iter().map(|h| h[1] * (h[0] * t + h[2]).cos()).sum::<f64>();
                [center[0] + r * t.cos(), center[1] + r * t.sin()]
            }
        }
    }
}

/// Which relation the second view is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SceneModel {
    /// `P` holds 3D points divided by `λ`, `Q` the second image.
    Bearing,
    /// `P` and `Q` are both images; `‖T‖ = 1`. A nonzero `relief` moves pattern
    /// points off the plane by `λ · relief · sin(2t)` in depth.
    Epipolar { relief: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Focal length in pixels; used when points are rasterized.
    pub focal_length: f64,
    /// Depth of the pattern plane from the first camera.
    pub depth: f64,
    pub curve: CurveKind,
    pub samples: usize,
    pub model: SceneModel,
    /// Ground-truth pose; free `T̄` for the bearing model, unit direction for epipolar.
    pub theta_true: PoseParams<f64>,
    /// Gray values of consecutive arcs of the curve.
    pub gray_levels: Vec<f64>,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            focal_length: 800.0,
            depth: 2.0,
            curve: CurveKind::default(),
            samples: 3142,
            model: SceneModel::Bearing,
            theta_true: default_theta_true(),
            gray_levels: vec![0.2, 0.4, 0.6, 0.8],
            seed: 0,
        }
    }
}

/// Ground truth used by the bearing presets.
pub fn default_theta_true() -> PoseParams<f64> {
    PoseParams::rigid(0.25, -0.25, 0.2, Vector3::new(0.3, -0.25, 0.25))
}

impl SceneConfig {
    /// Two-view scene with depth relief and a unit baseline.
    pub fn epipolar() -> Self {
        let direction = Translation::direction_of(&Vector3::new(0.8, 0.1, 0.3)).expect("nonzero");
        Self {
            depth: 3.0,
            model: SceneModel::Epipolar { relief: 0.3 },
            theta_true: PoseParams::new(EulerAngles::new(0.1, -0.1, 0.05), direction),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length > 0.0 && self.focal_length.is_finite()) {
            return Err(invalid("focal_length must be positive"));
        }
        if !(self.depth > 0.0 && self.depth.is_finite()) {
            return Err(invalid("depth must be positive"));
        }
        if self.samples < 5 {
            return Err(invalid("samples must be at least 5"));
        }
        if self.gray_levels.is_empty() {
            return Err(invalid("gray_levels must be nonempty"));
        }
        let expect_direction = matches!(self.model, SceneModel::Epipolar { .. });
        let is_direction = matches!(self.theta_true.translation, Translation::Direction { .. });
        if expect_direction != is_direction {
            return Err(invalid("theta_true translation does not match the scene model"));
        }
        if !self.theta_true.is_finite() {
            return Err(invalid("theta_true must be finite"));
        }
        Ok(())
    }
}

/// The true correspondence, kept for tests and evaluation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePermutation {
    /// `p_to_q[k]` is the index in `Q` of the image of `P[k]`.
    pub p_to_q: Vec<usize>,
    /// True for `Q` points that are not the image of any `P` point.
    pub q_outlier: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub p: PointSet<f64>,
    pub q_clean: PointSet<f64>,
    pub oracle: OraclePermutation,
}

fn curve_gray(levels: &[f64], t: f64) -> f64 {
    let frac = (t / std::f64::consts::TAU).clamp(0.0, 1.0 - 1e-12);
    levels[(frac * levels.len() as f64) as usize]
}

/// Samples the pattern, images it from both cameras and shuffles the second set.
pub fn gen_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let n = cfg.samples;
    let rot = cfg.theta_true.rotation();
    let (relief, t_cam) = match cfg.model {
        SceneModel::Bearing => (0.0, cfg.theta_true.translation_vector() * cfg.depth),
        SceneModel::Epipolar { relief } => (relief, cfg.theta_true.translation_vector()),
    };

    let mut p_pts = Vec::with_capacity(n);
    let mut q_pts = Vec::with_capacity(n);
    let mut gray = Vec::with_capacity(n);
    for k in 0..n {
        let t = std::f64::consts::TAU * k as f64 / n as f64;
        let [u, v] = cfg.curve.point(t);
        let z = cfg.depth * (1.0 + relief * (2.0 * t).sin());
        let x = Vector3::new(u * cfg.depth, v * cfg.depth, z);
        let x2 = rot * x + t_cam;
        if x2.z <= 1e-9 || z <= 1e-9 {
            continue;
        }
        match cfg.model {
            SceneModel::Bearing => p_pts.push(x / cfg.depth),
            SceneModel::Epipolar { .. } => p_pts.push(x / z),
        }
        q_pts.push(Vector3::new(x2.x / x2.z, x2.y / x2.z, 1.0));
        gray.push(curve_gray(&cfg.gray_levels, t));
    }
    let rejected = n - p_pts.len();
    if rejected * 100 > n {
        return Err(invalid(format!("{rejected} of {n} points fall behind a camera")));
    }

    let mut perm: Vec<usize> = (0..q_pts.len()).collect();
    perm.shuffle(&mut rng_for(cfg.seed, 0));
    let mut q_shuffled = vec![Vector3::zeros(); q_pts.len()];
    let mut q_gray = vec![0.0; q_pts.len()];
    for (k, &dst) in perm.iter().enumerate() {
        q_shuffled[dst] = q_pts[k];
        q_gray[dst] = gray[k];
    }

    let p_dim = match cfg.model {
        SceneModel::Bearing => 3,
        SceneModel::Epipolar { .. } => 2,
    };
    let q_len = q_shuffled.len();
    Ok(Scene {
        p: PointSet::from_parts(p_dim, p_pts, Some(gray))?,
        q_clean: PointSet::from_parts(2, q_shuffled, Some(q_gray))?,
        oracle: OraclePermutation {
            p_to_q: perm,
            q_outlier: vec![false; q_len],
        },
    })
}

/// Noise and perturbation settings for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Standard deviation of image noise, in normalized image units.
    pub b_p: f64,
    /// Scale of the initial-condition perturbation.
    pub b_i: f64,
    /// Mismatch threshold; a `Q` point survives when `|randn| ≤ b_m`.
    pub b_m: Option<f64>,
    pub outliers: usize,
    pub outlier_box: Rect,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            b_p: 0.0,
            b_i: 0.2,
            b_m: None,
            outliers: 0,
            outlier_box: Rect::default(),
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && !v.is_nan();
        if !ok(self.b_p) || !ok(self.b_i) || !self.b_m.is_none_or(ok) {
            return Err(invalid("noise scales must be nonnegative"));
        }
        self.outlier_box.validate()
    }
}

/// Axis-aligned rectangle `[min, min + size]` in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub size: [f64; 2],
}

impl Default for Rect {
    fn default() -> Self {
        Self {
            min: [-0.6, -0.4],
            size: [0.05, 0.05],
        }
    }
}

impl Rect {
    fn validate(&self) -> Result<()> {
        if !(self.size[0] >= 0.0 && self.size[1] >= 0.0) {
            return Err(invalid("outlier box size must be nonnegative"));
        }
        Ok(())
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        (self.min[0] + self.size[0] * a, self.min[1] + self.size[1] * b)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.min[0] && u <= self.min[0] + self.size[0] && v >= self.min[1] && v <= self.min[1] + self.size[1]
    }
}

/// Adds `b_p · randn` to each image coordinate (all three for spatial sets).
pub fn perturb(q: &PointSet<f64>, b_p: f64, seed: u64) -> Result<PointSet<f64>> {
    if b_p == 0.0 {
        return Ok(q.clone());
    }
    let mut rng = rng_for(seed, 1);
    let comps = if q.dim() == 2 { 2 } else { 3 };
    let pts = q
        .points()
        .iter()
        .map(|p| {
            let mut p = *p;
            for c in 0..comps {
                let e: f64 = rng.sample(StandardNormal);
                p[c] += b_p * e;
            }
            p
        })
        .collect();
    PointSet::from_parts(q.dim(), pts, q.gray().map(<[f64]>::to_vec))
}

/// Keep-mask for mismatch subsampling: point `k` survives when `|randn| ≤ b_m`.
pub fn mismatch_mask(n: usize, b_m: f64, seed: u64) -> Vec<bool> {
    let mut rng = rng_for(seed, 2);
    (0..n)
        .map(|_| {
            let e: f64 = rng.sample(StandardNormal);
            e.abs() <= b_m
        })
        .collect()
}

pub fn subsample_mismatch(q: &PointSet<f64>, b_m: f64, seed: u64) -> Result<PointSet<f64>> {
    q.select(&mismatch_mask(q.len(), b_m, seed))
}

/// Appends `count` points drawn uniformly from `bbox`. Returns the new set and
/// per-point outlier labels.
pub fn inject_outliers(
    q: &PointSet<f64>,
    count: usize,
    bbox: &Rect,
    outlier_gray: f64,
    seed: u64,
) -> Result<(PointSet<f64>, Vec<bool>)> {
    if q.dim() != 2 {
        return Err(invalid("outliers are injected into image sets"));
    }
    let mut rng = rng_for(seed, 3);
    let extra: Vec<(f64, f64)> = (0..count).map(|_| bbox.sample(&mut rng)).collect();
    let mut labels = vec![false; q.len()];
    labels.extend(std::iter::repeat_n(true, count));
    if count == 0 {
        return Ok((q.clone(), labels));
    }
    let mut out = PointSet::planar(extra)?;
    if q.gray().is_some() {
        out = out.with_gray(vec![outlier_gray; count])?;
    }
    Ok((q.concat(&out)?, labels))
}

/// Default region covered by an occluding object: the middle of the pattern.
pub fn default_occluder() -> Rect {
    Rect {
        min: [-0.1, -0.15],
        size: [0.3, 0.3],
    }
}

/// Occludes a scattered `fraction` of the pattern: that many randomly chosen
/// points disappear and the same number of occluder pixels of gray
/// `occluder_gray` appear uniformly inside `region`. Returns the set and, per
/// point, its index in `q` (`None` for occluder points).
pub fn occlude(
    q: &PointSet<f64>,
    fraction: f64,
    region: &Rect,
    occluder_gray: f64,
    seed: u64,
) -> Result<(PointSet<f64>, Vec<Option<usize>>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(invalid("occlusion fraction must lie in [0, 1)"));
    }
    if q.dim() != 2 || q.gray().is_none() {
        return Err(invalid("occlusion applies to image sets with gray values"));
    }
    region.validate()?;
    let mut rng = rng_for(seed, 4);
    let n = q.len();
    let hidden = (fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut keep = vec![true; n];
    for &i in &order[..hidden] {
        keep[i] = false;
    }
    let visible = q.select(&keep)?;
    let mut origin: Vec<Option<usize>> = (0..n).filter(|&i| keep[i]).map(Some).collect();
    if hidden == 0 {
        return Ok((visible, origin));
    }
    let pts: Vec<(f64, f64)> = (0..hidden).map(|_| region.sample(&mut rng)).collect();
    let occ = PointSet::planar(pts)?.with_gray(vec![occluder_gray; hidden])?;
    origin.extend(std::iter::repeat_n(None, hidden));
    Ok((visible.concat(&occ)?, origin))
}

/// `θ* + scale · randn(dof)`.
pub fn perturb_pose_normal<R: Rng>(theta: &PoseParams<f64>, scale: f64, rng: &mut R) -> PoseParams<f64> {
    let mut v = theta.to_vector();
    for x in v.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *x += scale * e;
    }
    PoseParams::from_slice(theta.translation.kind(), v.as_slice()).expect("same layout")
}

/// `θ* + scale · rand(dof)` with uniform draws on `[0, 1)`.
pub fn perturb_pose_uniform<R: Rng>(theta: &PoseParams<f64>, scale: f64, rng: &mut R) -> PoseParams<f64> {
    let mut v = theta.to_vector();
    for x in v.iter_mut() {
        let e: f64 = rng.random();
        *x += scale * e;
    }
    PoseParams::from_slice(theta.translation.kind(), v.as_slice()).expect("same layout")
}
