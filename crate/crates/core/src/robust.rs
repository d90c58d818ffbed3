//! Outlier rejection by consensus over random subsets, and occlusion handling by
//! pairing gray-value clusters of the two sets.
//!
//! Without correspondences a point's residual is its distance to the nearest
//! point of the other set once both are expressed in the model's output space.

use std::cmp::Ordering;

use nalgebra::Vector3;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{CorrespondenceModel, ModelKind, PointSet, PoseFrame, PoseParams};
use crate::scalar::Real;
use crate::simgen::rng_for;
use crate::solver::{solve, Estimate, Problem, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacConfig {
    /// Fraction of each set drawn for one hypothesis.
    pub subset_fraction: f64,
    pub hypotheses: usize,
    /// Inlier distance; derived from the residuals of the initial fit when unset.
    pub threshold: Option<f64>,
    /// Extra re-scoring passes after the first inlier refit.
    pub refine_rounds: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            subset_fraction: 0.5,
            hypotheses: 50,
            threshold: None,
            refine_rounds: 3,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.subset_fraction > 0.0 && self.subset_fraction <= 1.0) {
            return Err(invalid("subset_fraction must lie in (0, 1]"));
        }
        if self.hypotheses == 0 {
            return Err(invalid("at least one hypothesis is required"));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("threshold must be positive"));
            }
        }
        Ok(())
    }
}

/// Nearest-neighbour distances for both sets; `+∞` marks degenerate points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResiduals {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl PointResiduals {
    pub fn masks(&self, tau: &Thresholds) -> (Vec<bool>, Vec<bool>) {
        let m = |v: &[f64], t: f64| v.iter().map(|r| *r <= t).collect();
        (m(&self.p, tau.p), m(&self.q, tau.q))
    }

    pub fn inlier_count(&self, tau: &Thresholds) -> usize {
        self.p.iter().filter(|r| **r <= tau.p).count() + self.q.iter().filter(|r| **r <= tau.q).count()
    }
}

/// Inlier distances for the `P` and `Q` residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub p: f64,
    pub q: f64,
}

impl Thresholds {
    pub fn uniform(t: f64) -> Self {
        Self { p: t, q: t }
    }
}

/// Sorted-by-x sweep for exact nearest neighbours in three dimensions.
struct Sweep {
    pts: Vec<[f64; 3]>,
}

impl Sweep {
    fn new(mut pts: Vec<[f64; 3]>) -> Self {
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
        Self { pts }
    }

    fn nearest(&self, x: &[f64; 3]) -> f64 {
        if self.pts.is_empty() {
            return f64::INFINITY;
        }
        let start = self.pts.partition_point(|p| p[0] < x[0]);
        let d2 = |p: &[f64; 3]| (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2) + (p[2] - x[2]).powi(2);
        let mut best = f64::INFINITY;
        for p in &self.pts[start..] {
            if (p[0] - x[0]).powi(2) >= best {
                break;
            }
            best = best.min(d2(p));
        }
        for p in self.pts[..start].iter().rev() {
            if (p[0] - x[0]).powi(2) >= best {
                break;
            }
            best = best.min(d2(p));
        }
        best.sqrt()
    }
}

fn to_f64<T: Real>(v: &Vector3<T>) -> [f64; 3] {
    [v.x.as_f64(), v.y.as_f64(), v.z.as_f64()]
}

/// Maps both sets into the space where true pairs coincide: `h(p, θ)` against
/// `q` (rigid), `q/‖q‖` (bearing, homography) or `g(q, θ)` (epipolar).
fn output_space<T: Real>(
    model: &CorrespondenceModel<T>,
    set_p: &PointSet<T>,
    set_q: &PointSet<T>,
    theta: &PoseParams<T>,
) -> Result<(Vec<Option<[f64; 3]>>, Vec<Option<[f64; 3]>>)> {
    let frame = PoseFrame::new(model, theta)?;
    let hp = set_p
        .points()
        .iter()
        .map(|p| frame.map(p).ok().map(|v| to_f64(&v)))
        .collect();
    let hq = set_q
        .points()
        .iter()
        .map(|q| {
            let v = match model.kind() {
                ModelKind::Rigid3D => Some(*q),
                ModelKind::Bearing3D2D | ModelKind::Homography2D2D => Some(q / q.norm()),
                ModelKind::Epipolar2D2D => frame.map_q(q).ok(),
            };
            v.map(|v| to_f64(&v))
        })
        .collect();
    Ok((hp, hq))
}

fn distances(from: &[Option<[f64; 3]>], to: &[Option<[f64; 3]>]) -> Vec<f64> {
    let sweep = Sweep::new(to.iter().flatten().copied().collect());
    from.iter()
        .map(|x| x.map_or(f64::INFINITY, |x| sweep.nearest(&x)))
        .collect()
}

/// Residual of each `P` point: distance from `h(p, θ)` to the nearest `Q` point.
pub fn per_point_residual<T: Real>(
    model: &CorrespondenceModel<T>,
    set_p: &PointSet<T>,
    set_q: &PointSet<T>,
    theta: &PoseParams<T>,
) -> Result<Vec<f64>> {
    let (hp, hq) = output_space(model, set_p, set_q, theta)?;
    Ok(distances(&hp, &hq))
}

/// Residuals of both sets, each against the nearest point of the other.
pub fn per_point_residuals<T: Real>(
    model: &CorrespondenceModel<T>,
    set_p: &PointSet<T>,
    set_q: &PointSet<T>,
    theta: &PoseParams<T>,
) -> Result<PointResiduals> {
    let (hp, hq) = output_space(model, set_p, set_q, theta)?;
    Ok(PointResiduals {
        p: distances(&hp, &hq),
        q: distances(&hq, &hp),
    })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Smallest threshold ever returned by [`mad_threshold`].
pub const MIN_THRESHOLD: f64 = 1e-8;

fn side_threshold(res: &[f64]) -> f64 {
    let mut v: Vec<f64> = res.iter().copied().filter(|r| r.is_finite()).collect();
    if v.is_empty() {
        return MIN_THRESHOLD;
    }
    let med = median(&mut v);
    let mut dev: Vec<f64> = v.iter().map(|r| (r - med).abs()).collect();
    let mad = median(&mut dev);
    (med + 5.0 * 1.4826 * mad).max(MIN_THRESHOLD)
}

/// `median + 5 · 1.4826 · MAD` over the finite residuals of each set separately.
/// Dense noisy sets make one side's residuals much smaller than the other's, so
/// the two sides are not pooled.
pub fn mad_threshold(res: &PointResiduals) -> Thresholds {
    Thresholds {
        p: side_threshold(&res.p),
        q: side_threshold(&res.q),
    }
}

#[derive(Debug, Clone)]
pub struct RansacOutcome<T: Real> {
    pub estimate: Estimate<T>,
    /// Plain fit on all points, used to set the threshold.
    pub initial: Estimate<T>,
    pub mask_p: Vec<bool>,
    pub mask_q: Vec<bool>,
    pub threshold: Thresholds,
    /// Winning hypothesis; 0 is the fit on all points.
    pub best_hypothesis: usize,
    /// Inlier share of both sets under the best hypothesis.
    pub inlier_fraction: f64,
}

struct Hypothesis<T: Real> {
    index: usize,
    inliers: usize,
    objective: f64,
    theta: PoseParams<T>,
}

fn subset_mask<R: Rng>(n: usize, fraction: f64, rng: &mut R) -> Vec<bool> {
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut mask = vec![false; n];
    for i in sample(rng, n, k) {
        mask[i] = true;
    }
    mask
}

fn better<T: Real>(a: &Hypothesis<T>, b: &Hypothesis<T>) -> bool {
    match a.inliers.cmp(&b.inliers) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match a.objective.total_cmp(&b.objective) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a.index < b.index,
        },
    }
}

/// Fits `problem` restricted to the masks from each start and keeps the lower objective.
fn refit<T: Real>(
    problem: &Problem<T>,
    mask_p: &[bool],
    mask_q: &[bool],
    starts: &[PoseParams<T>],
    cfg: &SolverConfig,
) -> Result<Estimate<T>> {
    let sub = problem.restrict(mask_p, mask_q)?;
    let mut best: Option<Estimate<T>> = None;
    let mut last_err = None;
    for s in starts {
        match solve(&sub, s, cfg) {
            Ok(e) => {
                if best.as_ref().is_none_or(|b| e.objective < b.objective) {
                    best = Some(e);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::Degenerate))
}

/// Consensus fit: hypotheses are fitted on random subsets of both sets, scored by
/// how many points of either set lie within the threshold of the other set, and
/// the best one is refitted on its inliers. The plain fit on all points competes
/// as hypothesis 0. Inlier masks are then re-derived at the refit and the fit
/// repeated until they settle or `refine_rounds` is used up.
pub fn ransac_solve<T: Real>(
    problem: &Problem<T>,
    theta0: &PoseParams<T>,
    ransac: &RansacConfig,
    solver: &SolverConfig,
) -> Result<RansacOutcome<T>> {
    ransac.validate()?;
    let model = problem.model();
    let (set_p, set_q) = (problem.set_p(), problem.set_q());
    let total = set_p.len() + set_q.len();

    let initial = solve(problem, theta0, solver)?;
    let res0 = per_point_residuals(model, set_p, set_q, &initial.theta)?;
    let threshold = ransac.threshold.map_or_else(|| mad_threshold(&res0), Thresholds::uniform);

    // Hypothesis 0 is the fit on all points; the rest use random subsets.
    let full = Hypothesis {
        index: 0,
        inliers: res0.inlier_count(&threshold),
        objective: initial.objective.as_f64(),
        theta: initial.theta,
    };
    let mut hypotheses: Vec<Hypothesis<T>> = (1..=ransac.hypotheses)
        .into_par_iter()
        .filter_map(|index| {
            let mut rng = rng_for(ransac.seed, 1000 + index as u64);
            let mp = subset_mask(set_p.len(), ransac.subset_fraction, &mut rng);
            let mq = subset_mask(set_q.len(), ransac.subset_fraction, &mut rng);
            let sub = problem.restrict(&mp, &mq).ok()?;
            let est = solve(&sub, &initial.theta, solver).ok()?;
            let res = per_point_residuals(model, set_p, set_q, &est.theta).ok()?;
            Some(Hypothesis {
                index,
                inliers: res.inlier_count(&threshold),
                objective: est.objective.as_f64(),
                theta: est.theta,
            })
        })
        .collect();
    hypotheses.insert(0, full);
    let best = hypotheses
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("full-set hypothesis");
    let inlier_fraction = best.inliers as f64 / total as f64;
    if inlier_fraction < 0.1 {
        return Err(Error::NoConsensus { inlier_fraction });
    }

    let res = per_point_residuals(model, set_p, set_q, &best.theta)?;
    let (mut mask_p, mut mask_q) = res.masks(&threshold);
    let mut estimate = refit(problem, &mask_p, &mask_q, &[best.theta, initial.theta], solver)?;
    for _ in 0..ransac.refine_rounds {
        let res = per_point_residuals(model, set_p, set_q, &estimate.theta)?;
        let tau = ransac.threshold.map_or_else(|| mad_threshold(&res), Thresholds::uniform);
        let (np, nq) = res.masks(&tau);
        if np == mask_p && nq == mask_q {
            break;
        }
        if np.iter().filter(|m| **m).count() + nq.iter().filter(|m| **m).count() < total / 10 {
            break;
        }
        let next = refit(problem, &np, &nq, &[estimate.theta, initial.theta], solver)?;
        mask_p = np;
        mask_q = nq;
        estimate = next;
    }

    Ok(RansacOutcome {
        estimate,
        initial,
        mask_p,
        mask_q,
        threshold,
        best_hypothesis: best.index,
        inlier_fraction,
    })
}

/// Members of one gray-value cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayCluster {
    /// Indices into the clustered set, ascending.
    pub members: Vec<usize>,
    pub mean: f64,
}

/// One-dimensional k-means on gray values.
///
/// Identical values always share a cluster, so at most as many clusters as
/// distinct values are returned. Seeding is k-means++ from `seed`; Lloyd steps
/// run until centroids move less than 1e-9 (at most 100 steps), followed by
/// single-value reassignments that lower the within-cluster sum of squares.
/// Clusters are returned sorted by mean, which makes the partition independent
/// of input order.
pub fn kmeans_gray(grays: &[f64], k: usize, seed: u64) -> Result<Vec<GrayCluster>> {
    if k == 0 || grays.len() < k {
        return Err(invalid("kmeans needs 1 <= k <= number of values"));
    }
    if grays.iter().any(|g| !g.is_finite()) {
        return Err(invalid("gray values must be finite"));
    }
    // Distinct values with multiplicities, ascending.
    let mut sorted = grays.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for g in sorted {
        if values.last() == Some(&g) {
            *weights.last_mut().expect("nonempty") += 1.0;
        } else {
            values.push(g);
            weights.push(1.0);
        }
    }
    let k = k.min(values.len());
    let mut rng = rng_for(seed, 5);

    let mut centers = Vec::with_capacity(k);
    let first = pick_weighted(&weights, &mut rng);
    centers.push(values[first]);
    while centers.len() < k {
        let w: Vec<f64> = values
            .iter()
            .zip(&weights)
            .map(|(v, w)| w * centers.iter().map(|c| (v - c).powi(2)).fold(f64::INFINITY, f64::min))
            .collect();
        centers.push(values[pick_weighted(&w, &mut rng)]);
    }

    let nearest = |centers: &[f64], v: f64| -> usize {
        let mut best = 0;
        for (j, c) in centers.iter().enumerate() {
            if (v - c).abs() < (v - centers[best]).abs() {
                best = j;
            }
        }
        best
    };
    let mut assign: Vec<usize> = values.iter().map(|v| nearest(&centers, *v)).collect();
    for _ in 0..100 {
        let (sums, counts) = cluster_sums(&values, &weights, &assign, k);
        let mut shift: f64 = 0.0;
        for j in 0..k {
            let c = if counts[j] > 0.0 {
                sums[j] / counts[j]
            } else {
                // Reseed an empty cluster at the value farthest from its center.
                let far = (0..values.len())
                    .max_by(|&a, &b| {
                        let da = (values[a] - centers[assign[a]]).abs();
                        let db = (values[b] - centers[assign[b]]).abs();
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("nonempty");
                assign[far] = j;
                values[far]
            };
            shift = shift.max((c - centers[j]).abs());
            centers[j] = c;
        }
        assign = values.iter().map(|v| nearest(&centers, *v)).collect();
        if shift < 1e-9 {
            break;
        }
    }
    hartigan_pass(&values, &weights, &mut assign, k);

    let (sums, counts) = cluster_sums(&values, &weights, &assign, k);
    let mut means: Vec<(usize, f64)> = (0..k)
        .filter(|&j| counts[j] > 0.0)
        .map(|j| (j, sums[j] / counts[j]))
        .collect();
    means.sort_by(|a, b| a.1.total_cmp(&b.1));
    let label_of = |g: f64| -> usize {
        let i = values.partition_point(|v| *v < g);
        assign[i]
    };
    let mut clusters: Vec<GrayCluster> = means
        .iter()
        .map(|&(_, mean)| GrayCluster { members: Vec::new(), mean })
        .collect();
    for (i, g) in grays.iter().enumerate() {
        let label = label_of(*g);
        let slot = means.iter().position(|(j, _)| *j == label).expect("assigned cluster");
        clusters[slot].members.push(i);
    }
    Ok(clusters)
}

fn pick_weighted<R: Rng>(w: &[f64], rng: &mut R) -> usize {
    let total: f64 = w.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, wi) in w.iter().enumerate() {
        if x < *wi {
            return i;
        }
        x -= wi;
    }
    w.iter().rposition(|wi| *wi > 0.0).unwrap_or(0)
}

fn cluster_sums(values: &[f64], weights: &[f64], assign: &[usize], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sums = vec![0.0; k];
    let mut counts = vec![0.0; k];
    for ((v, w), a) in values.iter().zip(weights).zip(assign) {
        sums[*a] += w * v;
        counts[*a] += w;
    }
    (sums, counts)
}

/// Moves whole value groups between clusters while that strictly lowers the
/// sum of squares and leaves the source cluster nonempty.
fn hartigan_pass(values: &[f64], weights: &[f64], assign: &mut [usize], k: usize) {
    for _ in 0..100 {
        let mut moved = false;
        for i in 0..values.len() {
            let (sums, counts) = cluster_sums(values, weights, assign, k);
            let a = assign[i];
            let (v, w) = (values[i], weights[i]);
            if counts[a] <= w {
                continue;
            }
            let ma = sums[a] / counts[a];
            let cost_out = w * counts[a] / (counts[a] - w) * (v - ma).powi(2);
            let mut best = (a, 0.0);
            for b in (0..k).filter(|&b| b != a && counts[b] > 0.0) {
                let mb = sums[b] / counts[b];
                let cost_in = w * counts[b] / (counts[b] + w) * (v - mb).powi(2);
                let gain = cost_out - cost_in;
                if gain > best.1 + 1e-12 * (1.0 + cost_out) {
                    best = (b, gain);
                }
            }
            if best.0 != a {
                assign[i] = best.0;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterPair {
    pub p: usize,
    pub q: usize,
    pub distance: f64,
}

/// Kept cluster pairs, ascending by gray-mean distance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterPairing {
    pub pairs: Vec<ClusterPair>,
}

/// Greedy one-to-one pairing on ascending `|mean_P − mean_Q|`; the first `keep`
/// pairs are returned.
pub fn pair_clusters(sp: &[GrayCluster], sq: &[GrayCluster], keep: usize) -> Result<ClusterPairing> {
    if keep > sp.len().min(sq.len()) {
        return Err(invalid("keep exceeds the number of clusters"));
    }
    let mut all: Vec<ClusterPair> = Vec::with_capacity(sp.len() * sq.len());
    for (i, a) in sp.iter().enumerate() {
        for (j, b) in sq.iter().enumerate() {
            all.push(ClusterPair { p: i, q: j, distance: (a.mean - b.mean).abs() });
        }
    }
    all.sort_by(|x, y| x.distance.total_cmp(&y.distance).then(x.p.cmp(&y.p)).then(x.q.cmp(&y.q)));
    let mut used_p = vec![false; sp.len()];
    let mut used_q = vec![false; sq.len()];
    let mut pairs = Vec::with_capacity(keep);
    for c in all {
        if pairs.len() == keep {
            break;
        }
        if !used_p[c.p] && !used_q[c.q] {
            used_p[c.p] = true;
            used_q[c.q] = true;
            pairs.push(c);
        }
    }
    Ok(ClusterPairing { pairs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcclusionConfig {
    pub clusters: usize,
    /// Number of pairs to keep; all greedy pairs when unset.
    pub keep: Option<usize>,
    /// Pairs whose gray means differ by more than this are dropped.
    pub max_gray_gap: f64,
    pub seed: u64,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        Self {
            clusters: 8,
            keep: None,
            max_gray_gap: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionSelection {
    pub clusters_p: Vec<GrayCluster>,
    pub clusters_q: Vec<GrayCluster>,
    pub pairing: ClusterPairing,
    pub mask_p: Vec<bool>,
    pub mask_q: Vec<bool>,
}

/// Clusters the gray values of both sets and keeps the points of paired clusters.
pub fn select_by_gray<T: Real>(
    set_p: &PointSet<T>,
    set_q: &PointSet<T>,
    cfg: &OcclusionConfig,
) -> Result<OcclusionSelection> {
    let gray = |s: &PointSet<T>| -> Result<Vec<f64>> {
        s.gray()
            .map(|g| g.iter().map(|v| v.as_f64()).collect())
            .ok_or_else(|| invalid("occlusion handling needs gray values on both sets"))
    };
    let (gp, gq) = (gray(set_p)?, gray(set_q)?);
    let k = cfg.clusters.min(gp.len()).min(gq.len());
    let clusters_p = kmeans_gray(&gp, k, cfg.seed)?;
    let clusters_q = kmeans_gray(&gq, k, cfg.seed)?;
    let max_keep = clusters_p.len().min(clusters_q.len());
    let keep = cfg.keep.unwrap_or(max_keep).min(max_keep);
    let mut pairing = pair_clusters(&clusters_p, &clusters_q, keep)?;
    pairing.pairs.retain(|c| c.distance <= cfg.max_gray_gap);
    if pairing.pairs.is_empty() {
        return Err(invalid("no gray clusters could be paired"));
    }
    let mut mask_p = vec![false; gp.len()];
    let mut mask_q = vec![false; gq.len()];
    for c in &pairing.pairs {
        for &i in &clusters_p[c.p].members {
            mask_p[i] = true;
        }
        for &i in &clusters_q[c.q].members {
            mask_q[i] = true;
        }
    }
    Ok(OcclusionSelection {
        clusters_p,
        clusters_q,
        pairing,
        mask_p,
        mask_q,
    })
}
