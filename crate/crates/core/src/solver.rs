//! Correspondence-free residuals and their minimization.
//!
//! The residual compares aggregate features of the mapped `P` set with those of
//! the `Q` set, `r(θ) = F_p(p, θ) − F_q(q[, θ])`, and `‖r‖²` is minimized with a
//! Levenberg–Marquardt iteration using multiplicative damping.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::features::{side_features, Canonical, FeatureBasis, NormalizationStats};
use crate::geometry::{CorrespondenceModel, ModelKind, PointSet, PoseFrame, PoseParams, TranslationKind};
use crate::scalar::{CompensatedSum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    Analytic,
    ForwardDiff,
    CentralDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Bound on the largest cosine between the residual and a Jacobian column.
    pub gradient_tol: f64,
    /// Relative step-size bound, `‖δ‖ ≤ tol (‖x‖ + tol)`.
    pub step_tol: f64,
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    pub jacobian: JacobianMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            gradient_tol: 1e-10,
            step_tol: 1e-12,
            initial_damping: 1e-3,
            damping_up: 10.0,
            damping_down: 0.1,
            jacobian: JacobianMode::Analytic,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.gradient_tol,
            self.step_tol,
            self.initial_damping,
            self.damping_up,
            self.damping_down,
        ];
        if self.max_iters == 0 || positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("solver settings must be positive and max_iters >= 1"));
        }
        if self.damping_up <= 1.0 || self.damping_down >= 1.0 {
            return Err(invalid("damping_up must exceed 1 and damping_down be below 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Gradient,
    Step,
    MaxIters,
    /// Damping grew without finding a decrease.
    Stalled,
}

/// A nonlinear least-squares problem over a flat parameter vector.
pub trait LeastSquares<T: Real> {
    fn num_params(&self) -> usize;

    fn residual_at(&self, x: &DVector<T>) -> Result<DVector<T>>;

    fn analytic_jacobian_at(&self, x: &DVector<T>) -> Result<DMatrix<T>>;

    fn jacobian_at(&self, x: &DVector<T>, mode: JacobianMode) -> Result<DMatrix<T>> {
        match mode {
            JacobianMode::Analytic => self.analytic_jacobian_at(x),
            JacobianMode::ForwardDiff => {
                let r0 = self.residual_at(x)?;
                finite_difference(x, r0.len(), |i, h| {
                    let mut xp = x.clone();
                    xp[i] += h;
                    Ok((self.residual_at(&xp)? - &r0) / h)
                }, T::epsilon().sqrt())
            }
            JacobianMode::CentralDiff => {
                let m = self.residual_at(x)?.len();
                finite_difference(x, m, |i, h| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    Ok((self.residual_at(&xp)? - self.residual_at(&xm)?) / (h + h))
                }, central_step::<T>())
            }
        }
    }
}

fn central_step<T: Real>() -> T {
    // 1e-6 in double precision; the f32 cube root of epsilon is ~5e-3.
    T::epsilon().cbrt().max(T::lit(1e-6))
}

fn finite_difference<T, F>(x: &DVector<T>, m: usize, column: F, rel: T) -> Result<DMatrix<T>>
where
    T: Real,
    F: Fn(usize, T) -> Result<DVector<T>>,
{
    let mut j = DMatrix::zeros(m, x.len());
    for i in 0..x.len() {
        let h = rel * x[i].abs().max(T::one());
        j.set_column(i, &column(i, h)?);
    }
    Ok(j)
}

/// Outcome of [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct LmReport<T: Real> {
    pub x: DVector<T>,
    pub objective: T,
    pub residual: DVector<T>,
    pub iterations: usize,
    pub reason: Convergence,
    /// Objective after each accepted step, starting with the initial value.
    pub accepted_objectives: Vec<T>,
}

fn to_f64_vec<T: Real>(x: &DVector<T>) -> Vec<f64> {
    x.iter().map(|v| v.as_f64()).collect()
}

/// Levenberg–Marquardt minimization of `‖r(x)‖²` from `x0`.
///
/// Trial points where the residual cannot be evaluated (degenerate directions)
/// are rejected like uphill steps.
pub fn minimize<T, P>(problem: &P, x0: DVector<T>, cfg: &SolverConfig) -> Result<LmReport<T>>
where
    T: Real,
    P: LeastSquares<T> + ?Sized,
{
    cfg.validate()?;
    if x0.len() != problem.num_params() || !x0.iter().all(|v| v.is_finite()) {
        return Err(invalid("initial parameters must be finite and match the problem"));
    }
    let gtol = T::lit(cfg.gradient_tol);
    let xtol = T::lit(cfg.step_tol);
    let up = T::lit(cfg.damping_up);
    let down = T::lit(cfg.damping_down);
    let lambda_max = T::lit(1e16);
    let lambda_min = T::lit(1e-20);
    let tiny = T::lit(1e-30);

    let mut x = x0;
    let mut r = problem.residual_at(&x)?;
    let mut f = r.norm_squared();
    if !f.is_finite() {
        return Err(Error::NonFinite { last_good: to_f64_vec(&x) });
    }
    let mut lambda = T::lit(cfg.initial_damping);
    let mut history = vec![f];

    let finish = |x, f, r, iterations, reason, history| LmReport {
        x,
        objective: f,
        residual: r,
        iterations,
        reason,
        accepted_objectives: history,
    };

    for iter in 0..cfg.max_iters {
        let j = problem.jacobian_at(&x, cfg.jacobian)?;
        let g = j.tr_mul(&r);
        if f == T::zero() || scaled_gradient(&j, &g, f) <= gtol {
            return Ok(finish(x, f, r, iter, Convergence::Gradient, history));
        }
        let a = j.tr_mul(&j);
        loop {
            let mut m = a.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += lambda * a[(i, i)].max(tiny);
            }
            let Some(chol) = m.cholesky() else {
                lambda *= up;
                if lambda > lambda_max {
                    return Ok(finish(x, f, r, iter + 1, Convergence::Stalled, history));
                }
                continue;
            };
            let delta = chol.solve(&(-&g));
            let small = delta.norm() <= xtol * (x.norm() + xtol);
            let x_new = &x + &delta;
            let trial = match problem.residual_at(&x_new) {
                Ok(r_new) => {
                    let f_new = r_new.norm_squared();
                    if !f_new.is_finite() {
                        return Err(Error::NonFinite { last_good: to_f64_vec(&x) });
                    }
                    Some((r_new, f_new))
                }
                Err(Error::DegenerateDirection { .. }) => None,
                Err(e) => return Err(e),
            };
            match trial {
                Some((r_new, f_new)) if f_new < f => {
                    x = x_new;
                    r = r_new;
                    f = f_new;
                    history.push(f);
                    lambda = (lambda * down).max(lambda_min);
                    if small {
                        return Ok(finish(x, f, r, iter + 1, Convergence::Step, history));
                    }
                    break;
                }
                _ if small => {
                    return Ok(finish(x, f, r, iter + 1, Convergence::Step, history));
                }
                _ => {
                    lambda *= up;
                    if lambda > lambda_max {
                        return Ok(finish(x, f, r, iter + 1, Convergence::Stalled, history));
                    }
                }
            }
        }
    }
    Ok(finish(x, f, r, cfg.max_iters, Convergence::MaxIters, history))
}

/// Largest cosine between the residual and any Jacobian column.
fn scaled_gradient<T: Real>(j: &DMatrix<T>, g: &DVector<T>, f: T) -> T {
    let rn = f.sqrt();
    let mut worst = T::zero();
    for (i, gi) in g.iter().enumerate() {
        let cn = j.column(i).norm();
        if cn > T::zero() {
            worst = worst.max(gi.abs() / (cn * rn));
        }
    }
    worst
}

/// Options for building a [`Problem`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProblemOptions {
    /// Normalize both sides with statistics of the `Q` side. Defaults to on for
    /// the bearing model and off otherwise.
    pub normalize: Option<bool>,
}

/// The correspondence-free pose problem.
#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    model: CorrespondenceModel<T>,
    basis: FeatureBasis<T>,
    options: ProblemOptions,
    stats: Option<NormalizationStats<T>>,
    set_p: PointSet<T>,
    set_q: PointSet<T>,
    canon_p: Canonical<T>,
    canon_q: Canonical<T>,
    fixed_q: Option<Vec<T>>,
}

impl<T: Real> Problem<T> {
    pub fn new(
        model: CorrespondenceModel<T>,
        set_p: PointSet<T>,
        set_q: PointSet<T>,
        basis: FeatureBasis<T>,
    ) -> Result<Self> {
        Self::with_options(model, set_p, set_q, basis, ProblemOptions::default())
    }

    pub fn with_options(
        model: CorrespondenceModel<T>,
        set_p: PointSet<T>,
        set_q: PointSet<T>,
        basis: FeatureBasis<T>,
        options: ProblemOptions,
    ) -> Result<Self> {
        model.validate()?;
        if basis.is_empty() {
            return Err(invalid("feature basis is empty"));
        }
        let (dp, dq) = model.set_dims();
        if set_p.dim() != dp || set_q.dim() != dq {
            return Err(invalid(format!(
                "{} needs {}D/{}D sets, got {}D/{}D",
                model.kind().name(),
                dp,
                dq,
                set_p.dim(),
                set_q.dim()
            )));
        }
        let q_repr = q_representation(&model, &set_q)?;
        let normalize = options
            .normalize
            .unwrap_or(model.kind() == ModelKind::Bearing3D2D);
        if normalize && model.q_depends_on_theta() {
            return Err(invalid("normalization is not available for the epipolar model"));
        }
        let stats = if normalize {
            Some(NormalizationStats::from_points(&q_repr)?)
        } else {
            None
        };
        let canon_q = Canonical::new(&q_repr);
        let canon_p = Canonical::new(set_p.points());
        let fixed_q = if model.q_depends_on_theta() {
            None
        } else {
            let (values, _) = side_features(&canon_q, &basis, stats.as_ref(), false, |q| {
                Ok((*q, nalgebra::Matrix3x6::zeros()))
            })?;
            Some(values)
        };
        Ok(Self {
            model,
            basis,
            options,
            stats,
            set_p,
            set_q,
            canon_p,
            canon_q,
            fixed_q,
        })
    }

    pub fn model(&self) -> &CorrespondenceModel<T> {
        &self.model
    }

    pub fn basis(&self) -> &FeatureBasis<T> {
        &self.basis
    }

    pub fn stats(&self) -> Option<&NormalizationStats<T>> {
        self.stats.as_ref()
    }

    pub fn set_p(&self) -> &PointSet<T> {
        &self.set_p
    }

    pub fn set_q(&self) -> &PointSet<T> {
        &self.set_q
    }

    pub fn options(&self) -> ProblemOptions {
        self.options
    }

    pub fn q_depends_on_theta(&self) -> bool {
        self.model.q_depends_on_theta()
    }

    pub fn num_residuals(&self) -> usize {
        self.basis.len() * 3
    }

    /// Same problem restricted to the masked points of each side.
    pub fn restrict(&self, mask_p: &[bool], mask_q: &[bool]) -> Result<Self> {
        Self::with_options(
            self.model,
            self.set_p.select(mask_p)?,
            self.set_q.select(mask_q)?,
            self.basis.clone(),
            self.options,
        )
    }

    fn evaluate(&self, theta: &PoseParams<T>, with_jacobian: bool) -> Result<(Vec<T>, Option<DMatrix<T>>)> {
        let frame = PoseFrame::new(&self.model, theta)?;
        let dof = frame.dof();
        let (fp, jp) = side_features(&self.canon_p, &self.basis, self.stats.as_ref(), with_jacobian, |p| {
            frame.map_with_jacobian(p)
        })?;
        let (fq, jq) = match &self.fixed_q {
            Some(v) => (v.clone(), None),
            None => side_features(&self.canon_q, &self.basis, None, with_jacobian, |q| {
                frame.map_q_with_jacobian(q)
            })?,
        };
        let rows = fp.len();
        let residual: Vec<T> = fp.iter().zip(&fq).map(|(a, b)| *a - *b).collect();
        let jac = jp.map(|jp| {
            DMatrix::from_fn(rows, dof, |i, j| {
                let d = jp[i * 6 + j];
                match &jq {
                    Some(jq) => d - jq[i * 6 + j],
                    None => d,
                }
            })
        });
        Ok((residual, jac))
    }

    /// `F_p(p, θ) − F_q(q[, θ])`.
    pub fn residual(&self, theta: &PoseParams<T>) -> Result<DVector<T>> {
        Ok(DVector::from_vec(self.evaluate(theta, false)?.0))
    }

    pub fn objective(&self, theta: &PoseParams<T>) -> Result<T> {
        Ok(self.residual(theta)?.norm_squared())
    }

    /// `(L·3) × dim(θ)` Jacobian of the residual.
    pub fn jacobian(&self, theta: &PoseParams<T>, mode: JacobianMode) -> Result<DMatrix<T>> {
        match mode {
            JacobianMode::Analytic => {
                if !self.basis.has_derivatives() {
                    return Err(Error::MissingDerivative);
                }
                Ok(self.evaluate(theta, true)?.1.expect("jacobian requested"))
            }
            _ => self.adapter().jacobian_at(&theta.to_vector(), mode),
        }
    }

    fn adapter(&self) -> PoseAdapter<'_, T> {
        PoseAdapter {
            problem: self,
            kind: self.model.translation_kind(),
        }
    }
}

/// Representation of the `Q` points the comparison is made in.
fn q_representation<T: Real>(
    model: &CorrespondenceModel<T>,
    set_q: &PointSet<T>,
) -> Result<Vec<Vector3<T>>> {
    match model.kind() {
        ModelKind::Rigid3D | ModelKind::Epipolar2D2D => Ok(set_q.points().to_vec()),
        ModelKind::Bearing3D2D | ModelKind::Homography2D2D => Ok(set_q
            .points()
            .iter()
            .map(|q| q / q.norm())
            .collect()),
    }
}

struct PoseAdapter<'a, T: Real> {
    problem: &'a Problem<T>,
    kind: TranslationKind,
}

impl<T: Real> LeastSquares<T> for PoseAdapter<'_, T> {
    fn num_params(&self) -> usize {
        3 + self.kind.dof()
    }

    fn residual_at(&self, x: &DVector<T>) -> Result<DVector<T>> {
        self.problem
            .residual(&PoseParams::from_slice(self.kind, x.as_slice())?)
    }

    fn analytic_jacobian_at(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        self.problem.jacobian(
            &PoseParams::from_slice(self.kind, x.as_slice())?,
            JacobianMode::Analytic,
        )
    }
}

/// Result of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<T: Real> {
    pub theta: PoseParams<T>,
    pub objective: T,
    pub iterations: usize,
    pub reason: Convergence,
    pub residual: DVector<T>,
}

/// Minimizes the problem's objective starting from `theta0`.
pub fn solve<T: Real>(
    problem: &Problem<T>,
    theta0: &PoseParams<T>,
    cfg: &SolverConfig,
) -> Result<Estimate<T>> {
    problem.model.check_pose(theta0)?;
    if problem.num_residuals() < problem.model.dof() {
        return Err(invalid(format!(
            "{} feature equations cannot determine {} parameters",
            problem.num_residuals(),
            problem.model.dof()
        )));
    }
    if cfg.jacobian == JacobianMode::Analytic && !problem.basis.has_derivatives() {
        return Err(Error::MissingDerivative);
    }
    let adapter = problem.adapter();
    match problem.residual(theta0) {
        Err(Error::DegenerateDirection { .. }) => return Err(Error::Degenerate),
        Err(e) => return Err(e),
        Ok(_) => {}
    }
    let report = minimize(&adapter, theta0.to_vector(), cfg)?;
    Ok(Estimate {
        theta: PoseParams::from_slice(adapter.kind, report.x.as_slice())?,
        objective: report.objective,
        iterations: report.iterations,
        reason: report.reason,
        residual: report.residual,
    })
}

/// One-dimensional sets related by `h(p, θ) = θ p`.
#[derive(Debug, Clone)]
pub struct ScaleProblem<T: Real> {
    p: Canonical<T>,
    fq: Vec<T>,
    basis: FeatureBasis<T>,
}

impl<T: Real> ScaleProblem<T> {
    pub fn new(p: &[T], q: &[T], basis: FeatureBasis<T>) -> Result<Self> {
        if p.is_empty() || q.is_empty() {
            return Err(invalid("scalar sets must be nonempty"));
        }
        let lift = |v: &[T]| -> Vec<Vector3<T>> {
            v.iter().map(|&x| Vector3::new(x, T::zero(), T::zero())).collect()
        };
        let fq = crate::features::aggregate_scalars(q, &basis).values;
        Ok(Self {
            p: Canonical::new(&lift(p)),
            fq,
            basis,
        })
    }

    fn features(&self, theta: T, with_jacobian: bool) -> Result<(Vec<T>, Vec<T>)> {
        let l = self.basis.len();
        let mut acc = vec![CompensatedSum::new(); l];
        let mut jac = vec![CompensatedSum::new(); l];
        for (p, &w) in self.p.points.iter().zip(&self.p.weights) {
            let x = theta * p.x;
            for (i, f) in self.basis.functions().iter().enumerate() {
                acc[i].add(w * f.eval(x));
                if with_jacobian {
                    let d = f.derivative(x).ok_or(Error::MissingDerivative)?;
                    jac[i].add(w * d * p.x);
                }
            }
        }
        Ok((
            acc.iter().map(|a| a.total()).collect(),
            jac.iter().map(|a| a.total()).collect(),
        ))
    }
}

impl<T: Real> LeastSquares<T> for ScaleProblem<T> {
    fn num_params(&self) -> usize {
        1
    }

    fn residual_at(&self, x: &DVector<T>) -> Result<DVector<T>> {
        let (fp, _) = self.features(x[0], false)?;
        Ok(DVector::from_iterator(
            fp.len(),
            fp.iter().zip(&self.fq).map(|(a, b)| *a - *b),
        ))
    }

    fn analytic_jacobian_at(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        let (_, j) = self.features(x[0], true)?;
        Ok(DMatrix::from_vec(j.len(), 1, j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{EulerAngles, Translation};
    use approx::assert_relative_eq;

    fn motivating() -> ScaleProblem<f64> {
        ScaleProblem::new(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 1.0, 4.0], FeatureBasis::identity())
            .unwrap()
    }

    #[test]
    fn motivating_residual_is_linear() {
        let p = motivating();
        for theta in [-2.0, 0.0, 1.0, 3.5] {
            let r = p.residual_at(&DVector::from_element(1, theta)).unwrap();
            assert_relative_eq!(r[0], 2.5 * theta - 2.5, epsilon = 1e-14);
            let j = p.jacobian_at(&DVector::from_element(1, theta), JacobianMode::Analytic).unwrap();
            assert_eq!(j[(0, 0)], 2.5);
        }
    }

    #[test]
    fn motivating_solution_is_ratio_of_sums() {
        let rep = minimize(&motivating(), DVector::from_element(1, 5.0), &SolverConfig::default()).unwrap();
        assert!((rep.x[0] - 1.0).abs() < 1e-12, "{}", rep.x[0]);
    }

    #[test]
    fn accepted_objectives_never_increase() {
        let p = ScaleProblem::new(&[0.1, 0.4, 0.5, 0.9], &[0.2, 0.8, 1.0, 1.8], FeatureBasis::paper18())
            .unwrap();
        let rep = minimize(&p, DVector::from_element(1, 1.7), &SolverConfig::default()).unwrap();
        assert!(rep.accepted_objectives.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.max_iters = 0;
        assert!(c.validate().is_err());
        let c = SolverConfig { damping_up: 0.5, ..Default::default() };
        assert!(c.validate().is_err());
    }

    fn rigid_problem(basis: FeatureBasis<f64>) -> (Problem<f64>, PoseParams<f64>) {
        let pts: Vec<_> = (0..7)
            .map(|k| {
                let t = k as f64;
                Vector3::new((0.7 * t).sin(), (1.3 * t).cos() * 0.8, 0.1 * t - 0.3)
            })
            .collect();
        let theta = PoseParams::rigid(0.2, -0.1, 0.3, Vector3::new(0.1, 0.2, -0.1));
        let r = theta.rotation();
        let q: Vec<_> = pts.iter().rev().map(|p| r * p + theta.translation_vector()).collect();
        let prob = Problem::new(
            CorrespondenceModel::Rigid3D,
            PointSet::spatial(pts).unwrap(),
            PointSet::spatial(q).unwrap(),
            basis,
        )
        .unwrap();
        (prob, theta)
    }

    #[test]
    fn rigid_identity_basis_translation_block_is_identity() {
        let (prob, theta) = rigid_problem(FeatureBasis::identity());
        let j = prob.jacobian(&theta, JacobianMode::Analytic).unwrap();
        assert_eq!(j.shape(), (3, 6));
        assert_relative_eq!(j.fixed_view::<3, 3>(0, 3).into_owned(), nalgebra::Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn exact_start_converges_immediately() {
        let (prob, theta) = rigid_problem(FeatureBasis::paper18());
        assert!(prob.residual(&theta).unwrap().norm() < 1e-10);
        let est = solve(&prob, &theta, &SolverConfig::default()).unwrap();
        assert!(est.iterations <= 2);
        assert!(est.objective < 1e-20);
    }

    #[test]
    fn problem_construction_errors() {
        let p = PointSet::spatial(vec![Vector3::new(0.1, 0.2, 1.0), Vector3::new(0.3, 0.1, 1.0)]).unwrap();
        let q = PointSet::planar([(0.1, 0.2), (0.3, 0.1)]).unwrap();
        // Wrong dimensions for a rigid model.
        assert!(Problem::new(CorrespondenceModel::Rigid3D, p.clone(), q.clone(), FeatureBasis::paper18()).is_err());
        // One function over three components cannot fix six parameters.
        let under = Problem::new(CorrespondenceModel::Bearing3D2D, p.clone(), q.clone(), FeatureBasis::identity()).unwrap();
        assert!(solve(&under, &PoseParams::identity(TranslationKind::Free), &SolverConfig::default()).is_err());
        assert!(FeatureBasis::<f64>::new(vec![]).is_err());
        let opts = ProblemOptions { normalize: Some(true) };
        assert!(Problem::with_options(CorrespondenceModel::Epipolar2D2D, q.clone(), q, FeatureBasis::paper18(), opts).is_err());
    }

    #[test]
    fn wrong_translation_kind_is_rejected() {
        let (prob, _) = rigid_problem(FeatureBasis::paper18());
        let theta = PoseParams::new(EulerAngles::zero(), Translation::Direction { azimuth: 0.0, elevation: 0.0 });
        assert!(matches!(solve(&prob, &theta, &SolverConfig::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn degenerate_start_is_reported() {
        // Every P point is sent to the origin: R p + T = 0.
        let p = PointSet::spatial(vec![Vector3::new(0.0, 0.0, 1.0)]).unwrap();
        let q = PointSet::planar([(0.1, 0.2), (0.3, 0.1)]).unwrap();
        let prob = Problem::new(CorrespondenceModel::Bearing3D2D, p, q, FeatureBasis::paper18()).unwrap();
        let theta = PoseParams::rigid(0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, -1.0));
        assert_eq!(solve(&prob, &theta, &SolverConfig::default()), Err(Error::Degenerate));
        assert!(matches!(prob.residual(&theta), Err(Error::DegenerateDirection { index: Some(0) })));
    }
}
