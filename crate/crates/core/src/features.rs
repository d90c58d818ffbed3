//! Feature-function bases and set-level aggregate features.
//!
//! A basis is a list of scalar functions `f_i : ℝ → ℝ`. Each one is applied to
//! every coordinate component of every point, and the results are averaged over
//! the set. The average does not depend on point order, which is what removes the
//! unknown correspondence from the estimation problem.
//!
//! Sums run over a canonical ordering of the distinct points (lexicographic by
//! coordinates, duplicates merged into a multiplicity), accumulated with
//! compensated summation. Aggregates are therefore bit-identical under any
//! permutation of the input, and duplicating every point leaves them unchanged.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3x6, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{CorrespondenceModel, PointSet, PoseFrame, PoseParams};
use crate::scalar::{CompensatedSum, Real};

/// Elementary terms the built-in feature functions are made of. Trigonometric
/// terms take `πx` as their argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    /// `x`
    Linear,
    /// `x²`
    Square,
    /// `xᵏ`
    Pow(i32),
    /// `sin(πx)`
    Sin,
    /// `sin²(πx)`
    SinSquared,
    /// `cos(πx)`
    Cos,
    /// `x cos(πx)`
    LinearCos,
}

/// Pre-evaluated pieces shared by all terms at one abscissa.
#[derive(Clone, Copy)]
struct Trig<T> {
    x: T,
    s: T,
    c: T,
    pi: T,
}

impl<T: Real> Trig<T> {
    fn at(x: T) -> Self {
        let pi = T::pi();
        let (s, c) = (pi * x).sin_cos();
        Self { x, s, c, pi }
    }
}

impl Term {
    fn value<T: Real>(self, t: &Trig<T>) -> T {
        match self {
            Term::Linear => t.x,
            Term::Square => t.x * t.x,
            Term::Pow(k) => t.x.powi(k),
            Term::Sin => t.s,
            Term::SinSquared => t.s * t.s,
            Term::Cos => t.c,
            Term::LinearCos => t.x * t.c,
        }
    }

    fn derivative<T: Real>(self, t: &Trig<T>) -> T {
        match self {
            Term::Linear => T::one(),
            Term::Square => t.x + t.x,
            Term::Pow(0) => T::zero(),
            Term::Pow(k) => T::lit(k as f64) * t.x.powi(k - 1),
            Term::Sin => t.pi * t.c,
            Term::SinSquared => (t.pi + t.pi) * t.s * t.c,
            Term::Cos => -t.pi * t.s,
            Term::LinearCos => t.c - t.pi * t.x * t.s,
        }
    }
}

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// One scalar feature function.
#[derive(Clone)]
pub enum FeatureFn<T> {
    /// Linear combination of elementary terms.
    Terms(Vec<(Term, T)>),
    /// User-supplied function, optionally with its derivative.
    Custom {
        value: ScalarFn<T>,
        derivative: Option<ScalarFn<T>>,
    },
}

impl<T> fmt::Debug for FeatureFn<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureFn::Terms(t) => f.debug_tuple("Terms").field(t).finish(),
            FeatureFn::Custom { derivative, .. } => f
                .debug_struct("Custom")
                .field("has_derivative", &derivative.is_some())
                .finish(),
        }
    }
}

impl<T: Real> FeatureFn<T> {
    pub fn terms(terms: &[(Term, f64)]) -> Self {
        FeatureFn::Terms(terms.iter().map(|&(t, c)| (t, T::lit(c))).collect())
    }

    pub fn custom(
        value: impl Fn(T) -> T + Send + Sync + 'static,
        derivative: Option<ScalarFn<T>>,
    ) -> Self {
        FeatureFn::Custom {
            value: Arc::new(value),
            derivative,
        }
    }

    pub fn has_derivative(&self) -> bool {
        match self {
            FeatureFn::Terms(_) => true,
            FeatureFn::Custom { derivative, .. } => derivative.is_some(),
        }
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_trig(&Trig::at(x))
    }

    pub fn derivative(&self, x: T) -> Option<T> {
        self.derivative_trig(&Trig::at(x))
    }

    fn eval_trig(&self, t: &Trig<T>) -> T {
        match self {
            FeatureFn::Terms(terms) => terms
                .iter()
                .fold(T::zero(), |acc, &(term, c)| acc + c * term.value(t)),
            FeatureFn::Custom { value, .. } => value(t.x),
        }
    }

    fn derivative_trig(&self, t: &Trig<T>) -> Option<T> {
        match self {
            FeatureFn::Terms(terms) => Some(
                terms
                    .iter()
                    .fold(T::zero(), |acc, &(term, c)| acc + c * term.derivative(t)),
            ),
            FeatureFn::Custom { derivative, .. } => derivative.as_ref().map(|d| d(t.x)),
        }
    }
}

/// Ordered list of scalar feature functions.
#[derive(Debug, Clone)]
pub struct FeatureBasis<T> {
    funcs: Vec<FeatureFn<T>>,
}

/// The six templates of the published 18-function basis. Each is applied to all
/// three coordinate components. The `x cos(πx)` terms read the bare `x` as the
/// component itself.
const PAPER_TEMPLATES: [[(Term, f64); 3]; 6] = [
    [(Term::Linear, -0.6578), (Term::Sin, -1.058), (Term::LinearCos, 0.123)],
    [(Term::Square, -0.2567), (Term::SinSquared, 0.3437), (Term::Cos, 1.286)],
    [(Term::Square, -0.7620), (Term::SinSquared, -1.288), (Term::Cos, 0.1921)],
    [(Term::Linear, 1.245), (Term::Sin, -0.9539), (Term::LinearCos, -1.540)],
    [(Term::Square, 2.998), (Term::SinSquared, -1.620), (Term::Cos, 1.032)],
    [(Term::Linear, -4.656), (Term::Sin, 2.290), (Term::LinearCos, -5.183)],
];

impl<T: Real> FeatureBasis<T> {
    pub fn new(funcs: Vec<FeatureFn<T>>) -> Result<Self> {
        if funcs.is_empty() {
            return Err(invalid("feature basis needs at least one function"));
        }
        Ok(Self { funcs })
    }

    /// The 18-function basis: six templates over three coordinate components.
    pub fn paper18() -> Self {
        Self {
            funcs: PAPER_TEMPLATES.iter().map(|t| FeatureFn::terms(t)).collect(),
        }
    }

    /// The single function `f(x) = x`; the aggregate is the centroid.
    pub fn identity() -> Self {
        Self {
            funcs: vec![FeatureFn::terms(&[(Term::Linear, 1.0)])],
        }
    }

    /// Looks up a named basis: `paper18` or `identity`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "paper18" | "default" => Ok(Self::paper18()),
            "identity" | "linear" | "mean" => Ok(Self::identity()),
            other => Err(invalid(format!("unknown basis `{other}`"))),
        }
    }

    /// Parses a basis description such as
    /// `{"functions": [[{"term": "linear", "coeff": 1.0}, {"term": "cos", "coeff": 0.5}]]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: BasisSpec = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("basis spec: {e}")))?;
        spec.build()
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    pub fn functions(&self) -> &[FeatureFn<T>] {
        &self.funcs
    }

    pub fn has_derivatives(&self) -> bool {
        self.funcs.iter().all(FeatureFn::has_derivative)
    }

    fn eval_into(&self, x: T, out: &mut [T]) {
        let t = Trig::at(x);
        for (o, f) in out.iter_mut().zip(&self.funcs) {
            *o = f.eval_trig(&t);
        }
    }

    fn eval_with_derivs_into(&self, x: T, vals: &mut [T], derivs: &mut [T]) -> Result<()> {
        let t = Trig::at(x);
        for (i, f) in self.funcs.iter().enumerate() {
            vals[i] = f.eval_trig(&t);
            derivs[i] = f.derivative_trig(&t).ok_or(Error::MissingDerivative)?;
        }
        Ok(())
    }
}

/// Serialized basis description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub functions: Vec<Vec<TermSpec>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub term: Term,
    pub coeff: f64,
}

impl BasisSpec {
    pub fn build<T: Real>(&self) -> Result<FeatureBasis<T>> {
        let funcs = self
            .functions
            .iter()
            .map(|f| {
                if f.is_empty() || f.iter().any(|t| !t.coeff.is_finite()) {
                    return Err(invalid("feature function needs finite terms"));
                }
                Ok(FeatureFn::Terms(
                    f.iter().map(|t| (t.term, T::lit(t.coeff))).collect(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureBasis::new(funcs)
    }
}

/// Center and spread of the `Q` side, shared by both sides of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct NormalizationStats<T> {
    pub mean: Vector3<T>,
    pub sigma: T,
}

impl<T: Real> NormalizationStats<T> {
    /// Mean and `σ = sqrt(Σ‖x − μ‖² / (N − 1))`.
    pub fn from_points(points: &[Vector3<T>]) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("normalization needs at least two points"));
        }
        let canon = Canonical::new(points);
        let n = canon.count;
        let mut acc = [CompensatedSum::new(); 3];
        for (p, &w) in canon.points.iter().zip(&canon.weights) {
            for c in 0..3 {
                acc[c].add(w * p[c]);
            }
        }
        let mean = Vector3::new(acc[0].total(), acc[1].total(), acc[2].total());
        let mut ss = CompensatedSum::new();
        for (p, &w) in canon.points.iter().zip(&canon.weights) {
            ss.add(w * (p - mean).norm_squared());
        }
        let sigma = (ss.total() * n / (n - T::one())).sqrt();
        if !(sigma >= T::lit(1e-12)) {
            return Err(Error::ZeroSpread);
        }
        Ok(Self { mean, sigma })
    }

    /// `(v − μ) / (2σ)`.
    #[inline]
    pub fn apply(&self, v: &Vector3<T>) -> Vector3<T> {
        (v - self.mean) / (self.sigma + self.sigma)
    }

    #[inline]
    fn scale(&self) -> T {
        T::one() / (self.sigma + self.sigma)
    }
}

/// Normalizes a set of bearings (each rescaled to unit length) to zero mean and
/// returns the statistics used.
pub fn normalize_bearing_set<T: Real>(
    raw: &PointSet<T>,
) -> Result<(PointSet<T>, NormalizationStats<T>)> {
    let units = raw
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let n = p.norm();
            if n < T::degenerate_norm() {
                Err(Error::DegenerateDirection { index: Some(i) })
            } else {
                Ok(p / n)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = NormalizationStats::from_points(&units)?;
    let normalized = units.iter().map(|u| stats.apply(u)).collect();
    let gray = raw.gray().map(<[T]>::to_vec);
    Ok((PointSet::from_parts(3, normalized, gray)?, stats))
}

/// Set-averaged feature values, laid out as `values[i * components + c]` for
/// function `i` and coordinate component `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateFeatures<T> {
    pub values: Vec<T>,
    pub components: usize,
}

impl<T: Real> AggregateFeatures<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, func: usize, component: usize) -> T {
        self.values[func * self.components + component]
    }
}

/// Distinct points in lexicographic order. Each weight is the point's share
/// `m / N` of the set, so weighted sums are means, and repeating the whole set
/// leaves every weight bit-identical.
#[derive(Debug, Clone)]
pub(crate) struct Canonical<T> {
    pub(crate) points: Vec<Vector3<T>>,
    pub(crate) weights: Vec<T>,
    /// Input index of one occurrence of each distinct point.
    pub(crate) origin: Vec<usize>,
    pub(crate) count: T,
}

fn lex_cmp<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> Ordering {
    for c in 0..3 {
        match a[c].partial_cmp(&b[c]).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl<T: Real> Canonical<T> {
    pub(crate) fn new(points: &[Vector3<T>]) -> Self {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]).then(a.cmp(&b)));
        let mut out = Self {
            points: Vec::with_capacity(points.len()),
            weights: Vec::with_capacity(points.len()),
            origin: Vec::with_capacity(points.len()),
            count: T::lit(points.len() as f64),
        };
        let mut mult = Vec::<usize>::with_capacity(points.len());
        for i in idx {
            let p = points[i];
            if out.points.last() == Some(&p) {
                *mult.last_mut().expect("nonempty") += 1;
            } else {
                out.points.push(p);
                out.origin.push(i);
                mult.push(1);
            }
        }
        out.weights = mult.into_iter().map(|m| T::lit(m as f64 / points.len() as f64)).collect();
        out
    }
}

fn aggregate_canonical<T: Real>(
    canon: &Canonical<T>,
    components: usize,
    basis: &FeatureBasis<T>,
) -> AggregateFeatures<T> {
    let l = basis.len();
    let mut acc = vec![CompensatedSum::new(); l * components];
    let mut vals = vec![T::zero(); l];
    for (p, &w) in canon.points.iter().zip(&canon.weights) {
        for c in 0..components {
            basis.eval_into(p[c], &mut vals);
            for i in 0..l {
                acc[i * components + c].add(w * vals[i]);
            }
        }
    }
    AggregateFeatures {
        values: acc.iter().map(|a| a.total()).collect(),
        components,
    }
}

/// Averages every basis function over every coordinate component of the set.
/// Planar sets contribute their two image coordinates.
pub fn aggregate<T: Real>(set: &PointSet<T>, basis: &FeatureBasis<T>) -> AggregateFeatures<T> {
    aggregate_canonical(&Canonical::new(set.points()), set.dim(), basis)
}

/// Aggregate of arbitrary 3-vectors over all three components.
pub fn aggregate_vectors<T: Real>(
    points: &[Vector3<T>],
    basis: &FeatureBasis<T>,
) -> AggregateFeatures<T> {
    aggregate_canonical(&Canonical::new(points), 3, basis)
}

/// Aggregate of a one-dimensional set.
pub fn aggregate_scalars<T: Real>(values: &[T], basis: &FeatureBasis<T>) -> AggregateFeatures<T> {
    let pts: Vec<_> = values.iter().map(|&v| Vector3::new(v, T::zero(), T::zero())).collect();
    aggregate_canonical(&Canonical::new(&pts), 1, basis)
}

/// Aggregate of `h(p, θ)` over the set, optionally normalized with `stats`. The
/// average divides by this set's own cardinality, so the two sides may differ in
/// size.
pub fn aggregate_mapped<T: Real>(
    set: &PointSet<T>,
    model: &CorrespondenceModel<T>,
    theta: &PoseParams<T>,
    basis: &FeatureBasis<T>,
    stats: Option<&NormalizationStats<T>>,
) -> Result<AggregateFeatures<T>> {
    let frame = PoseFrame::new(model, theta)?;
    let canon = Canonical::new(set.points());
    let (values, _) = side_features(&canon, basis, stats, false, |p| {
        frame.map(p).map(|v| (v, Matrix3x6::zeros()))
    })?;
    Ok(AggregateFeatures {
        values,
        components: 3,
    })
}

/// Averages features of `map(p)` over a canonical set. With `with_jacobian`, also
/// returns the derivative of each average with respect to the pose parameters,
/// as a row-major `(L·3) × 6` block.
pub(crate) fn side_features<T, F>(
    canon: &Canonical<T>,
    basis: &FeatureBasis<T>,
    stats: Option<&NormalizationStats<T>>,
    with_jacobian: bool,
    map: F,
) -> Result<(Vec<T>, Option<Vec<T>>)>
where
    T: Real,
    F: Fn(&Vector3<T>) -> Result<(Vector3<T>, Matrix3x6<T>)>,
{
    const DOF: usize = 6;
    let l = basis.len();
    let rows = l * 3;
    let mut acc = vec![CompensatedSum::new(); rows];
    let mut jac_acc = if with_jacobian {
        vec![CompensatedSum::new(); rows * DOF]
    } else {
        Vec::new()
    };
    let mut vals = vec![T::zero(); l];
    let mut derivs = vec![T::zero(); l];
    for (k, (p, &w)) in canon.points.iter().zip(&canon.weights).enumerate() {
        let (mut y, mut dy) = map(p).map_err(|e| match e {
            Error::DegenerateDirection { .. } => Error::DegenerateDirection {
                index: Some(canon.origin[k]),
            },
            other => other,
        })?;
        if let Some(s) = stats {
            y = s.apply(&y);
            dy *= s.scale();
        }
        for c in 0..3 {
            if with_jacobian {
                basis.eval_with_derivs_into(y[c], &mut vals, &mut derivs)?;
            } else {
                basis.eval_into(y[c], &mut vals);
            }
            for i in 0..l {
                let row = i * 3 + c;
                acc[row].add(w * vals[i]);
                if with_jacobian {
                    let dw = w * derivs[i];
                    for j in 0..DOF {
                        jac_acc[row * DOF + j].add(dw * dy[(c, j)]);
                    }
                }
            }
        }
    }
    let values = acc.iter().map(|a| a.total()).collect();
    let jac = with_jacobian.then(|| jac_acc.iter().map(|a| a.total()).collect());
    Ok((values, jac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn paper_template_values() {
        let b = FeatureBasis::<f64>::paper18();
        assert_eq!(b.len(), 6);
        assert_eq!(b.functions()[0].eval(0.0), 0.0);
        assert_relative_eq!(b.functions()[1].eval(0.0), 1.286, epsilon = 1e-15);
        // -0.7620·1 - 1.288·sin²(π) + 0.1921·cos(π)
        assert_relative_eq!(b.functions()[2].eval(1.0), -0.9541, epsilon = 1e-12);
    }

    #[test]
    fn paper_coefficients_are_exact() {
        let b = FeatureBasis::<f64>::paper18();
        let coeffs: Vec<f64> = b
            .functions()
            .iter()
            .flat_map(|f| match f {
                FeatureFn::Terms(t) => t.iter().map(|x| x.1).collect::<Vec<_>>(),
                _ => unreachable!(),
            })
            .collect();
        let expected = [
            -0.6578, -1.058, 0.123, -0.2567, 0.3437, 1.286, -0.7620, -1.288, 0.1921, 1.245,
            -0.9539, -1.540, 2.998, -1.620, 1.032, -4.656, 2.290, -5.183,
        ];
        assert_eq!(coeffs, expected);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let b = FeatureBasis::<f64>::paper18();
        let mut extra = b.functions().to_vec();
        extra.push(FeatureFn::terms(&[(Term::Pow(3), 0.7), (Term::Pow(0), 2.0)]));
        let h = 1e-6;
        for f in &extra {
            for k in 0..=600 {
                let x = -3.0 + k as f64 * 0.01;
                let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
                let an = f.derivative(x).unwrap();
                let rel = (fd - an).abs() / an.abs().max(1.0);
                assert!(rel < 1e-6, "x={x} fd={fd} an={an}");
            }
        }
    }

    #[test]
    fn motivating_sets_share_their_mean() {
        let b = FeatureBasis::identity();
        let p = aggregate_scalars(&[1.0, 2.0, 3.0, 4.0], &b);
        let q = aggregate_scalars(&[2.0, 3.0, 1.0, 4.0], &b);
        assert_eq!(p.values, vec![2.5]);
        assert_eq!(q.values, vec![2.5]);
    }

    #[test]
    fn singleton_aggregate_is_direct_evaluation() {
        let b = FeatureBasis::paper18();
        let x = Vector3::new(0.3, -0.7, 1.1);
        let agg = aggregate_vectors(&[x], &b);
        for i in 0..6 {
            for c in 0..3 {
                assert_eq!(agg.get(i, c), b.functions()[i].eval(x[c]));
            }
        }
    }

    #[test]
    fn planar_sets_aggregate_image_coordinates() {
        let s = PointSet::planar([(0.25, 0.5), (0.75, -0.5)]).unwrap();
        let agg = aggregate(&s, &FeatureBasis::identity());
        assert_eq!(agg.values, vec![0.5, 0.0]);
    }

    #[test]
    fn bearing_normalization_centres_the_set() {
        let raw = PointSet::spatial(vec![Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, -2.0)])
            .unwrap();
        let (n, stats) = normalize_bearing_set(&raw).unwrap();
        assert_relative_eq!(stats.mean, Vector3::zeros(), epsilon = 1e-15);
        let mean: Vector3<f64> = n.points().iter().sum::<Vector3<f64>>() / 2.0;
        assert!(mean.norm() < 1e-12);

        let dup = PointSet::spatial(vec![Vector3::new(0.1, 0.2, 1.0); 5]).unwrap();
        assert_eq!(normalize_bearing_set(&dup).unwrap_err(), Error::ZeroSpread);
    }

    #[test]
    fn basis_json_round_trip() {
        let json = r#"{"functions": [[{"term": "linear", "coeff": 1.0}],
                                      [{"term": {"pow": 3}, "coeff": 2.0},
                                       {"term": "cos", "coeff": -0.5}]]}"#;
        let b = FeatureBasis::<f64>::from_json(json).unwrap();
        assert_eq!(b.len(), 2);
        assert_relative_eq!(b.functions()[1].eval(1.0), 2.5, epsilon = 1e-15);
        assert!(FeatureBasis::<f64>::from_json(r#"{"functions": []}"#).is_err());
        assert!(FeatureBasis::<f64>::from_json(r#"{"functions": [[]]}"#).is_err());
        assert!(matches!(
            FeatureBasis::<f64>::from_json(r#"{"funcs": []}"#),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn custom_functions_without_derivative() {
        let f = FeatureFn::<f64>::custom(|x| x.tanh(), None);
        let b = FeatureBasis::new(vec![f]).unwrap();
        assert!(!b.has_derivatives());
        let mut v = [0.0];
        let mut d = [0.0];
        assert_eq!(
            b.eval_with_derivs_into(0.3, &mut v, &mut d),
            Err(Error::MissingDerivative)
        );
    }

    fn cloud(seed: u64, n: usize) -> Vec<Vector3<f64>> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    proptest! {
        #[test]
        fn permutation_invariance_is_exact(seed in 0u64..1000, n in 1usize..200) {
            let pts = cloud(seed, n);
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0xabc));
            let b = FeatureBasis::paper18();
            prop_assert_eq!(aggregate_vectors(&pts, &b), aggregate_vectors(&shuffled, &b));
        }

        #[test]
        fn duplication_invariance_is_exact(seed in 0u64..1000, n in 1usize..200) {
            let pts = cloud(seed, n);
            let mut doubled = pts.clone();
            doubled.extend(pts.iter().rev());
            let b = FeatureBasis::paper18();
            prop_assert_eq!(aggregate_vectors(&pts, &b), aggregate_vectors(&doubled, &b));
        }
    }
}
