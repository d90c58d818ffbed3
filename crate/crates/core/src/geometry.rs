//! Pose parameterizations and the point mappings that relate two point sets.
//!
//! Rotations use intrinsic Z-Y-X Euler angles: `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.
//! Every mapping takes a point of the first set `P` to the representation in which
//! it is compared against the second set `Q`:
//!
//! | model            | `h(p, θ)`                          | `g(q, θ)`              |
//! |------------------|------------------------------------|------------------------|
//! | `Rigid3D`        | `R p + T`                          | `q`                    |
//! | `Bearing3D2D`    | `(R p + T) / ‖R p + T‖`            | `q`                    |
//! | `Homography2D2D` | `H m / ‖H m‖`, `H = R + T nᵀ / d`  | `q`                    |
//! | `Epipolar2D2D`   | `[T]ₓ R m / ‖[T]ₓ R m‖`            | `[T]ₓ q / ‖[T]ₓ q‖`    |
//!
//! 2D points are carried as homogeneous `[u v 1]ᵀ` in normalized image coordinates.

use nalgebra::{DVector, Matrix3, Matrix3x6, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Returns the skew-symmetric matrix `[v]ₓ` with `[v]ₓ w = v × w`.
pub fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

/// Intrinsic Z-Y-X Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles<T> {
    pub yaw: T,
    pub pitch: T,
    pub roll: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(yaw: T, pitch: T, roll: T) -> Self {
        Self { yaw, pitch, roll }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.yaw.is_finite() && self.pitch.is_finite() && self.roll.is_finite()
    }

    fn factors(&self) -> [Matrix3<T>; 3] {
        let (o, z) = (T::one(), T::zero());
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        [
            Matrix3::new(cy, -sy, z, sy, cy, z, z, z, o),
            Matrix3::new(cp, z, sp, z, o, z, -sp, z, cp),
            Matrix3::new(o, z, z, z, cr, -sr, z, sr, cr),
        ]
    }

    pub fn to_rotation(&self) -> Matrix3<T> {
        let [rz, ry, rx] = self.factors();
        rz * ry * rx
    }

    /// Partial derivatives of the rotation matrix with respect to yaw, pitch and roll.
    pub fn rotation_derivatives(&self) -> [Matrix3<T>; 3] {
        let z = T::zero();
        let [rz, ry, rx] = self.factors();
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        let drz = Matrix3::new(-sy, -cy, z, cy, -sy, z, z, z, z);
        let dry = Matrix3::new(-sp, z, cp, z, z, z, -cp, z, -sp);
        let drx = Matrix3::new(z, z, z, z, -sr, -cr, z, cr, -sr);
        [drz * ry * rx, rz * dry * rx, rz * ry * drx]
    }

    /// Recovers Z-Y-X angles from a rotation matrix. Near `pitch = ±π/2` roll is
    /// folded into yaw.
    pub fn from_rotation(r: &Matrix3<T>) -> Self {
        let s = -r[(2, 0)];
        let s = s.max(-T::one()).min(T::one());
        let pitch = s.asin();
        let cp = pitch.cos();
        if cp > T::lit(1e-9) {
            Self::new(
                r[(1, 0)].atan2(r[(0, 0)]),
                pitch,
                r[(2, 1)].atan2(r[(2, 2)]),
            )
        } else {
            // Gimbal set: only yaw - roll (or yaw + roll) is observable.
            Self::new((-r[(0, 1)]).atan2(r[(1, 1)]), pitch, T::zero())
        }
    }
}

/// Builds the rotation matrix for the given angles.
pub fn rotation_from_euler<T: Real>(angles: &EulerAngles<T>) -> Matrix3<T> {
    angles.to_rotation()
}

/// Angle of the relative rotation `Raᵀ Rb`, in radians.
pub fn rotation_angle_between<T: Real>(a: &Matrix3<T>, b: &Matrix3<T>) -> T {
    // atan2 of the skew part keeps small angles accurate, where acos does not.
    let rel = a.transpose() * b;
    let c = (rel.trace() - T::one()) / T::lit(2.0);
    let w = Vector3::new(rel[(2, 1)] - rel[(1, 2)], rel[(0, 2)] - rel[(2, 0)], rel[(1, 0)] - rel[(0, 1)]);
    (w.norm() / T::lit(2.0)).atan2(c)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut w = a % two_pi;
    if w > T::pi() {
        w -= two_pi;
    } else if w <= -T::pi() {
        w += two_pi;
    }
    w
}

/// How the translation part of the pose is parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TranslationKind {
    /// Unconstrained 3-vector.
    Free,
    /// Unit vector stored as azimuth and elevation.
    UnitDirection,
}

impl TranslationKind {
    pub fn dof(self) -> usize {
        match self {
            TranslationKind::Free => 3,
            TranslationKind::UnitDirection => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum Translation<T> {
    Free(Vector3<T>),
    /// `T = (cos el cos az, cos el sin az, sin el)`, so `‖T‖ = 1` always.
    Direction { azimuth: T, elevation: T },
}

impl<T: Real> Translation<T> {
    pub fn kind(&self) -> TranslationKind {
        match self {
            Translation::Free(_) => TranslationKind::Free,
            Translation::Direction { .. } => TranslationKind::UnitDirection,
        }
    }

    /// Direction parameters of `v`; fails for the zero vector.
    pub fn direction_of(v: &Vector3<T>) -> Result<Self> {
        let n = v.norm();
        if !(n > T::degenerate_norm()) {
            return Err(Error::DegenerateDirection { index: None });
        }
        let z = (v.z / n).max(-T::one()).min(T::one());
        Ok(Translation::Direction {
            azimuth: v.y.atan2(v.x),
            elevation: z.asin(),
        })
    }

    pub fn vector(&self) -> Vector3<T> {
        match *self {
            Translation::Free(t) => t,
            Translation::Direction { azimuth, elevation } => {
                let (sa, ca) = azimuth.sin_cos();
                let (se, ce) = elevation.sin_cos();
                Vector3::new(ce * ca, ce * sa, se)
            }
        }
    }

    /// Columns of `∂T/∂φ` for the translation parameters `φ`.
    fn jacobian_columns(&self) -> ([Vector3<T>; 3], usize) {
        let (o, z) = (T::one(), T::zero());
        match *self {
            Translation::Free(_) => (
                [
                    Vector3::new(o, z, z),
                    Vector3::new(z, o, z),
                    Vector3::new(z, z, o),
                ],
                3,
            ),
            Translation::Direction { azimuth, elevation } => {
                let (sa, ca) = azimuth.sin_cos();
                let (se, ce) = elevation.sin_cos();
                (
                    [
                        Vector3::new(-ce * sa, ce * ca, z),
                        Vector3::new(-se * ca, -se * sa, ce),
                        Vector3::zeros(),
                    ],
                    2,
                )
            }
        }
    }

    fn params(&self) -> Vec<T> {
        match *self {
            Translation::Free(t) => vec![t.x, t.y, t.z],
            Translation::Direction { azimuth, elevation } => vec![azimuth, elevation],
        }
    }
}

/// The unknown pose: rotation angles plus a translation whose parameterization
/// depends on the correspondence model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct PoseParams<T> {
    pub angles: EulerAngles<T>,
    pub translation: Translation<T>,
}

impl<T: Real> PoseParams<T> {
    pub fn new(angles: EulerAngles<T>, translation: Translation<T>) -> Self {
        Self {
            angles,
            translation,
        }
    }

    /// Pose with a free translation vector.
    pub fn rigid(yaw: T, pitch: T, roll: T, t: Vector3<T>) -> Self {
        Self::new(EulerAngles::new(yaw, pitch, roll), Translation::Free(t))
    }

    pub fn identity(kind: TranslationKind) -> Self {
        let translation = match kind {
            TranslationKind::Free => Translation::Free(Vector3::zeros()),
            TranslationKind::UnitDirection => Translation::Direction {
                azimuth: T::zero(),
                elevation: T::zero(),
            },
        };
        Self::new(EulerAngles::zero(), translation)
    }

    pub fn dof(&self) -> usize {
        3 + self.translation.kind().dof()
    }

    pub fn rotation(&self) -> Matrix3<T> {
        self.angles.to_rotation()
    }

    pub fn translation_vector(&self) -> Vector3<T> {
        self.translation.vector()
    }

    /// Flat parameter vector `[yaw, pitch, roll, translation params…]`.
    pub fn to_vector(&self) -> DVector<T> {
        let mut v = vec![self.angles.yaw, self.angles.pitch, self.angles.roll];
        v.extend(self.translation.params());
        DVector::from_vec(v)
    }

    pub fn from_slice(kind: TranslationKind, v: &[T]) -> Result<Self> {
        if v.len() != 3 + kind.dof() {
            return Err(invalid(format!(
                "expected {} pose parameters, got {}",
                3 + kind.dof(),
                v.len()
            )));
        }
        let angles = EulerAngles::new(v[0], v[1], v[2]);
        let translation = match kind {
            TranslationKind::Free => Translation::Free(Vector3::new(v[3], v[4], v[5])),
            TranslationKind::UnitDirection => Translation::Direction {
                azimuth: v[3],
                elevation: v[4],
            },
        };
        Ok(Self::new(angles, translation))
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }

    /// Euclidean distance between parameter vectors, with angular entries wrapped.
    pub fn distance(&self, other: &Self) -> T {
        let a = self.to_vector();
        let b = other.to_vector();
        assert_eq!(a.len(), b.len(), "pose layouts differ");
        let angular = |i: usize| {
            i < 3 || matches!(self.translation, Translation::Direction { .. })
        };
        let mut acc = T::zero();
        for i in 0..a.len() {
            let mut d = a[i] - b[i];
            if angular(i) {
                d = wrap_angle(d);
            }
            acc += d * d;
        }
        acc.sqrt()
    }

    pub fn cast<U: Real>(&self) -> PoseParams<U> {
        let c = |x: T| U::lit(x.as_f64());
        PoseParams {
            angles: EulerAngles::new(c(self.angles.yaw), c(self.angles.pitch), c(self.angles.roll)),
            translation: match self.translation {
                Translation::Free(t) => Translation::Free(Vector3::new(c(t.x), c(t.y), c(t.z))),
                Translation::Direction { azimuth, elevation } => Translation::Direction {
                    azimuth: c(azimuth),
                    elevation: c(elevation),
                },
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rigid3D,
    Bearing3D2D,
    Epipolar2D2D,
    Homography2D2D,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Rigid3D => "rigid3d",
            ModelKind::Bearing3D2D => "bearing3d2d",
            ModelKind::Epipolar2D2D => "epipolar2d2d",
            ModelKind::Homography2D2D => "homography2d2d",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rigid3d" | "rigid" | "3d3d" => Ok(ModelKind::Rigid3D),
            "bearing3d2d" | "bearing" | "3d2d" => Ok(ModelKind::Bearing3D2D),
            "epipolar2d2d" | "epipolar" | "2d2d" => Ok(ModelKind::Epipolar2D2D),
            "homography2d2d" | "homography" => Ok(ModelKind::Homography2D2D),
            other => Err(invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Which mapping relates the two point sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum CorrespondenceModel<T> {
    Rigid3D,
    Bearing3D2D,
    Epipolar2D2D,
    /// Points on the plane `nᵀ M = d` seen from two views.
    Homography2D2D { normal: Vector3<T>, offset: T },
}

impl<T: Real> CorrespondenceModel<T> {
    pub fn homography(normal: Vector3<T>, offset: T) -> Result<Self> {
        let m = CorrespondenceModel::Homography2D2D { normal, offset };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if let CorrespondenceModel::Homography2D2D { normal, offset } = self {
            if (normal.norm() - T::one()).abs() > T::lit(1e-9) {
                return Err(invalid("plane normal must have unit norm"));
            }
            if *offset == T::zero() || !offset.is_finite() {
                return Err(invalid("plane offset must be finite and nonzero"));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            CorrespondenceModel::Rigid3D => ModelKind::Rigid3D,
            CorrespondenceModel::Bearing3D2D => ModelKind::Bearing3D2D,
            CorrespondenceModel::Epipolar2D2D => ModelKind::Epipolar2D2D,
            CorrespondenceModel::Homography2D2D { .. } => ModelKind::Homography2D2D,
        }
    }

    /// Dimensions required of the `P` and `Q` sets.
    pub fn set_dims(&self) -> (usize, usize) {
        match self.kind() {
            ModelKind::Rigid3D => (3, 3),
            ModelKind::Bearing3D2D => (3, 2),
            ModelKind::Epipolar2D2D | ModelKind::Homography2D2D => (2, 2),
        }
    }

    pub fn translation_kind(&self) -> TranslationKind {
        match self.kind() {
            ModelKind::Epipolar2D2D => TranslationKind::UnitDirection,
            _ => TranslationKind::Free,
        }
    }

    pub fn dof(&self) -> usize {
        3 + self.translation_kind().dof()
    }

    /// True when the `Q` side of the comparison depends on the pose.
    pub fn q_depends_on_theta(&self) -> bool {
        self.kind() == ModelKind::Epipolar2D2D
    }

    /// Checks that a pose uses this model's translation parameterization.
    pub fn check_pose(&self, theta: &PoseParams<T>) -> Result<()> {
        if theta.translation.kind() != self.translation_kind() {
            return Err(invalid(format!(
                "{} expects a {:?} translation",
                self.kind().name(),
                self.translation_kind()
            )));
        }
        if !theta.is_finite() {
            return Err(invalid("pose parameters must be finite"));
        }
        Ok(())
    }
}

/// Pose-dependent quantities shared by every point mapped under one `θ`.
#[derive(Debug, Clone)]
pub struct PoseFrame<T: Real> {
    model: CorrespondenceModel<T>,
    rotation: Matrix3<T>,
    rotation_derivs: [Matrix3<T>; 3],
    translation: Vector3<T>,
    translation_cols: [Vector3<T>; 3],
    translation_dof: usize,
}

impl<T: Real> PoseFrame<T> {
    pub fn new(model: &CorrespondenceModel<T>, theta: &PoseParams<T>) -> Result<Self> {
        model.check_pose(theta)?;
        let (translation_cols, translation_dof) = theta.translation.jacobian_columns();
        Ok(Self {
            model: *model,
            rotation: theta.rotation(),
            rotation_derivs: theta.angles.rotation_derivatives(),
            translation: theta.translation_vector(),
            translation_cols,
            translation_dof,
        })
    }

    pub fn dof(&self) -> usize {
        3 + self.translation_dof
    }

    pub fn rotation(&self) -> &Matrix3<T> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<T> {
        &self.translation
    }

    /// `h(p, θ)`.
    pub fn map(&self, p: &Vector3<T>) -> Result<Vector3<T>> {
        let r = &self.rotation;
        let t = &self.translation;
        match self.model {
            CorrespondenceModel::Rigid3D => Ok(r * p + t),
            CorrespondenceModel::Bearing3D2D => unit(r * p + t),
            CorrespondenceModel::Homography2D2D { normal, offset } => {
                unit(r * p + t * (normal.dot(p) / offset))
            }
            CorrespondenceModel::Epipolar2D2D => unit(t.cross(&(r * p))),
        }
    }

    /// `h(p, θ)` and its Jacobian with respect to the pose parameters. Columns past
    /// [`PoseFrame::dof`] are zero.
    pub fn map_with_jacobian(&self, p: &Vector3<T>) -> Result<(Vector3<T>, Matrix3x6<T>)> {
        let r = &self.rotation;
        let t = &self.translation;
        let mut dv = Matrix3x6::zeros();
        let v = match self.model {
            CorrespondenceModel::Rigid3D | CorrespondenceModel::Bearing3D2D => {
                for j in 0..3 {
                    dv.set_column(j, &(self.rotation_derivs[j] * p));
                }
                for k in 0..self.translation_dof {
                    dv.set_column(3 + k, &self.translation_cols[k]);
                }
                r * p + t
            }
            CorrespondenceModel::Homography2D2D { normal, offset } => {
                let s = normal.dot(p) / offset;
                for j in 0..3 {
                    dv.set_column(j, &(self.rotation_derivs[j] * p));
                }
                for k in 0..self.translation_dof {
                    dv.set_column(3 + k, &(self.translation_cols[k] * s));
                }
                r * p + t * s
            }
            CorrespondenceModel::Epipolar2D2D => {
                let w = r * p;
                for j in 0..3 {
                    dv.set_column(j, &t.cross(&(self.rotation_derivs[j] * p)));
                }
                for k in 0..self.translation_dof {
                    dv.set_column(3 + k, &self.translation_cols[k].cross(&w));
                }
                t.cross(&w)
            }
        };
        if self.model.kind() == ModelKind::Rigid3D {
            return Ok((v, dv));
        }
        normalize_with_jacobian(v, dv)
    }

    /// `g(q, θ)`; the identity except for the epipolar model.
    pub fn map_q(&self, q: &Vector3<T>) -> Result<Vector3<T>> {
        match self.model {
            CorrespondenceModel::Epipolar2D2D => unit(self.translation.cross(q)),
            _ => Ok(*q),
        }
    }

    pub fn map_q_with_jacobian(&self, q: &Vector3<T>) -> Result<(Vector3<T>, Matrix3x6<T>)> {
        let mut dv = Matrix3x6::zeros();
        match self.model {
            CorrespondenceModel::Epipolar2D2D => {
                for k in 0..self.translation_dof {
                    dv.set_column(3 + k, &self.translation_cols[k].cross(q));
                }
                normalize_with_jacobian(self.translation.cross(q), dv)
            }
            _ => Ok((*q, dv)),
        }
    }
}

fn unit<T: Real>(v: Vector3<T>) -> Result<Vector3<T>> {
    let n = v.norm();
    if !(n >= T::degenerate_norm()) {
        return Err(Error::DegenerateDirection { index: None });
    }
    Ok(v / n)
}

fn normalize_with_jacobian<T: Real>(
    v: Vector3<T>,
    dv: Matrix3x6<T>,
) -> Result<(Vector3<T>, Matrix3x6<T>)> {
    let n = v.norm();
    if !(n >= T::degenerate_norm()) {
        return Err(Error::DegenerateDirection { index: None });
    }
    let h = v / n;
    let proj = (Matrix3::identity() - h * h.transpose()) / n;
    Ok((h, proj * dv))
}

/// Evaluates `h(p, θ)` for a single point.
pub fn apply_model<T: Real>(
    model: &CorrespondenceModel<T>,
    p: &Vector3<T>,
    theta: &PoseParams<T>,
) -> Result<Vector3<T>> {
    PoseFrame::new(model, theta)?.map(p)
}

/// Evaluates `g(q, θ)` for a single point.
pub fn apply_q_model<T: Real>(
    model: &CorrespondenceModel<T>,
    q: &Vector3<T>,
    theta: &PoseParams<T>,
) -> Result<Vector3<T>> {
    PoseFrame::new(model, theta)?.map_q(q)
}

/// An unordered collection of 2D or 3D points with optional per-point gray values.
///
/// 2D points are stored as homogeneous `[u v 1]ᵀ`. Order carries no meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    dim: usize,
    points: Vec<Vector3<T>>,
    gray: Option<Vec<T>>,
}

impl<T: Real> PointSet<T> {
    pub fn spatial(points: Vec<Vector3<T>>) -> Result<Self> {
        Self::from_parts(3, points, None)
    }

    pub fn planar<I>(uv: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, T)>,
    {
        let points = uv
            .into_iter()
            .map(|(u, v)| Vector3::new(u, v, T::one()))
            .collect();
        Self::from_parts(2, points, None)
    }

    /// Validating constructor. For `dim == 2` every point must have a unit third
    /// coordinate.
    pub fn from_parts(dim: usize, points: Vec<Vector3<T>>, gray: Option<Vec<T>>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(invalid(format!("point dimension must be 2 or 3, got {dim}")));
        }
        if points.is_empty() {
            return Err(invalid("point set is empty"));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(invalid(format!("point {i} has a non-finite coordinate")));
            }
            if dim == 2 && p.z != T::one() {
                return Err(invalid(format!("planar point {i} is not homogeneous [u v 1]")));
            }
        }
        if let Some(g) = &gray {
            if g.len() != points.len() {
                return Err(invalid(format!(
                    "{} gray values for {} points",
                    g.len(),
                    points.len()
                )));
            }
            if !g.iter().all(|x| x.is_finite()) {
                return Err(invalid("non-finite gray value"));
            }
        }
        Ok(Self { dim, points, gray })
    }

    pub fn with_gray(self, gray: Vec<T>) -> Result<Self> {
        Self::from_parts(self.dim, self.points, Some(gray))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector3<T>] {
        &self.points
    }

    pub fn gray(&self) -> Option<&[T]> {
        self.gray.as_deref()
    }

    /// Subset of the points whose mask entry is true.
    pub fn select(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.len() {
            return Err(invalid("mask length differs from point count"));
        }
        let keep = |i: &usize| mask[*i];
        self.select_indices(&(0..self.len()).filter(keep).collect::<Vec<_>>())
    }

    pub fn select_indices(&self, idx: &[usize]) -> Result<Self> {
        let points = idx.iter().map(|&i| self.points[i]).collect();
        let gray = self.gray.as_ref().map(|g| idx.iter().map(|&i| g[i]).collect());
        Self::from_parts(self.dim, points, gray)
    }

    /// Appends the points of `other`. Gray values are kept only if both sides have them.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(invalid("cannot concatenate sets of different dimension"));
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let gray = match (&self.gray, &other.gray) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Self::from_parts(self.dim, points, gray)
    }

    pub fn cast<U: Real>(&self) -> PointSet<U> {
        let c = |x: T| U::lit(x.as_f64());
        PointSet {
            dim: self.dim,
            points: self
                .points
                .iter()
                .map(|p| Vector3::new(c(p.x), c(p.y), c(p.z)))
                .collect(),
            gray: self.gray.as_ref().map(|g| g.iter().map(|&x| c(x)).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn orthonormality_error(r: &Matrix3<f64>) -> f64 {
        (r.transpose() * r - Matrix3::identity()).abs().max()
    }

    #[test]
    fn zero_angles_give_identity() {
        let r = rotation_from_euler(&EulerAngles::<f64>::zero());
        assert_eq!(r, Matrix3::identity());
    }

    #[test]
    fn quarter_yaw_maps_x_to_y() {
        let r = rotation_from_euler(&EulerAngles::new(FRAC_PI_2, 0.0, 0.0));
        let y = r * Vector3::x();
        assert_relative_eq!(y, Vector3::y(), epsilon = 1e-15);
        assert_relative_eq!(r * Vector3::z(), Vector3::z(), epsilon = 1e-15);
    }

    #[test]
    fn composition_order_is_zyx() {
        let a = EulerAngles::new(0.3, -0.2, 0.7);
        let rz = EulerAngles::new(0.3, 0.0, 0.0).to_rotation();
        let ry = EulerAngles::new(0.0, -0.2, 0.0).to_rotation();
        let rx = EulerAngles::new(0.0, 0.0, 0.7).to_rotation();
        assert_relative_eq!(a.to_rotation(), rz * ry * rx, epsilon = 1e-15);
    }

    #[test]
    fn skew_identities() {
        let x = Vector3::<f64>::x();
        assert_eq!(skew(&x) * Vector3::y(), Vector3::z());
        let v = Vector3::new(0.3, -1.2, 2.5);
        assert_eq!(skew(&v).transpose(), -skew(&v));
        assert_relative_eq!(skew(&v) * v, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn rigid_identity_pose_is_identity_map() {
        let theta = PoseParams::<f64>::identity(TranslationKind::Free);
        let p = Vector3::new(1.5, -2.0, 0.25);
        assert_eq!(apply_model(&CorrespondenceModel::Rigid3D, &p, &theta).unwrap(), p);
    }

    #[test]
    fn non_epipolar_q_map_is_identity() {
        let theta = PoseParams::rigid(0.1, 0.2, 0.3, Vector3::new(0.1, 0.0, 0.2));
        let q = Vector3::new(0.2, 0.4, 1.0);
        for m in [
            CorrespondenceModel::Rigid3D,
            CorrespondenceModel::Bearing3D2D,
            CorrespondenceModel::homography(Vector3::z(), 2.0).unwrap(),
        ] {
            assert_eq!(apply_q_model(&m, &q, &theta).unwrap(), q);
        }
    }

    #[test]
    fn epipolar_g_degenerates_along_translation() {
        let theta = PoseParams::new(
            EulerAngles::zero(),
            Translation::direction_of(&Vector3::new(0.3, 0.1, 1.0)).unwrap(),
        );
        let q = theta.translation_vector() * 2.0;
        let err = apply_q_model(&CorrespondenceModel::Epipolar2D2D, &q, &theta).unwrap_err();
        assert!(matches!(err, Error::DegenerateDirection { .. }));
    }

    #[test]
    fn homography_validation() {
        assert!(CorrespondenceModel::homography(Vector3::new(0.0, 0.0, 2.0), 1.0).is_err());
        assert!(CorrespondenceModel::homography(Vector3::z(), 0.0).is_err());
    }

    #[test]
    fn direction_parameterization_has_unit_norm() {
        let t = Translation::Direction {
            azimuth: 2.1,
            elevation: -0.4,
        };
        assert_relative_eq!(t.vector().norm(), 1.0, epsilon = 1e-15);
        let back = Translation::direction_of(&(t.vector() * 3.0)).unwrap();
        assert_relative_eq!(back.vector(), t.vector(), epsilon = 1e-14);
    }

    #[test]
    fn point_set_validation() {
        assert!(PointSet::<f64>::spatial(vec![]).is_err());
        assert!(PointSet::spatial(vec![Vector3::new(f64::NAN, 0.0, 0.0)]).is_err());
        assert!(PointSet::from_parts(2, vec![Vector3::new(0.1, 0.2, 2.0)], None).is_err());
        let s = PointSet::planar([(0.1, 0.2), (0.3, 0.4)]).unwrap();
        assert!(s.clone().with_gray(vec![0.5]).is_err());
        assert_eq!(s.with_gray(vec![0.5, 0.6]).unwrap().gray().unwrap().len(), 2);
    }

    #[test]
    fn f32_rotation_is_orthonormal() {
        let r = EulerAngles::<f32>::new(0.4, -1.1, 2.0).to_rotation();
        let e = (r.transpose() * r - Matrix3::identity()).abs().max();
        assert!(e < 1e-6);
    }

    fn angle() -> impl Strategy<Value = f64> {
        -PI..PI
    }

    proptest! {
        #[test]
        fn rotation_is_orthonormal(y in angle(), p in angle(), r in angle()) {
            let m = EulerAngles::new(y, p, r).to_rotation();
            prop_assert!(orthonormality_error(&m) < 1e-12);
            prop_assert!((m.determinant() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn euler_round_trip(y in angle(), p in -1.5..1.5f64, r in angle()) {
            let a = EulerAngles::new(y, p, r);
            let b = EulerAngles::from_rotation(&a.to_rotation());
            prop_assert!(wrap_angle(a.yaw - b.yaw).abs() < 1e-9);
            prop_assert!((a.pitch - b.pitch).abs() < 1e-9);
            prop_assert!(wrap_angle(a.roll - b.roll).abs() < 1e-9);
        }

        #[test]
        fn bearing_output_is_unit(y in angle(), p in angle(), r in angle(),
                                  x in -1.0..1.0f64, yy in -1.0..1.0f64) {
            let theta = PoseParams::rigid(y, p, r, Vector3::new(0.1, -0.2, 0.3));
            let h = apply_model(&CorrespondenceModel::Bearing3D2D,
                                &Vector3::new(x, yy, 1.0), &theta);
            if let Ok(h) = h {
                prop_assert!((h.norm() - 1.0).abs() < 1e-14);
            }
        }

        #[test]
        fn projective_models_are_scale_invariant(
            y in -0.5..0.5f64, p in -0.5..0.5f64, r in -0.5..0.5f64,
            u in -0.8..0.8f64, v in -0.8..0.8f64, s in 0.1..10.0f64,
        ) {
            let m = Vector3::new(u, v, 1.0);
            let free = PoseParams::rigid(y, p, r, Vector3::new(0.2, 0.1, -0.3));
            let dir = PoseParams::new(free.angles,
                Translation::Direction { azimuth: 0.7, elevation: 0.3 });
            let homog = CorrespondenceModel::homography(Vector3::z(), 1.5).unwrap();
            let cases = [
                (homog, free),
                (CorrespondenceModel::Epipolar2D2D, dir),
            ];
            for (model, theta) in cases {
                let a = apply_model(&model, &m, &theta).unwrap();
                let b = apply_model(&model, &(m * s), &theta).unwrap();
                prop_assert!((a - b).abs().max() < 1e-12);
            }
            // Bearing is scale invariant only without translation.
            let rot_only = PoseParams::rigid(y, p, r, Vector3::zeros());
            let a = apply_model(&CorrespondenceModel::Bearing3D2D, &m, &rot_only).unwrap();
            let b = apply_model(&CorrespondenceModel::Bearing3D2D, &(m * s), &rot_only).unwrap();
            prop_assert!((a - b).abs().max() < 1e-12);
        }

        #[test]
        fn map_jacobian_matches_central_difference(
            y in -1.0..1.0f64, p in -1.0..1.0f64, r in -1.0..1.0f64,
            u in -0.8..0.8f64, v in -0.8..0.8f64, kind in 0usize..4,
        ) {
            let (model, theta) = match kind {
                0 => (CorrespondenceModel::Rigid3D,
                      PoseParams::rigid(y, p, r, Vector3::new(0.3, -0.1, 0.2))),
                1 => (CorrespondenceModel::Bearing3D2D,
                      PoseParams::rigid(y, p, r, Vector3::new(0.3, -0.1, 0.2))),
                2 => (CorrespondenceModel::homography(Vector3::new(0.0, 0.6, 0.8), 2.0).unwrap(),
                      PoseParams::rigid(y, p, r, Vector3::new(0.3, -0.1, 0.2))),
                _ => (CorrespondenceModel::Epipolar2D2D,
                      PoseParams::new(EulerAngles::new(y, p, r),
                          Translation::Direction { azimuth: 0.4, elevation: -0.2 })),
            };
            let pt = Vector3::new(u, v, 1.0);
            let frame = PoseFrame::new(&model, &theta).unwrap();
            let (_, jac) = frame.map_with_jacobian(&pt).unwrap();
            let x0 = theta.to_vector();
            let step = 1e-6;
            for j in 0..theta.dof() {
                let mut xp = x0.clone();
                let mut xm = x0.clone();
                xp[j] += step;
                xm[j] -= step;
                let tk = theta.translation.kind();
                let hp = apply_model(&model, &pt, &PoseParams::from_slice(tk, xp.as_slice()).unwrap()).unwrap();
                let hm = apply_model(&model, &pt, &PoseParams::from_slice(tk, xm.as_slice()).unwrap()).unwrap();
                let fd = (hp - hm) / (2.0 * step);
                prop_assert!((fd - jac.column(j)).abs().max() < 1e-7);
            }
        }
    }
}
