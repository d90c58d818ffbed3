//! Correspondence-free relative pose estimation.
//!
//! Two point sets related by an unknown pose and an unknown point correspondence
//! are compared through set averages of scalar feature functions. Averages do
//! not depend on point order, so the pose can be fitted by nonlinear least
//! squares without ever matching individual points.
//!
//! The numeric core ([`geometry`], [`features`], [`solver`], [`robust`]) is
//! generic over the scalar type through [`Real`]; the aliases below fix it to
//! `f64`, which is what [`simgen`] and [`io`] use.

pub mod error;
pub mod features;
pub mod geometry;
pub mod io;
pub mod robust;
pub mod scalar;
pub mod simgen;
pub mod solver;

pub use error::{Error, Result};
pub use features::{
    aggregate, aggregate_mapped, aggregate_scalars, aggregate_vectors, normalize_bearing_set,
    AggregateFeatures, FeatureBasis, FeatureFn, NormalizationStats, Term,
};
pub use geometry::{
    apply_model, apply_q_model, rotation_from_euler, skew, CorrespondenceModel, EulerAngles,
    ModelKind, PointSet, PoseParams, Translation, TranslationKind,
};
pub use robust::{
    kmeans_gray, pair_clusters, per_point_residual, per_point_residuals, ransac_solve, select_by_gray,
    ClusterPairing, GrayCluster, OcclusionConfig, RansacConfig, RansacOutcome, Thresholds,
};
pub use scalar::Real;
pub use solver::{
    minimize, solve, Convergence, Estimate, JacobianMode, LeastSquares, Problem, ProblemOptions,
    ScaleProblem, SolverConfig,
};

pub type Pose = PoseParams<f64>;
pub type Pose32 = PoseParams<f32>;
pub type Points = PointSet<f64>;
pub type Points32 = PointSet<f32>;
pub type Basis = FeatureBasis<f64>;
pub type Model = CorrespondenceModel<f64>;
pub type PoseProblem = Problem<f64>;
pub type PoseEstimate = Estimate<f64>;
