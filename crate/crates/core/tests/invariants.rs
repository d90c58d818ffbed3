use cfpose::geometry::{rotation_angle_between, EulerAngles};
use cfpose::{
    aggregate, minimize, Basis, JacobianMode, Model, Points, Pose, PoseProblem, ScaleProblem, SolverConfig,
};
use nalgebra::{DVector, Vector3};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn pose() -> impl Strategy<Value = Pose> {
    (-0.6..0.6f64, -0.6..0.6f64, -0.6..0.6f64, point())
        .prop_map(|(a, b, c, t)| Pose::rigid(a, b, c, 0.5 * t))
}

/// A vector together with a permutation of its indices.
fn shuffled(min: usize, max: usize) -> impl Strategy<Value = (Vec<Vector3<f64>>, Vec<usize>)> {
    prop::collection::vec(point(), min..max).prop_flat_map(|pts| {
        let idx: Vec<usize> = (0..pts.len()).collect();
        (Just(pts), Just(idx).prop_shuffle())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregate_ignores_order((pts, perm) in shuffled(1, 40)) {
        let basis = Basis::paper18();
        let a = Points::spatial(pts.clone()).unwrap();
        let b = Points::spatial(perm.iter().map(|&i| pts[i]).collect()).unwrap();
        prop_assert_eq!(aggregate(&a, &basis), aggregate(&b, &basis));
    }

    #[test]
    fn aggregate_ignores_duplication(pts in prop::collection::vec(point(), 1..30), copies in 2usize..5) {
        let basis = Basis::paper18();
        let once = Points::spatial(pts.clone()).unwrap();
        let many = Points::spatial(pts.iter().cycle().take(pts.len() * copies).copied().collect()).unwrap();
        prop_assert_eq!(aggregate(&once, &basis), aggregate(&many, &basis));
    }

    #[test]
    fn exact_rigid_data_has_zero_residual_at_truth(truth in pose(), (pts, perm) in shuffled(6, 30)) {
        let q: Vec<Vector3<f64>> = perm
            .iter()
            .map(|&i| truth.rotation() * pts[i] + truth.translation_vector())
            .collect();
        let problem = PoseProblem::new(
            Model::Rigid3D,
            Points::spatial(pts).unwrap(),
            Points::spatial(q).unwrap(),
            Basis::paper18(),
        )
        .unwrap();
        prop_assert!(problem.objective(&truth).unwrap() < 1e-24);
    }

    #[test]
    fn analytic_jacobian_matches_central_differences(theta in pose(), pts in prop::collection::vec(point(), 6..20)) {
        let q: Vec<Vector3<f64>> = pts.iter().map(|p| p * 0.9 + Vector3::new(0.1, 0.0, -0.1)).collect();
        let problem = PoseProblem::new(
            Model::Rigid3D,
            Points::spatial(pts).unwrap(),
            Points::spatial(q).unwrap(),
            Basis::paper18(),
        )
        .unwrap();
        let ja = problem.jacobian(&theta, JacobianMode::Analytic).unwrap();
        let jn = problem.jacobian(&theta, JacobianMode::CentralDiff).unwrap();
        let scale = ja.amax().max(1.0);
        prop_assert!((ja - jn).amax() <= 1e-6 * scale);
    }

    #[test]
    fn euler_angles_round_trip(yaw in -3.0..3.0f64, pitch in -1.5..1.5f64, roll in -3.0..3.0f64) {
        let angles = EulerAngles::new(yaw, pitch, roll);
        let r = angles.to_rotation();
        let back = EulerAngles::from_rotation(&r).to_rotation();
        prop_assert!(rotation_angle_between(&r, &back) < 1e-9);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        prop_assert!((r.transpose() * r - nalgebra::Matrix3::identity()).amax() < 1e-12);
    }

    #[test]
    fn accepted_objectives_never_increase(start in 0.2..4.0f64) {
        let p = [0.1, 0.35, 0.5, 0.8, 0.95];
        let q: Vec<f64> = p.iter().map(|x| 1.4 * x).collect();
        let problem = ScaleProblem::new(&p, &q, Basis::paper18()).unwrap();
        let report = minimize(&problem, DVector::from_element(1, start), &SolverConfig::default()).unwrap();
        prop_assert!(report.accepted_objectives.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn pose_json_round_trip() {
    let theta = Pose::rigid(0.1, -0.2, 0.3, Vector3::new(1.0, 2.0, -3.0));
    let text = serde_json::to_string(&theta).unwrap();
    let back: Pose = serde_json::from_str(&text).unwrap();
    assert_eq!(theta, back);
}
