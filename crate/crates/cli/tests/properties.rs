use cfpose::{Pose, TranslationKind};
use cfpose_cli::bench::LinearFit;
use cfpose_cli::commands::parse_pose;
use proptest::prelude::*;

proptest! {
    #[test]
    fn exact_lines_are_fitted_exactly(slope in -50.0..50.0f64, intercept in -10.0..10.0f64, n in 2usize..20) {
        let x: Vec<f64> = (0..n).map(|i| 100.0 * (i + 1) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| slope * v + intercept).collect();
        let fit = LinearFit::fit(&x, &y).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-9 * slope.abs().max(1.0));
        prop_assert!((fit.intercept - intercept).abs() <= 1e-6 * intercept.abs().max(1.0));
        if slope.abs() > 1e-6 {
            prop_assert!(fit.r_squared > 1.0 - 1e-9);
        }
    }

    #[test]
    fn comma_poses_match_json_poses(v in prop::collection::vec(-3.0..3.0f64, 6)) {
        let text = v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let a = parse_pose(&text, TranslationKind::Free).unwrap();
        let b = parse_pose(&serde_json::to_string(&a).unwrap(), TranslationKind::Free).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(a, Pose::from_slice(TranslationKind::Free, &v).unwrap());
    }
}
