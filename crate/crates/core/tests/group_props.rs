use liesys::dynamics::{CoefficientCurve, IntegrateOptions};
use liesys::expr::Chart;
use liesys::group::{act_solve, check_action_axioms, induced_lie_system, solve_group_equation, GroupAction, MatrixCurve};
use proptest::prelude::*;

fn curve_text() -> impl Strategy<Value = String> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b, c)| format!("({:.4}) + ({:.4})*t + ({:.4})*cos(3*t)", a, b, c))
}

fn sl2_curve() -> impl Strategy<Value = MatrixCurve> {
    prop::collection::vec(curve_text(), 3).prop_map(|b| {
        MatrixCurve::sl2([
            CoefficientCurve::parse(&b[0]).unwrap(),
            CoefficientCurve::parse(&b[1]).unwrap(),
            CoefficientCurve::parse(&b[2]).unwrap(),
        ])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn determinant_follows_liouville(d in 2usize..=3, entries in prop::collection::vec(curve_text(), 9)) {
        let rows: Vec<Vec<String>> = (0..d).map(|i| entries[i * d..(i + 1) * d].to_vec()).collect();
        let a = MatrixCurve::from_entries(&rows).unwrap();
        let g = solve_group_equation(&a, (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        prop_assert!(g.liouville_error <= 1e-6, "{:e}", g.liouville_error);
    }

    #[test]
    fn sl2_curves_stay_unimodular(a in sl2_curve()) {
        let g = solve_group_equation(&a, (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        prop_assert!(g.max_det_deviation(1.0) <= 1e-6);
    }

    /// Pushing the group solution through the action reproduces the induced Lie system.
    #[test]
    fn act_solve_matches_induced_system(a in sl2_curve(), x0 in prop::array::uniform2(-1.0f64..1.0)) {
        let opts = IntegrateOptions::default();
        let plane = Chart::new(&["x1", "x2"]).unwrap();
        let acted = act_solve(&a, GroupAction::Linear, &x0, (0.0, 1.0), &opts).unwrap();
        let direct = induced_lie_system(&a, GroupAction::Linear, &plane)
            .unwrap()
            .integrate(&x0, (0.0, 1.0), &opts)
            .unwrap();
        for (t, x) in acted.trajectory.t.iter().zip(&acted.trajectory.x) {
            let y = direct.sample(*t).unwrap();
            prop_assert!((x[0] - y[0]).abs().max((x[1] - y[1]).abs()) <= 1e-5);
        }
    }
}

#[test]
fn action_axioms_hold() {
    for (action, d) in [(GroupAction::Linear, 2), (GroupAction::Linear, 3), (GroupAction::Mobius, 2)] {
        let worst = check_action_axioms(action, d, 100, 5).unwrap();
        assert!(worst <= 1e-9, "{:?}: {:e}", action, worst);
    }
}
