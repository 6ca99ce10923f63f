use liesys::dynamics::{CoefficientCurve, IntegrateOptions, LieSystem, DEFAULT_TOL};
use liesys::expr::Chart;
use liesys::geometry::VectorField;
use proptest::prelude::*;

fn system(chart: &[&str], fields: &[&[&str]], coeffs: &[String]) -> LieSystem {
    let c = Chart::new(chart).unwrap();
    LieSystem::new(
        fields.iter().map(|f| VectorField::parse(&c, f).unwrap()).collect(),
        coeffs.iter().map(|b| CoefficientCurve::parse(b).unwrap()).collect(),
    )
    .unwrap()
}

type Exact = fn(f64) -> f64;

fn analytic_examples() -> Vec<(&'static str, f64, Exact)> {
    vec![
        ("x", 1.0, |t| t.exp()),
        ("1/x^2", 1.0, |t| (1.0 + 3.0 * t).cbrt()),
        ("1 + x^2", 0.0, |t| t.tan()),
    ]
}

#[test]
fn halving_tolerance_at_least_halves_the_error() {
    for (f, x0, exact) in analytic_examples() {
        let sys = system(&["x"], &[&[f]], &["1".into()]);
        let err = |tol: f64| {
            let tr = sys.integrate(&[x0], (0.0, 1.0), &IntegrateOptions::with_tol(tol)).unwrap();
            (tr.last()[0] - exact(1.0)).abs()
        };
        let (coarse, fine) = (err(DEFAULT_TOL), err(DEFAULT_TOL / 2.0));
        assert!(coarse >= 2.0 * fine, "{}: {:e} vs {:e}", f, coarse, fine);
    }
}

fn riccati_coeffs() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3)
        .prop_map(|c| c.iter().map(|(a, b)| format!("({:.4}) + ({:.4})*sin(t)", a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Central differences of the emitted samples match the field at interior
    /// grid points up to a second-order term in the local step.
    #[test]
    fn finite_differences_match_field(b in riccati_coeffs(), x0 in -0.5f64..0.5) {
        let sys = system(&["x"], &[&["1"], &["x"], &["x^2"]], &b);
        let tr = sys.integrate(&[x0], (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        prop_assume!(!tr.is_truncated() && tr.len() >= 3);
        for i in 1..tr.len() - 1 {
            let (h1, h2) = (tr.t[i] - tr.t[i - 1], tr.t[i + 1] - tr.t[i]);
            let fd = (tr.x[i + 1][0] - tr.x[i - 1][0]) / (h1 + h2);
            let f = sys.evaluate_field(tr.t[i], &tr.x[i]).unwrap()[0];
            let h = h1.max(h2);
            let scale = 1.0 + tr.x[i][0].abs().powi(3);
            prop_assert!(
                (fd - f).abs() <= 10.0 * scale * (h * h + (h2 - h1).abs()),
                "t = {}, fd = {}, f = {}, h = {}", tr.t[i], fd, f, h
            );
        }
    }

    #[test]
    fn autonomous_flow_composes(
        c in prop::collection::vec(-1.0f64..1.0, 3),
        x0 in prop::array::uniform2(-1.0f64..1.0),
        a in 0.1f64..0.6,
        b in 0.1f64..0.6,
    ) {
        // linear flow with a rotation part
        let coeffs: Vec<String> = c.iter().map(|v| format!("{:.6}", v)).collect();
        let sys = system(&["x", "y"], &[&["x", "y"], &["y", "-x"], &["1", "0"]], &coeffs);
        let opts = IntegrateOptions::default();
        let first = sys.integrate(&x0, (0.0, a), &opts).unwrap();
        let chained = sys.integrate(first.last(), (a, a + b), &opts).unwrap();
        let direct = sys.integrate(&x0, (0.0, a + b), &opts).unwrap();
        for i in 0..2 {
            prop_assert!((chained.last()[i] - direct.last()[i]).abs() <= 10.0 * opts.tol);
        }
    }
}
