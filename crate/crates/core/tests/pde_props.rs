use liesys::dynamics::{CoefficientCurve, IntegrateOptions, LieSystem, Trajectory};
use liesys::expr::Chart;
use liesys::geometry::VectorField;
use liesys::pde::{pde_superpose, PdeSystem, RectGrid, Staircase};
use liesys::superposition::{NewtonOptions, RuleSpec, SuperpositionRule};
use proptest::prelude::*;

fn small_poly() -> impl Strategy<Value = String> {
    prop::collection::vec(-2i64..=2, 4).prop_map(|c| format!("({}) + ({})*x + ({})*y + ({})*x*y", c[0], c[1], c[2], c[3]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curvature_is_antisymmetric(c in prop::collection::vec(small_poly(), 6)) {
        let coeffs: [&str; 6] = std::array::from_fn(|i| c[i].as_str());
        let sys = PdeSystem::riccati_family(coeffs).unwrap();
        let ab = sys.curvature_pair(0, 1);
        let ba = sys.curvature_pair(1, 0);
        prop_assert!(ab.residuals[0].add(&ba.residuals[0]).is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// `u_x = g(x+y)·F(u)`, `u_y = g(x+y)·F(u)` is flat for any g, F.
    #[test]
    fn symbolic_flatness_implies_path_independence(
        g in prop::collection::vec(-1i64..=1, 2),
        f in prop::collection::vec(-1i64..=1, 3),
        u0 in -0.5f64..0.5,
        seed in 0u64..1000,
    ) {
        let params = Chart::new(&["x", "y"]).unwrap();
        let chart = Chart::new(&["u"]).unwrap();
        let field = format!("(1 + ({})*(x + y)/2 + ({})*(x + y)^2/4)*(({}) + ({})*u + ({})*u^2)", g[0], g[1], f[0], f[1], f[2]);
        let sys = PdeSystem::new(&params, &chart, &[vec![field.clone()], vec![field]]).unwrap();
        prop_assert!(sys.curvature().flat);
        let audit = sys.path_independence_audit(&[u0], &[0.0, 0.0], &[0.3, 0.3], 8, seed, &IntegrateOptions::default());
        prop_assume!(audit.is_ok());
        prop_assert!(audit.unwrap().spread <= 1e-5);
    }
}

#[test]
fn single_parameter_reduces_to_ode() {
    let x = Chart::new(&["x"]).unwrap();
    let t = Chart::new(&["t"]).unwrap();
    let basis: Vec<VectorField> = ["1", "x", "x^2"].iter().map(|f| VectorField::parse(&x, &[*f]).unwrap()).collect();
    let coeffs = ["cos(t)", "t", "1/2"];
    let sys = LieSystem::new(basis, coeffs.iter().map(|c| CoefficientCurve::parse(c).unwrap()).collect()).unwrap();
    let pde = PdeSystem::new(&t, &x, &[vec!["cos(t) + t*x + x^2/2"]]).unwrap();
    assert!(pde.curvature().flat);
    assert_eq!(pde.curvature().pairs.len(), 0);
    let opts = IntegrateOptions::default();

    let ode = sys.integrate(&[0.2], (0.0, 1.0), &opts).unwrap();
    let path = pde.path_solve(&[0.2], &[0.0], &Staircase::axis_order(&[0.0], &[1.0], &[0]), &opts).unwrap();
    assert!((ode.last()[0] - path.endpoint[0]).abs() <= 1e-12);

    let grid = RectGrid::uniform(&[(0.0, 1.0)], 20).unwrap();
    let starts = [-0.4, 0.1, 0.5, 0.2];
    let sols: Vec<_> = starts.iter().map(|s| pde.solve_on_grid(&[*s], &grid, &opts).unwrap()).collect();
    let rule = SuperpositionRule::new(
        &x,
        &RuleSpec {
            m: 3,
            s: 1,
            psi: vec!["(x_0 - x_1)*(x_2 - x_3)/((x_0 - x_2)*(x_1 - x_3))".into()],
            phi: None,
            constraints: vec![],
        },
    )
    .unwrap();
    let parts: Vec<Trajectory> = sols[..3]
        .iter()
        .map(|s| Trajectory::from_samples(grid.axes[0].clone(), s.values.clone()))
        .collect();
    let p0: Vec<&[f64]> = parts.iter().map(|p| p.x[0].as_slice()).collect();
    let k = rule.constants_from(&[starts[3]], &p0).unwrap();
    let opts_n = NewtonOptions::default();
    let ode_rec = rule.reconstruct(&parts, &k, &[starts[3]], &opts_n).unwrap();
    let pde_rec = pde_superpose(&rule, &sols[..3], &k, &[starts[3]], &opts_n).unwrap();
    assert_eq!(ode_rec.trajectory.x, pde_rec.values);
    assert!(pde_rec.max_difference(&sols[3]) <= 1e-6);
}
