//! Acceptance suite: one PASS/FAIL line per criterion with pinned tolerances.
//!
//! Criterion 6 asks the reciprocal rule `x = x1/(1 - k x1)` to reproduce
//! solutions of `ẋ = a(t)/x²`. That rule belongs to `ẋ = a(t) x²`; for `1/x²`
//! the leaves are `x0³ - x1³ = k`. The check is run as stated and is expected to
//! fail; the run aborts if any other criterion fails or if 6 starts passing.

use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use liesys::algebra::{closure_test, jacobi_residual, minimal_m, rational_to_string, span_coefficients, SamplingConfig, Span, DEFAULT_DIMENSION_CAP};
use liesys::dynamics::{CoefficientCurve, IntegrateOptions, LieSystem, DEFAULT_TOL};
use liesys::expr::{Chart, RatFn};
use liesys::geometry::{is_diagonal_prolongation, lie_bracket, prolong_into, ProductChart, ProlongationCheck, VectorField};
use liesys::pde::PdeSystem;
use liesys_cli::{catalog, Check, Overrides, Report};

type Criterion = (&'static str, fn() -> Outcome);

const KNOWN_UNATTAINABLE: &[usize] = &[6];

const TOL_MATCH_RICCATI: f64 = 1e-5;
const TOL_MATCH_LINEAR: f64 = 1e-6;
const TOL_MATCH_SEPARABLE: f64 = 1e-6;
const TOL_DRIFT: f64 = 1e-6;
const TOL_EQUIVARIANCE: f64 = 1e-6;
const TOL_DET: f64 = 1e-6;
const TOL_ODE_RESIDUAL: f64 = 1e-4;
const TOL_CONSTRAINT: f64 = 1e-8;
const TOL_SPREAD_FLAT: f64 = 1e-5;
const MIN_SPREAD_NONFLAT: f64 = 1e-3;
const TOL_PDE_GRID: f64 = 1e-5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn entry(name: &str) -> (Report, Duration) {
    let start = Instant::now();
    let rep = catalog::run(name, 0, &Overrides::default()).expect("catalog entry loads");
    (rep, start.elapsed())
}

/// First check called `name` under the child report for `command`.
fn check<'a>(rep: &'a Report, command: &str, name: &str) -> &'a Check {
    rep.children
        .iter()
        .filter(|c| c.command == command)
        .flat_map(|c| c.checks.iter())
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("{}: no check {} under {}", rep.problem, name, command))
}

fn value(rep: &Report, command: &str, name: &str) -> f64 {
    check(rep, command, name).value.unwrap_or(f64::NAN)
}

fn fields(chart: &Chart, comps: &[&[&str]]) -> Vec<VectorField> {
    comps.iter().map(|c| VectorField::parse(chart, c).unwrap()).collect()
}

fn riccati_m() -> Outcome {
    let x = Chart::new(&["x"]).unwrap();
    let basis = fields(&x, &[&["1"], &["x"], &["x^2"]]);
    let start = Instant::now();
    let ms: Vec<usize> = (0..10)
        .map(|seed| minimal_m(&basis, &SamplingConfig { seed, ..SamplingConfig::default() }).unwrap().m)
        .collect();
    let elapsed = start.elapsed();
    let pass = ms.iter().all(|&m| m == 3) && elapsed < Duration::from_secs(1);
    outcome(pass, format!("m over 10 seeds {:?}, {:.3} s", ms, elapsed.as_secs_f64()))
}

fn euclidean() -> Outcome {
    let (rep, elapsed) = entry("euclidean_se2");
    let m = value(&rep, "m", "m");
    let drift = value(&rep, "verify", "drift[distances]").max(value(&rep, "verify", "drift_random[distances]"));
    let pass = m == 2.0 && drift <= TOL_DRIFT && elapsed < Duration::from_secs(5);
    outcome(pass, format!("m = {}, drift {:.2e} (limit {:.0e}), {:.3} s", m, drift, TOL_DRIFT, elapsed.as_secs_f64()))
}

fn prolongation_outside_span() -> Outcome {
    let x = Chart::new(&["x"]).unwrap();
    let product = ProductChart::new(&x, 2).unwrap();
    let prolonged: Vec<VectorField> = fields(&x, &[&["1"], &["x"]])
        .iter()
        .map(|f| prolong_into(f, &product).unwrap())
        .collect();
    let parse = |s: &str| liesys::expr::Expr::parse(s, product.chart()).unwrap().canonical().unwrap();
    let z = prolonged[0]
        .scale(&parse("x_0*x_1"))
        .add(&prolonged[1].scale(&parse("-(x_0 + x_1)")))
        .unwrap();
    let want = VectorField::parse(&x, &["-x^2"]).unwrap();
    let base_ok = matches!(is_diagonal_prolongation(&z, &product).unwrap(), ProlongationCheck::Yes { base } if base == want);
    let outside = matches!(span_coefficients(&z, &prolonged).unwrap(), Span::NotIn { .. });
    outcome(base_ok && outside, format!("prolongation of -x^2 d/dx: {}, outside constant span: {}", base_ok, outside))
}

fn closure_exactness() -> Outcome {
    let x = Chart::new(&["x"]).unwrap();
    let rep = closure_test(&fields(&x, &[&["1"], &["x"], &["x^2"]]), false, DEFAULT_DIMENSION_CAP).unwrap();
    let mut nonzero = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            for g in 0..3 {
                let c = rep.constant(a, b, g);
                if a < b && !c.is_zero() {
                    nonzero.push(format!("c[{}][{}][{}]={}", a, b, g, rational_to_string(c)));
                }
            }
        }
    }
    let constants_ok = nonzero == ["c[0][1][0]=1", "c[0][2][1]=2", "c[1][2][2]=1"];
    let jacobi_ok = jacobi_residual(&rep.constants).is_zero();
    let completed = closure_test(&fields(&x, &[&["1"], &["x^2"]]), true, DEFAULT_DIMENSION_CAP).unwrap();
    let pass = rep.closed && constants_ok && jacobi_ok && completed.closed && completed.dimension() == 3;
    outcome(
        pass,
        format!("{}, jacobi zero: {}, completion dimension {}", nonzero.join(" "), jacobi_ok, completed.dimension()),
    )
}

fn round_trip() -> Outcome {
    let (ric, _) = entry("riccati");
    let (lin, _) = entry("linear2");
    let e1 = value(&ric, "superpose", "match[cross_ratio]");
    let e2 = value(&lin, "superpose", "match[linear]");
    let pass = e1 <= TOL_MATCH_RICCATI && e2 <= TOL_MATCH_LINEAR;
    outcome(
        pass,
        format!("riccati {:.2e} (limit {:.0e}), linear2 {:.2e} (limit {:.0e})", e1, TOL_MATCH_RICCATI, e2, TOL_MATCH_LINEAR),
    )
}

fn separable() -> Outcome {
    let (rep, _) = entry("separable_invsq");
    let e = value(&rep, "superpose", "match[reciprocal]");
    let cubes = value(&rep, "superpose", "match[cubes]");
    outcome(
        e <= TOL_MATCH_SEPARABLE,
        format!(
            "x1/(1 - k x1) on 1/x^2: {:.2e} (limit {:.0e}); x0^3 - x1^3 = k gives {:.2e}",
            e, TOL_MATCH_SEPARABLE, cubes
        ),
    )
}

fn group_equivariance() -> Outcome {
    let (rep, _) = entry("sl2_group");
    let eq = value(&rep, "group", "equivariance_random");
    let det = value(&rep, "group", "unimodular").max(value(&rep, "group", "unimodular_random"));
    let draws = check(&rep, "group", "equivariance_random").detail.clone().unwrap_or_default();
    outcome(
        eq <= TOL_EQUIVARIANCE && det <= TOL_DET,
        format!("ratio vs Riccati {:.2e} ({}), |det g - 1| {:.2e}", eq, draws, det),
    )
}

fn partial_rules() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for (name, rule) in [("partial_linear_rank1", "scaling"), ("partial_linear_rank1_m2", "affine_line")] {
        let (rep, _) = entry(name);
        if !check(&rep, "verify", &format!("tangency[{}]", rule)).pass {
            return outcome(false, format!("{}: rule not tangent", name));
        }
        worst.0 = worst.0.max(value(&rep, "verify", &format!("ode_residual[{}]", rule)));
        worst.1 = worst.1.max(value(&rep, "verify", &format!("constraint_residual[{}]", rule)));
    }
    outcome(
        worst.0 <= TOL_ODE_RESIDUAL && worst.1 <= TOL_CONSTRAINT,
        format!("ode residual {:.2e}, constraints {:.2e}", worst.0, worst.1),
    )
}

fn pde_flatness() -> Outcome {
    let flat = PdeSystem::riccati_family(["1", "0", "0", "1", "0", "0"]).unwrap();
    let flat_exact = flat.curvature().flat;
    let params = Chart::new(&["x", "y"]).unwrap();
    let u = Chart::new(&["u"]).unwrap();
    let nonflat = PdeSystem::new(&params, &u, &[vec!["u"], vec!["x*u"]]).unwrap();
    let residual = nonflat.curvature_pair(0, 1).residuals[0].clone();
    let residual_u = residual == RatFn::var("u");

    let (fr, _) = entry("pde_riccati");
    let (nr, _) = entry("pde_nonflat");
    let spread_flat = value(&fr, "pde solve", "path_independence");
    let spread_nonflat = value(&nr, "pde solve", "path_independence");
    let grid = value(&fr, "pde superpose", "match");
    let points = check(&fr, "pde superpose", "match").detail.clone().unwrap_or_default();
    let pass = flat_exact
        && residual_u
        && spread_flat <= TOL_SPREAD_FLAT
        && spread_nonflat > MIN_SPREAD_NONFLAT
        && grid <= TOL_PDE_GRID
        && points.starts_with("121 ");
    outcome(
        pass,
        format!(
            "flat exact: {}, non-flat residual {}, spread {:.2e} / {:.2e}, grid {:.2e} ({})",
            flat_exact, residual, spread_flat, spread_nonflat, grid, points
        ),
    )
}

fn random_quadratic(rng: &mut ChaCha8Rng, chart: &Chart) -> VectorField {
    let mut comp = || {
        let c: Vec<i64> = (0..6).map(|_| rng.gen_range(-3..=3)).collect();
        format!("{} + {}*x + {}*y + {}*x^2 + {}*x*y + {}*y^2", c[0], c[1], c[2], c[3], c[4], c[5])
    };
    let (a, b) = (comp(), comp());
    VectorField::parse(chart, &[a, b]).unwrap()
}

fn property_suites() -> Outcome {
    let chart = Chart::new(&["x", "y"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut algebra_ok = true;
    for _ in 0..200 {
        let (x, y, z) = (random_quadratic(&mut rng, &chart), random_quadratic(&mut rng, &chart), random_quadratic(&mut rng, &chart));
        let b = |p: &VectorField, q: &VectorField| lie_bracket(p, q).unwrap();
        algebra_ok &= b(&x, &y).add(&b(&y, &x)).unwrap().is_zero();
        let jac = b(&x, &b(&y, &z)).add(&b(&y, &b(&z, &x))).unwrap().add(&b(&z, &b(&x, &y))).unwrap();
        algebra_ok &= jac.is_zero();
    }
    let mut commute_ok = true;
    for _ in 0..100 {
        let (x, y) = (random_quadratic(&mut rng, &chart), random_quadratic(&mut rng, &chart));
        let product = ProductChart::new(&chart, rng.gen_range(2..=4)).unwrap();
        let lhs = prolong_into(&lie_bracket(&x, &y).unwrap(), &product).unwrap();
        let rhs = lie_bracket(&prolong_into(&x, &product).unwrap(), &prolong_into(&y, &product).unwrap()).unwrap();
        commute_ok &= lhs == rhs;
    }
    let line = Chart::new(&["x"]).unwrap();
    type Exact = fn(f64) -> f64;
    let analytic: [(&str, f64, Exact); 3] = [
        ("x", 1.0, |t| t.exp()),
        ("1/x^2", 1.0, |t| (1.0 + 3.0 * t).cbrt()),
        ("1 + x^2", 0.0, |t| t.tan()),
    ];
    let mut factors = Vec::new();
    for (f, x0, exact) in analytic {
        let sys = LieSystem::new(fields(&line, &[&[f]]), vec![CoefficientCurve::constant(1.0)]).unwrap();
        let err = |tol: f64| (sys.integrate(&[x0], (0.0, 1.0), &IntegrateOptions::with_tol(tol)).unwrap().last()[0] - exact(1.0)).abs();
        factors.push(err(DEFAULT_TOL) / err(DEFAULT_TOL / 2.0));
    }
    let convergence_ok = factors.iter().all(|&r| r >= 2.0);
    let start = Instant::now();
    let all = catalog::run_all(0, &Overrides::default()).unwrap();
    let elapsed = start.elapsed();
    let pass = algebra_ok && commute_ok && convergence_ok && all.pass && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "jacobi/antisymmetry {}, prolongation commutes {}, convergence factors {:.2?}, run-all {} in {:.2} s",
            algebra_ok,
            commute_ok,
            factors,
            if all.pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Riccati fundamental-set size", riccati_m),
        ("Euclidean m and distance invariants", euclidean),
        ("prolongation outside the constant span", prolongation_outside_span),
        ("closure exactness", closure_exactness),
        ("superposition round trip", round_trip),
        ("separable closed form", separable),
        ("group equivariance", group_equivariance),
        ("partial rules", partial_rules),
        ("PDE flatness", pde_flatness),
        ("property suites and run-all", property_suites),
    ];
    let mut unexpected = Vec::new();
    for (i, (title, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let o = run();
        let known = KNOWN_UNATTAINABLE.contains(&n);
        let note = match (o.pass, known) {
            (false, true) => " [known unattainable]",
            (true, true) => " [expected to fail, now passes]",
            _ => "",
        };
        println!("criterion {:>2} {}: {}{}: {}", n, if o.pass { "PASS" } else { "FAIL" }, title, note, o.detail);
        if o.pass == known {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {:?}", unexpected);
        std::process::exit(1);
    }
}
