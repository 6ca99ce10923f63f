//! One function per CLI command; each turns a problem file into a [`Report`].

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use liesys::algebra::{closure_test, jacobi_residual, minimal_m, rational_to_string, span_coefficients, AlgebraError, SamplingConfig, Span, DEFAULT_DIMENSION_CAP};
use liesys::dynamics::{fundamental_set, uniform_grid, CoefficientCurve, FundamentalOptions, IntegrateOptions, LieSystem, Trajectory};
use liesys::expr::{Chart, Expr, RatFn, ZeroTest};
use liesys::geometry::{is_diagonal_prolongation, prolong_into, ProductChart, ProlongationCheck, VectorField};
use liesys::group::{act_solve, check_action_axioms, check_equivariance, induced_lie_system, solve_group_equation, GroupAction, MatrixCurve};
use liesys::pde::{pde_superpose, riccati_family_closedness, GridSolution, PdeSystem, RectGrid};
use liesys::superposition::{max_difference, NewtonOptions, PartialCheckOptions, SuperpositionRule, DEFAULT_TOL_CONSTRAINT, DEFAULT_TOL_ODE};

use crate::problem::{ActionKind, Outcome, ProblemFile, RuleEntry};
use crate::report::{Check, Report, Settings};
use crate::CliError;

pub const DEFAULT_TOL: f64 = liesys::dynamics::DEFAULT_TOL;
pub const DEFAULT_TOL_CONST: f64 = liesys::superposition::DEFAULT_TOL_CONST;
pub const DEFAULT_SAMPLES: usize = 64;
/// Reconstructed vs directly integrated solutions.
pub const TOL_MATCH: f64 = 1e-5;
/// Group-level checks: Liouville, unimodularity, equivariance.
pub const TOL_GROUP: f64 = 1e-6;
/// Max pairwise endpoint spread for PDE path independence.
pub const TOL_SPREAD: f64 = 1e-5;
pub const TOL_PHI_PSI: f64 = 1e-8;
pub const TOL_AXIOMS: f64 = 1e-9;
const TUPLE_INTERVALS: usize = 200;

/// Command-line values that take precedence over the problem file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub tol_const: Option<f64>,
    pub seed: Option<u64>,
    pub t_span: Option<[f64; 2]>,
    pub complete: bool,
    pub samples: Option<usize>,
    pub k: Option<Vec<f64>>,
    pub csv: Option<PathBuf>,
}

/// Resolved parameters for one command run.
#[derive(Clone, Debug)]
pub struct Context {
    pub settings: Settings,
    pub k: Option<Vec<f64>>,
    pub csv: Option<PathBuf>,
}

impl Context {
    pub fn new(p: &ProblemFile, ov: &Overrides) -> Result<Self, CliError> {
        let tol = ov.tol.or(p.task.tol).unwrap_or(DEFAULT_TOL);
        let tol_const = ov.tol_const.or(p.task.tol_const).unwrap_or(DEFAULT_TOL_CONST);
        if !(tol > 0.0 && tol_const > 0.0) {
            return Err(CliError::Usage("tolerances must be positive".into()));
        }
        let t_span = ov.t_span.or(p.task.t_span).unwrap_or([0.0, 1.0]);
        if !(t_span[0] < t_span[1]) {
            return Err(CliError::Usage("t-span must be increasing".into()));
        }
        let samples = ov.samples.or(p.task.samples).unwrap_or(DEFAULT_SAMPLES);
        if samples == 0 {
            return Err(CliError::Usage("samples must be positive".into()));
        }
        Ok(Context {
            settings: Settings {
                tol,
                tol_const,
                t_span,
                seed: ov.seed.or(p.task.seed).unwrap_or(0),
                samples,
                complete: ov.complete || p.task.complete.unwrap_or(false),
            },
            k: ov.k.clone().or_else(|| p.task.k.clone()),
            csv: ov.csv.clone(),
        })
    }

    fn opts(&self) -> IntegrateOptions {
        IntegrateOptions::with_tol(self.settings.tol)
    }

    fn span(&self) -> (f64, f64) {
        (self.settings.t_span[0], self.settings.t_span[1])
    }

    fn write_csv(&self, file: &str, body: &str) -> Result<Option<String>, CliError> {
        let Some(dir) = &self.csv else { return Ok(None) };
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {}", dir.display(), e)))?;
        let path = dir.join(file);
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e)))?;
        Ok(Some(path.display().to_string()))
    }
}

pub const COMMANDS: [&str; 9] = [
    "closure",
    "m",
    "solve",
    "superpose",
    "verify",
    "group",
    "pde check",
    "pde solve",
    "pde superpose",
];

/// Dispatches by command name; `prolongation` is also accepted.
pub fn run_command(name: &str, p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    match name {
        "closure" => closure(p, ctx),
        "m" => minimal(p, ctx),
        "solve" => solve(p, ctx),
        "superpose" => superpose(p, ctx),
        "verify" => verify(p, ctx),
        "group" => group(p, ctx),
        "pde check" => pde_check(p, ctx),
        "pde solve" => pde_solve(p, ctx),
        "pde superpose" => pde_superpose_cmd(p, ctx),
        "prolongation" => prolongation(p, ctx),
        other => Err(CliError::Usage(format!("unknown command '{}'", other))),
    }
}

fn expr_text(r: &RatFn) -> String {
    Expr::from_canonical(r).to_string()
}

fn field_text(f: &VectorField) -> String {
    format!("({})", f.component_strings().join(", "))
}

fn constant_lines(c: &liesys::algebra::StructureConstants) -> Vec<String> {
    let r = c.len();
    let mut out = Vec::new();
    for a in 0..r {
        for b in a + 1..r {
            for g in 0..r {
                if !num_traits::Zero::is_zero(&c[a][b][g]) {
                    out.push(format!("c[{}][{}][{}] = {}", a, b, g, rational_to_string(&c[a][b][g])));
                }
            }
        }
    }
    out
}

pub fn closure(p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    let mut rep = Report::new("closure", &p.label(), &ctx.settings);
    let basis = p.basis()?;
    let closure = match closure_test(&basis, ctx.settings.complete, DEFAULT_DIMENSION_CAP) {
        Ok(c) => c,
        Err(AlgebraError::CapExceeded { cap }) => {
            rep.check(Check::new("closed", false).detail(format!("completion exceeded dimension {}", cap)));
            return Ok(rep.finish());
        }
        Err(e) => return Err(CliError::module(e)),
    };
    let dim = closure.dimension();
    let mut closed = Check::new("closed", closure.closed).value(dim as f64);
    if let Some(w) = &closure.witness {
        closed = closed.detail(format!(
            "[X{}, X{}] = {} is outside the span",
            w.alpha,
            w.beta,
            field_text(&w.bracket)
        ));
    } else if closure.formal {
        closed = closed.detail("transcendental atoms matched formally");
    }
    rep.check(closed);
    let lines = constant_lines(&closure.constants);
    if closure.closed {
        let j = jacobi_residual(&closure.constants);
        rep.check(Check::new("jacobi", num_traits::Zero::is_zero(&j)).detail(format!("residual {}", rational_to_string(&j))));
    }
    if let Some(d) = p.expect.dimension {
        rep.check(Check::new("dimension", dim == d).value(dim as f64).detail(format!("expected {}", d)));
    }
    if let Some(expected) = &p.expect.constants {
        let mut want = expected.clone();
        let mut got = lines.clone();
        want.sort();
        got.sort();
        rep.check(Check::new("constants", want == got).detail(got.join(", ")));
    }
    rep.put("basis", closure.basis.iter().map(field_text).collect::<Vec<_>>());
    rep.put("dropped", &closure.dropped);
    rep.put("adjoined", closure.adjoined);
    rep.put("dimension_trace", &closure.dimension_trace);
    rep.put("constants", lines);
    Ok(rep.finish())
}

fn sampling(ctx: &Context, seed: u64) -> SamplingConfig {
    SamplingConfig {
        samples: ctx.settings.samples,
        seed,
        ..Default::default()
    }
}

pub fn minimal(p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    let mut rep = Report::new("m", &p.label(), &ctx.settings);
    let basis = p.basis()?;
    let r = minimal_m(&basis, &sampling(ctx, ctx.settings.seed)).map_err(CliError::module)?;
    rep.check(Check::new("m_le_r", r.m <= r.r).value(r.m as f64).detail(format!("m = {}, r = {}", r.m, r.r)));
    if let Some(want) = p.expect.m {
        rep.check(Check::new("m", r.m == want).value(r.m as f64).detail(format!("expected {}", want)));
        let seeds: Vec<u64> = (1..10).map(|j| ctx.settings.seed.wrapping_add(j)).collect();
        let others: Vec<usize> = seeds
            .par_iter()
            .map(|s| minimal_m(&basis, &sampling(ctx, *s)).map(|x| x.m))
            .collect::<Result<_, _>>()
            .map_err(CliError::module)?;
        rep.check(Check::new("seed_stable", others.iter().all(|m| *m == r.m)).detail(format!("10 seeds from {}", ctx.settings.seed)));
    }
    rep.put("m", r.m);
    rep.put("r", r.r);
    rep.put("profile", &r.profile);
    Ok(rep.finish())
}

fn start_point(p: &ProblemFile) -> Result<Vec<f64>, CliError> {
    p.task
        .x0
        .clone()
        .or_else(|| p.task.particular.as_ref().and_then(|v| v.first().cloned()))
        .ok_or_else(|| CliError::Schema("task.x0 is required".into()))
}

pub fn solve(p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    let mut rep = Report::new("solve", &p.label(), &ctx.settings);
    let sys = p.system()?;
    let x0 = start_point(p)?;
    let tr = sys.integrate(&x0, ctx.span(), &ctx.opts()).map_err(CliError::module)?;
    let mut c = Check::new("finite", !tr.is_truncated()).value(tr.end());
    if let Some(cut) = tr.truncated {
        c = c.detail(format!("{:?} at t = {}", cut.reason, cut.at));
    }
    rep.check(c);
    rep.put("endpoint", tr.last());
    rep.put("steps", tr.len() - 1);
    if let Some(path) = ctx.write_csv("trajectory.csv", &tr.to_csv(sys.chart().names()))? {
        rep.put("csv", path);
    }
    Ok(rep.finish())
}

/// Integrates every start on a shared uniform grid, stopping at the earliest truncation.
fn tuple_on_grid(sys: &LieSystem, starts: &[Vec<f64>], span: (f64, f64), opts: &IntegrateOptions) -> Result<Vec<Trajectory>, CliError> {
    let trajs: Vec<Trajectory> = starts
        .par_iter()
        .map(|x| sys.integrate(x, span, opts))
        .collect::<Result<_, _>>()
        .map_err(CliError::module)?;
    let end = trajs.iter().map(Trajectory::end).fold(span.1, f64::min);
    let grid = uniform_grid(span.0, end, TUPLE_INTERVALS);
    Ok(trajs.iter().map(|t| t.resample(&grid)).collect())
}

fn particulars(p: &ProblemFile, m: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let list = p
        .task
        .particular
        .as_ref()
        .ok_or_else(|| CliError::Schema("task.particular is required".into()))?;
    if list.len() < m {
        return Err(CliError::Schema(format!("rule needs {} particular solutions, task lists {}", m, list.len())));
    }
    Ok(list[..m].to_vec())
}

fn build_rule(chart: &Chart, entry: &RuleEntry) -> Result<SuperpositionRule, CliError> {
    SuperpositionRule::new(chart, &entry.spec()).map_err(CliError::module)
}

/// About a hundred checked times over the interval.
fn partial_options(ctx: &Context) -> PartialCheckOptions {
    let (a, b) = ctx.span();
    PartialCheckOptions {
        tol_ode: DEFAULT_TOL_ODE,
        tol_constraint: DEFAULT_TOL_CONSTRAINT,
        spacing: ((b - a) / 100.0).max(1e-3),
        ..Default::default()
    }
}

#[allow(clippy::too_many_arguments)]
fn partial_checks(
    rep: &mut Report,
    label: &str,
    rule: &SuperpositionRule,
    sys: &LieSystem,
    parts: &[Trajectory],
    k: &[f64],
    guess: Option<&[f64]>,
    expected: Outcome,
    ctx: &Context,
) {
    match rule.verify_partial_rule(sys, parts, k, guess, &partial_options(ctx)) {
        Ok(r) => {
            rep.check(Check::at_most(format!("ode_residual[{}]", label), r.ode_residual, DEFAULT_TOL_ODE).expect(expected));
            rep.check(
                Check::at_most(format!("constraint_residual[{}]", label), r.constraint_residual, DEFAULT_TOL_CONSTRAINT)
                    .expect(expected),
            );
        }
        Err(e) => rep.check(Check::new(format!("partial[{}]", label), false).detail(e.to_string()).expect(expected)),
    }
}

pub fn superpose(p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    let mut rep = Report::new("superpose", &p.label(), &ctx.settings);
    let sys = p.system()?;
    let chart = p.chart()?.clone();
    let rules = p.rules();
    if rules.is_empty() {
        return Err(CliError::Schema("superpose needs a `rule`".into()));
    }
    for (i, entry) in rules.iter().enumerate() {
        let label = entry.label(i);
        let rule = build_rule(&chart, entry)?;
        let starts = particulars(p, rule.m())?;
        let fopts = FundamentalOptions {
            seed: ctx.settings.seed,
            ..Default::default()
        };
        let parts = match fundamental_set(&sys, rule.m(), Some(starts), ctx.span(), &ctx.opts(), &fopts) {
            Ok(set) => set,
            Err(e) => {
                rep.check(Check::new(format!("fundamental[{}]", label), false).detail(e.to_string()));
                continue;
            }
        };
        let end = parts.iter().map(Trajectory::end).fold(ctx.span().1, f64::min);
        let grid = uniform_grid(ctx.span().0, end, TUPLE_INTERVALS);
        let parts: Vec<Trajectory> = parts.iter().map(|t| t.resample(&grid)).collect();
        if rule.is_partial() {
            let k = ctx
                .k
                .clone()
                .ok_or_else(|| CliError::Schema("a partial rule needs k (task.k or --k)".into()))?;
            partial_checks(&mut rep, &label, &rule, &sys, &parts, &k, p.task.x0.as_deref(), entry.expect, ctx);
            continue;
        }
        let start: Vec<&[f64]> = parts.iter().map(|t| t.x[0].as_slice()).collect();
        let x0 = p.task.x0.clone();
        let k = match (&ctx.k, &x0) {
            (Some(k), _) => k.clone(),
            (None, Some(x)) => rule.constants_from(x, &start).map_err(CliError::module)?,
            (None, None) => return Err(CliError::Schema("superpose needs k (task.k or --k) or task.x0".into())),
        };
        let guess = x0.clone().unwrap_or_else(|| start[0].to_vec());
        let rec = match rule.reconstruct(&parts, &k, &guess, &NewtonOptions::default()) {
            Ok(r) => r,
            Err(e) => {
                rep.check(Check::new(format!("reconstruct[{}]", label), false).detail(e.to_string()).expect(entry.expect));
                continue;
            }
        };
        let mut tuple = vec![rec.trajectory.clone()];
        tuple.extend(parts.iter().cloned());
        match rule.verify_along_solutions(&tuple, ctx.settings.tol_const) {
            Ok(d) => rep.check(Check::at_most(format!("leaf[{}]", label), d.max_drift(), ctx.settings.tol_const).detail("Ψ along the reconstruction")),
            Err(e) => rep.check(Check::new(format!("leaf[{}]", label), false).detail(e.to_string())),
        }
        // with k taken from x0, the reconstruction must be the solution through x0
        if let (Some(x), None) = (&x0, &ctx.k) {
            let direct = sys.integrate(x, (ctx.span().0, end), &ctx.opts()).map_err(CliError::module)?;
            let diff = max_difference(&rec.trajectory, &direct);
            rep.check(
                Check::at_most(format!("match[{}]", label), diff, TOL_MATCH)
                    .detail("reconstruction vs direct integration")
                    .expect(entry.expect),
            );
        }
        rep.put(&format!("k[{}]", label), &k);
        rep.put(&format!("endpoint[{}]", label), rec.trajectory.last());
        rep.put(&format!("newton_solves[{}]", label), rec.newton_solves);
        if let Some(c) = rec.phi_cross_check {
            rep.put(&format!("phi_newton_gap[{}]", label), c);
        }
        if let Some(path) = ctx.write_csv(&format!("superpose_{}.csv", label), &rec.trajectory.to_csv(chart.names()))? {
            rep.put(&format!("csv[{}]", label), path);
        }
    }
    Ok(rep.finish())
}

/// `c₀ + c₁ sin(ωt + φ)` with `|c| ≤ 1`.
fn random_curve(rng: &mut ChaCha8Rng) -> CoefficientCurve {
    let (c0, c1) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (w, phase) = (rng.gen_range(0.5..3.0), rng.gen_range(0.0..std::f64::consts::TAU));
    let text = format!("({:.6}) + ({:.6})*sin(({:.6})*t + ({:.6}))", c0, c1, w, phase);
    CoefficientCurve::parse(&text).expect("generated curve parses")
}

fn drift_on(rule: &SuperpositionRule, sys: &LieSystem, starts: &[Vec<f64>], ctx: &Context) -> Result<(f64, f64), String> {
    let tuple = tuple_on_grid(sys, starts, ctx.span(), &ctx.opts()).map_err(|e| e.to_string())?;
    let end = tuple[0].end();
    let d = rule
        .verify_along_solutions(&tuple, ctx.settings.tol_const)
        .map_err(|e| e.to_string())?;
    Ok((d.max_drift(), end))
}

pub fn verify(p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    let mut rep = Report::new("verify", &p.label(), &ctx.settings);
    let basis = p.basis()?;
    let sys = p.system()?;
    let chart = p.chart()?.clone();
    let rules = p.rules();
    if rules.is_empty() {
        return Err(CliError::Schema("verify needs a `rule`".into()));
    }
    for (i, entry) in rules.iter().enumerate() {
        let label = entry.label(i);
        let rule = build_rule(&chart, entry)?;
        let tangency = rule.verify_tangency(&basis).map_err(CliError::module)?;
        let nonzero: Vec<String> = tangency
            .residuals
            .iter()
            .filter(|r| r.verdict == ZeroTest::NonZero)
            .map(|r| format!("X{} on {:?} {}: {}", r.field, r.target, r.index, expr_text(&r.residual)))
            .collect();
        let mut t = Check::new(format!("tangency[{}]", label), tangency.all_zero()).expect(entry.expect);
        t = if !nonzero.is_empty() {
            t.detail(nonzero.join("; "))
        } else if tangency.is_probabilistic() {
            t.detail("zero at every sample (probabilistic)")
        } else {
            t.detail("exact")
        };
        rep.check(t);
        if rule.has_phi() {
            let err = rule
                .phi_psi_consistency(100, ctx.settings.seed)
                .map_err(CliError::module)?;
            rep.check(Check::at_most(format!("phi_psi[{}]", label), err, TOL_PHI_PSI));
        }
        let starts = particulars(p, rule.m())?;
        if rule.is_partial() {
            let k = ctx
                .k
                .clone()
                .ok_or_else(|| CliError::Schema("a partial rule needs k (task.k or --k)".into()))?;
            let parts = tuple_on_grid(&sys, &starts, ctx.span(), &ctx.opts())?;
            partial_checks(&mut rep, &label, &rule, &sys, &parts, &k, p.task.x0.as_deref(), entry.expect, ctx);
            continue;
        }
        let mut all = vec![start_point(p)?];
        all.extend(starts);
        let name = format!("drift[{}]", label);
        match drift_on(&rule, &sys, &all, ctx) {
            Ok((d, end)) => rep.check(
                Check::at_most(name, d, ctx.settings.tol_const)
                    .detail(format!("integrated tuple on [{}, {}]", ctx.span().0, end))
                    .expect(entry.expect),
            ),
            Err(e) => rep.check(Check::new(name, false).detail(e).expect(entry.expect)),
        }
        if let Some(draws) = p.task.random_coefficients {
            let results: Vec<Result<(f64, f64), String>> = (0..draws)
                .into_par_iter()
                .map(|j| {
                    let mut rng = ChaCha8Rng::seed_from_u64(ctx.settings.seed);
                    rng.set_stream(j as u64 + 1);
                    let curves = (0..basis.len()).map(|_| random_curve(&mut rng)).collect();
                    let s = LieSystem::new(basis.clone(), curves).map_err(|e| e.to_string())?;
                    drift_on(&rule, &s, &all, ctx)
                })
                .collect();
            let name = format!("drift_random[{}]", label);
            match results.into_iter().collect::<Result<Vec<_>, _>>() {
                Ok(v) => {
                    let worst = v.iter().map(|(d, _)| *d).fold(0.0, f64::max);
                    rep.check(
                        Check::at_most(name, worst, ctx.settings.tol_const)
                            .detail(format!("{} random bounded coefficient draws", draws))
                            .expect(entry.expect),
                    );
                }
                Err(e) => rep.check(Check::new(name, false).detail(e).expect(entry.expect)),
            }
        }
    }
    Ok(rep.finish())
}

fn matrix_curve(p: &ProblemFile) -> Result<(MatrixCurve, GroupAction, Option<[CoefficientCurve; 3]>), CliError> {
    let spec = p.action.as_ref().ok_or_else(|| CliError::Schema("group needs an `action`".into()))?;
    let action = match spec.kind {
        ActionKind::Linear => GroupAction::Linear,
        ActionKind::Mobius => GroupAction::Mobius,
    };
    if let Some(b) = &spec.sl2 {
        let curves: Vec<CoefficientCurve> = b
            .iter()
            .map(|s| CoefficientCurve::parse(s).map_err(CliError::module))
            .collect::<Result<_, _>>()?;
        let arr: [CoefficientCurve; 3] = curves.try_into().expect("three curves");
        Ok((MatrixCurve::sl2(arr.clone()), action, Some(arr)))
    } else {
        let rows = spec.matrix.as_ref().expect("validated");
        Ok((MatrixCurve::from_entries(rows).map_err(CliError::module)?, action, None))
    }
}

fn point_chart(action: GroupAction, d: usize) -> Chart {
    match action {
        GroupAction::Linear => Chart::new(&(1..=d).map(|i| format!("x{}", i)).collect::<Vec<_>>()).expect("valid chart"),
        GroupAction::Mobius => Chart::new(&["x"]).expect("valid chart"),
    }
}

pub fn group(p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    let mut rep = Report::new("group", &p.label(), &ctx.settings);
    let (a, action, sl2) = matrix_curve(p)?;
    let d = a.dim();
    let opts = ctx.opts();
    let g = solve_group_equation(&a, ctx.span(), &opts).map_err(CliError::module)?;
    rep.check(Check::at_most("liouville", g.liouville_error, TOL_GROUP).detail("|det g - exp(∫tr a)|"));
    rep.check(Check::at_most("defect", g.max_defect(), TOL_GROUP).detail("|ġg⁻¹ - a| at step midpoints"));
    if sl2.is_some() {
        rep.check(Check::at_most("unimodular", g.max_det_deviation(1.0), TOL_GROUP));
    }
    rep.check(Check::at_most("axioms", check_action_axioms(action, d, 100, ctx.settings.seed).map_err(CliError::module)?, TOL_AXIOMS));
    let chart = point_chart(action, d);
    let x0 = p
        .task
        .x0
        .clone()
        .unwrap_or_else(|| vec![if action == GroupAction::Mobius { 0.0 } else { 1.0 }; chart.dim()]);
    let acted = act_solve(&a, action, &x0, ctx.span(), &opts).map_err(CliError::module)?;
    let direct = induced_lie_system(&a, action, &chart)
        .map_err(CliError::module)?
        .integrate(&x0, ctx.span(), &opts)
        .map_err(CliError::module)?;
    // compare away from Möbius pole crossings, where the affine coordinate is meaningless
    let before_pole = acted.pole_crossings.first().map(|c| c.0).unwrap_or(f64::INFINITY);
    let diff = acted
        .trajectory
        .t
        .iter()
        .zip(&acted.trajectory.x)
        .filter(|(t, _)| **t < before_pole && **t <= direct.end())
        .filter_map(|(t, x)| direct.sample(*t).map(|y| (x.clone(), y)))
        .map(|(x, y)| x.iter().zip(&y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    rep.check(Check::at_most("act_vs_induced", diff, TOL_MATCH).detail(format!("{} action from {:?}", action.name(), x0)));
    rep.put("g_end", acted.group.g.last().map(|m| m.as_slice().to_vec()));
    rep.put("pole_crossings", &acted.pole_crossings);

    if let (Some(b), GroupAction::Linear) = (&sl2, action) {
        let x: [f64; 2] = x0.clone().try_into().map_err(|_| CliError::Schema("sl2 linear action needs a 2-dim x0".into()))?;
        let e = check_equivariance(b, x, ctx.span(), &opts, 0.1).map_err(CliError::module)?;
        rep.check(
            Check::at_most("equivariance", e.max_deviation, TOL_GROUP)
                .detail(format!("{} points compared, {} near the pole", e.compared, e.excluded)),
        );
        if let Some(draws) = p.task.random_coefficients {
            let results: Vec<Result<(f64, f64), String>> = (0..draws)
                .into_par_iter()
                .map(|j| {
                    let mut rng = ChaCha8Rng::seed_from_u64(ctx.settings.seed);
                    rng.set_stream(j as u64 + 1);
                    let b: [CoefficientCurve; 3] = std::array::from_fn(|_| random_curve(&mut rng));
                    // initial direction kept away from the line x₂ = 0
                    let theta = rng.gen_range(0.35..std::f64::consts::PI - 0.35);
                    let r = check_equivariance(&b, [theta.cos(), theta.sin()], ctx.span(), &opts, 0.1).map_err(|e| e.to_string())?;
                    Ok((r.max_deviation, r.det_deviation))
                })
                .collect();
            match results.into_iter().collect::<Result<Vec<_>, _>>() {
                Ok(v) => {
                    let dev = v.iter().map(|r| r.0).fold(0.0, f64::max);
                    let det = v.iter().map(|r| r.1).fold(0.0, f64::max);
                    rep.check(Check::at_most("equivariance_random", dev, TOL_GROUP).detail(format!("{} random coefficient triples", draws)));
                    rep.check(Check::at_most("unimodular_random", det, TOL_GROUP));
                }
                Err(e) => rep.check(Check::new("equivariance_random", false).detail(e)),
            }
        }
    }
    Ok(rep.finish())
}

fn build_pde(p: &ProblemFile) -> Result<PdeSystem, CliError> {
    let spec = p.pde.as_ref().ok_or_else(|| CliError::Schema("missing `pde` section".into()))?;
    if let Some(c) = &spec.riccati {
        let coeffs: [&str; 6] = std::array::from_fn(|i| c[i].as_str());
        return PdeSystem::riccati_family(coeffs).map_err(CliError::module);
    }
    let names: Vec<String> = spec
        .params
        .clone()
        .unwrap_or_else(|| (1..=spec.s).map(|a| format!("t{}", a)).collect());
    let params = Chart::new(&names).map_err(CliError::module)?;
    let chart = spec.chart.as_ref().expect("validated");
    let sys = PdeSystem::new(&params, chart, spec.fields.as_ref().expect("validated")).map_err(CliError::module)?;
    match &spec.decomposition {
        None => Ok(sys),
        Some(dec) => {
            let u = dec
                .u
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|e| Expr::parse(e, &params).and_then(|x| x.canonical()).map_err(CliError::module))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let basis = dec
                .basis
                .iter()
                .map(|f| VectorField::parse(chart, f).map_err(CliError::module))
                .collect::<Result<Vec<_>, _>>()?;
            sys.with_decomposition(u, basis).map_err(CliError::module)
        }
    }
}

fn flat_expectation(p: &ProblemFile) -> Outcome {
    if p.expect.flat == Some(false) {
        Outcome::Fail
    } else {
        Outcome::Pass
    }
}

pub fn pde_check(p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    let mut rep = Report::new("pde check", &p.label(), &ctx.settings);
    let sys = build_pde(p)?;
    let expected = flat_expectation(p);
    let curv = sys.curvature();
    let residuals: Vec<String> = curv
        .pairs
        .iter()
        .flat_map(|pair| {
            pair.residuals
                .iter()
                .enumerate()
                .map(move |(i, r)| format!("({},{})[{}] = {}", pair.a, pair.b, i, expr_text(r)))
        })
        .collect();
    let probabilistic = curv.pairs.iter().flat_map(|p| &p.verdicts).any(ZeroTest::is_probabilistic);
    let mut flat = Check::new("flat", curv.flat).expect(expected).detail(residuals.join("; "));
    if probabilistic {
        flat = flat.detail(format!("{} (probabilistic)", residuals.join("; ")));
    }
    rep.check(flat);
    if let Some(c) = p.pde.as_ref().and_then(|s| s.riccati.as_ref()) {
        let coeffs: [&str; 6] = std::array::from_fn(|i| c[i].as_str());
        let closed = riccati_family_closedness(coeffs).map_err(CliError::module)?;
        rep.check(
            Check::new("closedness", closed.iter().all(RatFn::is_zero))
                .expect(expected)
                .detail(closed.iter().map(expr_text).collect::<Vec<_>>().join(", ")),
        );
    }
    if sys.decomposition().is_some() {
        match sys.decomposition_residual() {
            Ok(res) => {
                let zero = res.iter().all(|(_, _, r)| r.iter().all(RatFn::is_zero));
                rep.check(Check::new("decomposition", zero).expect(expected));
            }
            Err(e) => rep.check(Check::new("decomposition", false).detail(e.to_string()).expect(expected)),
        }
    }
    rep.put("residuals", residuals);
    Ok(rep.finish())
}

fn origin(sys: &PdeSystem) -> Vec<f64> {
    vec![0.0; sys.s()]
}

pub fn pde_solve(p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    let mut rep = Report::new("pde solve", &p.label(), &ctx.settings);
    let sys = build_pde(p)?;
    let x0 = p.task.x0.clone().ok_or_else(|| CliError::Schema("task.x0 is required".into()))?;
    let target = p
        .task
        .target
        .clone()
        .ok_or_else(|| CliError::Schema("task.target is required".into()))?;
    let paths = p.task.paths.unwrap_or(8);
    let audit = sys
        .path_independence_audit(&x0, &origin(&sys), &target, paths, ctx.settings.seed, &ctx.opts())
        .map_err(CliError::module)?;
    rep.check(
        Check::at_most("path_independence", audit.spread, TOL_SPREAD)
            .detail(format!("{} staircases", audit.endpoints.len()))
            .expect(flat_expectation(p)),
    );
    rep.put("endpoint", &audit.endpoints[0]);
    rep.put("endpoints", &audit.endpoints);
    rep.put("paths", &audit.paths);
    Ok(rep.finish())
}

fn grid_csv(sol: &GridSolution, params: &[String], chart: &[String]) -> String {
    let mut out = params.iter().chain(chart).cloned().collect::<Vec<_>>().join(",");
    out.push('\n');
    for idx in sol.grid.snake_order() {
        let row: Vec<String> = sol
            .grid
            .point(&idx)
            .iter()
            .chain(sol.at(&idx))
            .map(|v| format!("{:.17e}", v))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn pde_superpose_cmd(p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    let mut rep = Report::new("pde superpose", &p.label(), &ctx.settings);
    let sys = build_pde(p)?;
    let spec = p.task.grid.as_ref().ok_or_else(|| CliError::Schema("task.grid is required".into()))?;
    let bounds: Vec<(f64, f64)> = spec.bounds.iter().map(|b| (b[0], b[1])).collect();
    let grid = RectGrid::uniform(&bounds, spec.intervals).map_err(CliError::module)?;
    let entry = p
        .rules()
        .into_iter()
        .find(|r| r.expect == Outcome::Pass)
        .ok_or_else(|| CliError::Schema("pde superpose needs a `rule`".into()))?;
    let rule = build_rule(sys.chart(), &entry)?;
    if let Some(dec) = sys.decomposition() {
        let t = rule.verify_tangency(&dec.basis).map_err(CliError::module)?;
        rep.check(Check::new("tangency", t.all_zero()).detail("rule vs decomposition basis"));
    }
    let starts = particulars(p, rule.m())?;
    let x0 = p.task.x0.clone().ok_or_else(|| CliError::Schema("task.x0 is required".into()))?;
    let opts = ctx.opts();
    let mut all = starts.clone();
    all.push(x0.clone());
    let sols: Vec<GridSolution> = all
        .par_iter()
        .map(|s| sys.solve_on_grid(s, &grid, &opts))
        .collect::<Result<_, _>>()
        .map_err(CliError::module)?;
    let (parts, direct) = sols.split_at(rule.m());
    let first = vec![0; sys.s()];
    let at0: Vec<&[f64]> = parts.iter().map(|s| s.at(&first)).collect();
    let k = match &ctx.k {
        Some(k) => k.clone(),
        None => rule.constants_from(&x0, &at0).map_err(CliError::module)?,
    };
    let out = pde_superpose(&rule, parts, &k, &x0, &NewtonOptions::default()).map_err(CliError::module)?;
    if ctx.k.is_none() {
        rep.check(
            Check::at_most("match", out.max_difference(&direct[0]), TOL_MATCH)
                .detail(format!("{} grid points vs path solution", grid.len())),
        );
    }
    rep.put("k", &k);
    rep.put("grid_points", grid.len());
    let params: Vec<String> = sys.params().names().to_vec();
    if let Some(path) = ctx.write_csv("pde_superpose.csv", &grid_csv(&out, &params, sys.chart().names()))? {
        rep.put("csv", path);
    }
    Ok(rep.finish())
}

pub fn prolongation(p: &ProblemFile, ctx: &Context) -> Result<Report, CliError> {
    let mut rep = Report::new("prolongation", &p.label(), &ctx.settings);
    let spec = p
        .combination
        .as_ref()
        .ok_or_else(|| CliError::Schema("missing `combination` section".into()))?;
    let chart = p.chart()?;
    let product = ProductChart::new(chart, spec.copies).map_err(CliError::module)?;
    let prolonged: Vec<VectorField> = spec
        .fields
        .iter()
        .map(|f| {
            VectorField::parse(chart, f)
                .and_then(|x| prolong_into(&x, &product))
                .map_err(CliError::module)
        })
        .collect::<Result<_, _>>()?;
    let mut z = VectorField::zero(product.chart());
    for (f, b) in prolonged.iter().zip(&spec.functions) {
        let b = Expr::parse(b, product.chart())
            .and_then(|e| e.canonical())
            .map_err(CliError::module)?;
        z = z.add(&f.scale(&b)).map_err(CliError::module)?;
    }
    rep.put("combination", field_text(&z));
    match is_diagonal_prolongation(&z, &product).map_err(CliError::module)? {
        ProlongationCheck::Yes { base } => {
            rep.check(Check::new("is_prolongation", true).detail(format!("base {}", field_text(&base))));
            if let Some(want) = &spec.base {
                let want = VectorField::parse(chart, want).map_err(CliError::module)?;
                rep.check(Check::new("base", want == base).detail(field_text(&want)));
            }
        }
        ProlongationCheck::No { witness } => {
            rep.check(Check::new("is_prolongation", false).detail(format!("{:?}", witness)));
        }
    }
    let span = span_coefficients(&z, &prolonged).map_err(CliError::module)?;
    let outside = matches!(span, Span::NotIn { .. });
    rep.check(Check::new("outside_constant_span", outside).detail(match span {
        Span::In(c) => format!("constant coefficients {}", c.iter().map(rational_to_string).collect::<Vec<_>>().join(", ")),
        Span::NotIn { .. } => "no constant combination of the prolonged fields".into(),
    }));
    Ok(rep.finish())
}

/// Seed for one catalog entry, derived from the master seed and the entry name.
pub fn entry_seed(master: u64, name: &str) -> u64 {
    // FNV-1a over the name, mixed with the master seed
    let mut h: u64 = 0xcbf29ce484222325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ master.wrapping_mul(0x9e3779b97f4a7c15)
}

/// Runs every command listed in the problem's `run` array.
pub fn run_problem(p: &ProblemFile, ov: &Overrides) -> Report {
    let mut ctx = match Context::new(p, ov) {
        Ok(c) => c,
        Err(e) => {
            let dummy = Context::new(&ProblemFile::default(), &Overrides::default()).expect("defaults are valid");
            let mut rep = Report::new("examples run", &p.label(), &dummy.settings);
            rep.check(Check::new("settings", false).detail(e.to_string()));
            return rep.finish();
        }
    };
    let mut rep = Report::new("examples run", &p.label(), &ctx.settings);
    let base_csv = ctx.csv.clone();
    for cmd in &p.run {
        ctx.csv = base_csv.as_ref().map(|d| d.join(p.label()).join(cmd.replace(' ', "_")));
        match run_command(cmd, p, &ctx) {
            Ok(r) => rep.children.push(r),
            Err(e) => {
                let mut r = Report::new(cmd, &p.label(), &ctx.settings);
                r.check(Check::new("error", false).detail(e.to_string()));
                rep.children.push(r.finish());
            }
        }
    }
    rep.put("description", p.description.clone().unwrap_or_default());
    rep.finish()
}
