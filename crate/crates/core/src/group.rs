//! Lie systems on matrix groups: the right-invariant equation `ġ g⁻¹ = a(t)`,
//! group actions on homogeneous spaces, and the SL(2,ℝ) → Riccati projection.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    integrate_rhs, CoefficientCurve, DynamicsError, IntegrateOptions, LieSystem, Trajectory, TruncationReason,
};
use crate::expr::{Chart, Expr, ExprError, RatFn};
use crate::geometry::{GeometryError, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error("matrix curve needs a positive square dimension")]
    EmptyCurve,
    #[error("matrix entry table is not {0}×{0}")]
    NotSquare(usize),
    #[error("{basis} basis matrices but {coefficients} coefficient curves")]
    CountMismatch { basis: usize, coefficients: usize },
    #[error("basis matrix entry '{0}' is not a constant")]
    NonConstantEntry(String),
    #[error("action expects a {expected}-dimensional group, got {got}")]
    ActionDimension { expected: usize, got: usize },
    #[error("point has dimension {got}, expected {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("‖g‖ blew up at t = {t}")]
    BlowUp { t: f64 },
    #[error("the initial point must have x2 ≠ 0")]
    InitialPole,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// `t ↦ a(t)`, given entrywise or as `Σ b_α(t) a_α` with constant `a_α`.
#[derive(Clone, Debug)]
pub enum MatrixCurve {
    Entries {
        d: usize,
        entries: Vec<CoefficientCurve>,
    },
    Combination {
        d: usize,
        basis: Vec<DMatrix<f64>>,
        coefficients: Vec<CoefficientCurve>,
    },
}

/// `a_1, a_2, a_3` with `Σ b_α a_α = [[b_2/2, b_1], [−b_3, −b_2/2]]`.
pub fn sl2_basis() -> Vec<DMatrix<f64>> {
    vec![
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -1.0, 0.0]),
    ]
}

/// Parses a matrix of constant expression strings.
pub fn constant_matrix<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<DMatrix<f64>, GroupError> {
    let d = rows.len();
    if d == 0 {
        return Err(GroupError::EmptyCurve);
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err(GroupError::NotSquare(d));
    }
    let empty = Chart::new::<&str>(&[]).ok();
    let mut values = Vec::with_capacity(d * d);
    for text in rows.iter().flatten() {
        let text = text.as_ref();
        let value = empty
            .as_ref()
            .and_then(|c| Expr::parse(text, c).ok())
            .and_then(|e| e.canonical().ok())
            .and_then(|r| r.to_f64_constant())
            .ok_or_else(|| GroupError::NonConstantEntry(text.to_string()))?;
        values.push(value);
    }
    Ok(DMatrix::from_row_slice(d, d, &values))
}

impl MatrixCurve {
    pub fn from_entries<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self, GroupError> {
        let d = rows.len();
        if d == 0 {
            return Err(GroupError::EmptyCurve);
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(GroupError::NotSquare(d));
        }
        let entries = rows
            .iter()
            .flatten()
            .map(|e| CoefficientCurve::parse(e.as_ref()))
            .collect::<Result<_, _>>()?;
        Ok(MatrixCurve::Entries { d, entries })
    }

    pub fn combination(basis: Vec<DMatrix<f64>>, coefficients: Vec<CoefficientCurve>) -> Result<Self, GroupError> {
        if basis.len() != coefficients.len() || basis.is_empty() {
            return Err(GroupError::CountMismatch {
                basis: basis.len(),
                coefficients: coefficients.len(),
            });
        }
        let d = basis[0].nrows();
        if basis.iter().any(|b| b.nrows() != d || b.ncols() != d) || d == 0 {
            return Err(GroupError::NotSquare(d));
        }
        Ok(MatrixCurve::Combination {
            d,
            basis,
            coefficients,
        })
    }

    /// The sl(2,ℝ) curve with coefficients `b = (b_1, b_2, b_3)`.
    pub fn sl2(b: [CoefficientCurve; 3]) -> Self {
        MatrixCurve::Combination {
            d: 2,
            basis: sl2_basis(),
            coefficients: b.into(),
        }
    }

    pub fn constant(a: DMatrix<f64>) -> Result<Self, GroupError> {
        Self::combination(vec![a], vec![CoefficientCurve::constant(1.0)])
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixCurve::Entries { d, .. } | MatrixCurve::Combination { d, .. } => *d,
        }
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        match self {
            MatrixCurve::Entries { d, entries } => {
                DMatrix::from_row_iterator(*d, *d, entries.iter().map(|c| c.eval(t)))
            }
            MatrixCurve::Combination {
                d,
                basis,
                coefficients,
            } => basis
                .iter()
                .zip(coefficients)
                .fold(DMatrix::zeros(*d, *d), |acc, (a, b)| acc + a * b.eval(t)),
        }
    }

    pub fn trace(&self, t: f64) -> f64 {
        self.eval(t).trace()
    }
}

/// Solution of `ġ = a(t) g`, `g(0) = I`.
#[derive(Clone, Debug)]
pub struct GroupTrajectory {
    pub t: Vec<f64>,
    pub g: Vec<DMatrix<f64>>,
    /// `(t, ‖ġ g⁻¹ − a(t)‖)` at step midpoints, from the dense output.
    pub defect: Vec<(f64, f64)>,
    /// `max |det g − exp(∫ tr a)|` over the grid.
    pub liouville_error: f64,
    flat: Trajectory,
}

impl GroupTrajectory {
    pub fn max_defect(&self) -> f64 {
        self.defect.iter().map(|(_, d)| *d).fold(0.0, f64::max)
    }

    pub fn sample(&self, t: f64) -> Option<DMatrix<f64>> {
        let d = self.g[0].nrows();
        self.flat
            .sample(t)
            .map(|v| DMatrix::from_row_slice(d, d, &v[..d * d]))
    }

    pub fn max_det_deviation(&self, target: f64) -> f64 {
        self.g
            .iter()
            .map(|g| (g.determinant() - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Integrates `ġ = a(t) g` from the identity with the Dormand–Prince pair; the
/// state also carries `∫ tr a` for the Liouville check.
pub fn solve_group_equation(
    a: &MatrixCurve,
    t_span: (f64, f64),
    opts: &IntegrateOptions,
) -> Result<GroupTrajectory, GroupError> {
    let d = a.dim();
    let mut x0 = DMatrix::<f64>::identity(d, d).transpose().as_slice().to_vec();
    x0.push(0.0);
    let flat = integrate_rhs(
        |t, x, out| {
            let at = a.eval(t);
            let g = DMatrix::from_row_slice(d, d, &x[..d * d]);
            let dg = &at * g;
            for r in 0..d {
                for c in 0..d {
                    out[r * d + c] = dg[(r, c)];
                }
            }
            out[d * d] = at.trace();
        },
        &x0,
        t_span,
        opts,
    )?;
    if let Some(cut) = flat.truncated {
        if cut.reason == TruncationReason::BlowUp {
            return Err(GroupError::BlowUp { t: cut.at });
        }
    }
    let g: Vec<DMatrix<f64>> = flat
        .x
        .iter()
        .map(|v| DMatrix::from_row_slice(d, d, &v[..d * d]))
        .collect();
    let liouville_error = g
        .iter()
        .zip(&flat.x)
        .map(|(g, v)| (g.determinant() - v[d * d].exp()).abs())
        .fold(0.0, f64::max);
    let defect = flat
        .step_midpoints()
        .into_iter()
        .filter_map(|t| {
            let v = flat.sample(t)?;
            let dv = flat.derivative(t)?;
            let g = DMatrix::from_row_slice(d, d, &v[..d * d]);
            let dg = DMatrix::from_row_slice(d, d, &dv[..d * d]);
            let gi = g.try_inverse()?;
            Some((t, (dg * gi - a.eval(t)).norm()))
        })
        .collect();
    Ok(GroupTrajectory {
        t: flat.t.clone(),
        g,
        defect,
        liouville_error,
        flat,
    })
}

/// Catalogued actions `Φ: G × N → N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupAction {
    /// `Φ(g, x) = g x` on ℝᵈ.
    Linear,
    /// `Φ(g, x) = (αx + β)/(γx + δ)` on the completed line, in projective
    /// coordinates `(p : q)`.
    Mobius,
}

/// Which projective chart a Möbius point is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectiveChart {
    /// `x = p / q`
    Affine,
    /// `w = q / p`, the chart containing the pole `(1 : 0)`.
    AtInfinity,
}

impl GroupAction {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "linear" => Some(GroupAction::Linear),
            "mobius" | "möbius" => Some(GroupAction::Mobius),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupAction::Linear => "linear",
            GroupAction::Mobius => "mobius",
        }
    }

    /// Dimension of the points acted on.
    pub fn point_dim(self, d: usize) -> usize {
        match self {
            GroupAction::Linear => d,
            GroupAction::Mobius => 1,
        }
    }

    fn check(self, g: &DMatrix<f64>, x: &[f64]) -> Result<(), GroupError> {
        if self == GroupAction::Mobius && g.nrows() != 2 {
            return Err(GroupError::ActionDimension {
                expected: 2,
                got: g.nrows(),
            });
        }
        let n = self.point_dim(g.nrows());
        if x.len() != n {
            return Err(GroupError::PointDimension {
                expected: n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `Φ(g, x)`. For the Möbius action the result is the affine coordinate,
    /// infinite at the pole.
    pub fn act(self, g: &DMatrix<f64>, x: &[f64]) -> Result<Vec<f64>, GroupError> {
        self.check(g, x)?;
        Ok(match self {
            GroupAction::Linear => (g * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec(),
            GroupAction::Mobius => {
                let [p, q] = mobius_projective(g, [x[0], 1.0]);
                vec![p / q]
            }
        })
    }

    /// The infinitesimal generator `d/dε Φ(exp(ε a), x)` at `ε = 0`.
    pub fn generator(self, a: &DMatrix<f64>, chart: &Chart) -> Result<VectorField, GroupError> {
        let d = a.nrows();
        let q = |v: f64| {
            RatFn::constant(
                num_rational::BigRational::from_float(v).unwrap_or_else(|| num_rational::BigRational::from_integer(0.into())),
            )
        };
        let vars: Vec<RatFn> = chart.names().iter().map(|n| RatFn::var(n)).collect();
        if vars.len() != self.point_dim(d) {
            return Err(GroupError::PointDimension {
                expected: self.point_dim(d),
                got: vars.len(),
            });
        }
        let components = match self {
            GroupAction::Linear => (0..d)
                .map(|i| (0..d).fold(RatFn::zero(), |acc, j| acc.add(&q(a[(i, j)]).mul(&vars[j]))))
                .collect(),
            GroupAction::Mobius => {
                if d != 2 {
                    return Err(GroupError::ActionDimension { expected: 2, got: d });
                }
                let x = &vars[0];
                // a12 + (a11 − a22) x − a21 x²
                vec![q(a[(0, 1)])
                    .add(&q(a[(0, 0)] - a[(1, 1)]).mul(x))
                    .sub(&q(a[(1, 0)]).mul(&x.mul(x)))]
            }
        };
        Ok(VectorField::new(chart.clone(), components)?)
    }
}

fn mobius_projective(g: &DMatrix<f64>, pq: [f64; 2]) -> [f64; 2] {
    [
        g[(0, 0)] * pq[0] + g[(0, 1)] * pq[1],
        g[(1, 0)] * pq[0] + g[(1, 1)] * pq[1],
    ]
}

/// `x(t) = Φ(g(t), x_0)` along a solved group trajectory.
#[derive(Clone, Debug)]
pub struct ActSolution {
    pub trajectory: Trajectory,
    /// Möbius only: projective representatives and the chart in use at each point.
    pub projective: Option<Vec<[f64; 2]>>,
    pub charts: Option<Vec<ProjectiveChart>>,
    /// Times between which the Möbius point passed through `(1 : 0)`.
    pub pole_crossings: Vec<(f64, f64)>,
    pub group: GroupTrajectory,
}

pub fn act_solve(
    a: &MatrixCurve,
    action: GroupAction,
    x0: &[f64],
    t_span: (f64, f64),
    opts: &IntegrateOptions,
) -> Result<ActSolution, GroupError> {
    let d = a.dim();
    action.check(&DMatrix::identity(d, d), x0)?;
    let group = solve_group_equation(a, t_span, opts)?;
    let mut xs = Vec::with_capacity(group.g.len());
    let mut projective: Vec<[f64; 2]> = Vec::new();
    let mut charts = Vec::new();
    let mut crossings = Vec::new();
    for (j, g) in group.g.iter().enumerate() {
        match action {
            GroupAction::Linear => xs.push(action.act(g, x0)?),
            GroupAction::Mobius => {
                let [p, q] = mobius_projective(g, [x0[0], 1.0]);
                let chart = if q.abs() >= p.abs() {
                    ProjectiveChart::Affine
                } else {
                    ProjectiveChart::AtInfinity
                };
                if let Some([_, q_prev]) = projective.last().copied() {
                    if q_prev * q < 0.0 || (q == 0.0 && q_prev != 0.0) {
                        crossings.push((group.t[j - 1], group.t[j]));
                    }
                }
                xs.push(vec![p / q]);
                projective.push([p, q]);
                charts.push(chart);
            }
        }
    }
    let is_mobius = action == GroupAction::Mobius;
    Ok(ActSolution {
        trajectory: Trajectory::from_samples(group.t.clone(), xs),
        projective: is_mobius.then_some(projective),
        charts: is_mobius.then_some(charts),
        pole_crossings: crossings,
        group,
    })
}

/// The Lie system on `N` induced by a combination curve: basis fields are the
/// generators of the `a_α`, with the same coefficients `b_α(t)`.
pub fn induced_lie_system(a: &MatrixCurve, action: GroupAction, chart: &Chart) -> Result<LieSystem, GroupError> {
    match a {
        MatrixCurve::Combination {
            basis, coefficients, ..
        } => {
            let fields = basis
                .iter()
                .map(|m| action.generator(m, chart))
                .collect::<Result<_, _>>()?;
            Ok(LieSystem::new(fields, coefficients.clone())?)
        }
        MatrixCurve::Entries { d, entries } => {
            // unit matrices E_ij as basis, entries as coefficients
            let mut fields = Vec::new();
            let mut coeffs = Vec::new();
            for i in 0..*d {
                for j in 0..*d {
                    let mut e = DMatrix::zeros(*d, *d);
                    e[(i, j)] = 1.0;
                    let f = action.generator(&e, chart)?;
                    if !f.is_zero() {
                        fields.push(f);
                        coeffs.push(entries[i * d + j].clone());
                    }
                }
            }
            Ok(LieSystem::new(fields, coeffs)?)
        }
    }
}

/// Max deviation of the action axioms over random `(g₁, g₂, x)` with
/// `g = I + small random`; Möbius points near the pole are skipped.
pub fn check_action_axioms(action: GroupAction, d: usize, samples: usize, seed: u64) -> Result<f64, GroupError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = action.point_dim(d);
    let mut worst: f64 = 0.0;
    let mut taken = 0;
    while taken < samples {
        let mut rand_g = || DMatrix::<f64>::identity(d, d) + DMatrix::from_fn(d, d, |_, _| rng.gen_range(-0.5..0.5));
        let (g1, g2) = (rand_g(), rand_g());
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let id = action.act(&DMatrix::identity(d, d), &x)?;
        let lhs = action.act(&(&g1 * &g2), &x)?;
        let inner = action.act(&g2, &x)?;
        let rhs = action.act(&g1, &inner)?;
        if lhs.iter().chain(&inner).chain(&rhs).any(|v| !v.is_finite() || v.abs() > 1e4) {
            continue;
        }
        taken += 1;
        for (a, b) in id.iter().zip(&x) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in lhs.iter().zip(&rhs) {
            worst = worst.max((a - b).abs() / (1.0 + a.abs()));
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub max_deviation: f64,
    pub compared: usize,
    /// Points skipped because the linear solution was within the pole margin.
    pub excluded: usize,
    /// Time up to which the Riccati solution stayed below the blow-up bound.
    pub riccati_end: f64,
    pub det_deviation: f64,
}

/// Integrates `ẋ₁ = b₂x₁/2 + b₁x₂, ẋ₂ = −b₃x₁ − b₂x₂/2`, projects by
/// `F(x) = x₁/x₂`, and compares with the Riccati solution of
/// `ẋ = b₁ + b₂x + b₃x²` from `x0₁/x0₂`. Points with `|x₂| < margin·‖x‖` are
/// excluded.
pub fn check_equivariance(
    b: &[CoefficientCurve; 3],
    x0: [f64; 2],
    t_span: (f64, f64),
    opts: &IntegrateOptions,
    margin: f64,
) -> Result<EquivarianceReport, GroupError> {
    if x0[1] == 0.0 {
        return Err(GroupError::InitialPole);
    }
    let plane = Chart::new(&["x1", "x2"])?;
    let linear = LieSystem::new(
        vec![
            VectorField::parse(&plane, &["x2", "0"])?,
            VectorField::parse(&plane, &["x1/2", "-x2/2"])?,
            VectorField::parse(&plane, &["0", "-x1"])?,
        ],
        b.to_vec(),
    )?;
    let line = Chart::new(&["x"])?;
    let riccati = LieSystem::new(
        vec![
            VectorField::parse(&line, &["1"])?,
            VectorField::parse(&line, &["x"])?,
            VectorField::parse(&line, &["x^2"])?,
        ],
        b.to_vec(),
    )?;
    let lin = linear.integrate(&x0, t_span, opts)?;
    let ric = riccati.integrate(&[x0[0] / x0[1]], t_span, opts)?;
    let mut max_deviation: f64 = 0.0;
    let (mut compared, mut excluded) = (0, 0);
    for (t, x) in ric.t.iter().zip(&ric.x) {
        let Some(v) = lin.sample(*t) else { continue };
        if v[1].abs() < margin * (v[0] * v[0] + v[1] * v[1]).sqrt() {
            excluded += 1;
            continue;
        }
        compared += 1;
        max_deviation = max_deviation.max((v[0] / v[1] - x[0]).abs());
    }
    let group = solve_group_equation(&MatrixCurve::sl2(b.clone()), t_span, opts)?;
    Ok(EquivarianceReport {
        max_deviation,
        compared,
        excluded,
        riccati_end: ric.end(),
        det_deviation: group.max_det_deviation(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scaling-and-squaring Taylor exponential, independent of the integrator.
    fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
        let norm = a.norm();
        let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let b = a / 2f64.powi(s);
        let d = a.nrows();
        let mut term = DMatrix::identity(d, d);
        let mut sum = term.clone();
        for k in 1..20 {
            term = &term * &b / k as f64;
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    fn consts(b: [f64; 3]) -> [CoefficientCurve; 3] {
        b.map(CoefficientCurve::constant)
    }

    #[test]
    fn constant_curve_matches_exponential() {
        let a = DMatrix::from_row_slice(3, 3, &[0.1, -0.4, 0.2, 0.3, -0.2, 0.0, 0.5, 0.1, 0.05]);
        let traj = solve_group_equation(&MatrixCurve::constant(a.clone()).unwrap(), (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        for (t, g) in traj.t.iter().zip(&traj.g) {
            assert!((g - expm(&(&a * *t))).norm() < 1e-8);
        }
        assert!(traj.liouville_error < 1e-6);
    }

    #[test]
    fn zero_curve_stays_at_identity() {
        let traj = solve_group_equation(&MatrixCurve::constant(DMatrix::zeros(2, 2)).unwrap(), (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        assert!(traj.g.iter().all(|g| *g == DMatrix::identity(2, 2)));
    }

    #[test]
    fn rotation_curve() {
        let traj = solve_group_equation(&MatrixCurve::sl2(consts([1.0, 0.0, 1.0])), (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        for (t, g) in traj.t.iter().zip(&traj.g) {
            let exact = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
            assert!((g - exact).amax() < 1e-6);
        }
        assert!(traj.max_det_deviation(1.0) < 1e-6);
        assert!(traj.max_defect() <= 1e-8, "defect {}", traj.max_defect());
    }

    #[test]
    fn entrywise_curve_matches_combination() {
        let entries = MatrixCurve::from_entries(&[vec!["t/2", "1"], vec!["-cos(t)", "-t/2"]]).unwrap();
        let combo = MatrixCurve::sl2([
            CoefficientCurve::parse("1").unwrap(),
            CoefficientCurve::parse("t").unwrap(),
            CoefficientCurve::parse("cos(t)").unwrap(),
        ]);
        for t in [0.0, 0.3, 0.9] {
            assert!((entries.eval(t) - combo.eval(t)).amax() < 1e-15);
            assert_eq!(combo.trace(t), 0.0);
        }
    }

    #[test]
    fn mobius_rotation_gives_tangent() {
        let sol = act_solve(
            &MatrixCurve::sl2(consts([1.0, 0.0, 1.0])),
            GroupAction::Mobius,
            &[0.0],
            (0.0, 1.2),
            &IntegrateOptions::default(),
        )
        .unwrap();
        for (t, x) in sol.trajectory.t.iter().zip(&sol.trajectory.x) {
            assert!((x[0] - t.tan()).abs() < 1e-6);
        }
        assert!(sol.pole_crossings.is_empty());
    }

    #[test]
    fn mobius_pole_crossing_is_logged() {
        let sol = act_solve(
            &MatrixCurve::sl2(consts([1.0, 0.0, 1.0])),
            GroupAction::Mobius,
            &[0.0],
            (0.0, 2.0),
            &IntegrateOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.pole_crossings.len(), 1);
        let (a, b) = sol.pole_crossings[0];
        assert!(a < std::f64::consts::FRAC_PI_2 && std::f64::consts::FRAC_PI_2 <= b);
        assert!(sol.charts.unwrap().contains(&ProjectiveChart::AtInfinity));
    }

    #[test]
    fn linear_action_gives_columns() {
        let a = DMatrix::from_row_slice(2, 2, &[0.2, 1.0, -0.5, 0.1]);
        let sol = act_solve(&MatrixCurve::constant(a.clone()).unwrap(), GroupAction::Linear, &[1.0, 0.0], (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        for (t, x) in sol.trajectory.t.iter().zip(&sol.trajectory.x) {
            let e = expm(&(&a * *t));
            assert!((x[0] - e[(0, 0)]).abs() < 1e-8 && (x[1] - e[(1, 0)]).abs() < 1e-8);
        }
    }

    #[test]
    fn identity_curve_is_constant() {
        let sol = act_solve(&MatrixCurve::constant(DMatrix::zeros(2, 2)).unwrap(), GroupAction::Mobius, &[0.7], (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        assert!(sol.trajectory.x.iter().all(|x| x[0] == 0.7));
    }

    #[test]
    fn action_axioms() {
        assert!(check_action_axioms(GroupAction::Linear, 3, 100, 1).unwrap() < 1e-12);
        assert!(check_action_axioms(GroupAction::Mobius, 2, 100, 2).unwrap() < 1e-10);
    }

    #[test]
    fn mobius_generators_are_riccati_fields() {
        let c = Chart::new(&["x"]).unwrap();
        let expected = ["1", "x", "x^2"];
        for (a, e) in sl2_basis().iter().zip(expected) {
            assert_eq!(GroupAction::Mobius.generator(a, &c).unwrap(), VectorField::parse(&c, &[e]).unwrap());
        }
    }

    #[test]
    fn equivariance_examples() {
        let opts = IntegrateOptions::default();
        let rot = check_equivariance(&consts([1.0, 0.0, 1.0]), [0.0, 1.0], (0.0, 1.2), &opts, 0.1).unwrap();
        assert!(rot.max_deviation <= 1e-6 && rot.compared > 0);
        let scaling = check_equivariance(&consts([0.0, 1.0, 0.0]), [0.5, 2.0], (0.0, 1.0), &opts, 0.1).unwrap();
        assert!(scaling.max_deviation <= 1e-6);
        let still = check_equivariance(&consts([0.0, 0.0, 0.0]), [0.0, 1.0], (0.0, 1.0), &opts, 0.1).unwrap();
        assert_eq!(still.max_deviation, 0.0);
    }
}
