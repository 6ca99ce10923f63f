//! Time-dependent Lie systems `Y(t, x) = Σ b_α(t) X_α(x)` and an adaptive
//! Dormand–Prince 5(4) integrator with dense output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{prune_dependent, rank_at, AlgebraError};
use crate::expr::{Chart, Compiled, Expr, ExprError};
use crate::geometry::{GeometryError, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("{fields} basis fields but {coefficients} coefficient curves")]
    CountMismatch { fields: usize, coefficients: usize },
    #[error("basis field {0} is a constant combination of the preceding ones")]
    DependentBasis(usize),
    #[error("basis fields live on different charts")]
    ChartMismatch,
    #[error("state has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value of the field at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid time span [{0}, {1}]")]
    InvalidSpan(f64, f64),
    #[error("tolerance must be positive")]
    InvalidTolerance,
    #[error("tabulated curve needs at least two strictly increasing knots")]
    InvalidTable,
    #[error("no fundamental tuple found in {0} draws")]
    NotFundamental(usize),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_BLOWUP: f64 = 1e8;
pub const DEFAULT_T_SPAN: (f64, f64) = (0.0, 1.0);

/// A scalar function of `t`: an expression in the variable `t`, or a table
/// interpolated linearly between knots.
#[derive(Clone, Debug)]
pub enum CoefficientCurve {
    Expr { expr: Expr, compiled: Compiled },
    Table { t: Vec<f64>, values: Vec<f64> },
}

impl CoefficientCurve {
    pub fn time_chart() -> Chart {
        Chart::new(&["t"]).expect("valid chart")
    }

    pub fn parse(text: &str) -> Result<Self, DynamicsError> {
        Self::from_expr(Expr::parse(text, &Self::time_chart())?)
    }

    pub fn from_expr(expr: Expr) -> Result<Self, DynamicsError> {
        let compiled = expr.compile(&["t"])?;
        Ok(CoefficientCurve::Expr { expr, compiled })
    }

    pub fn constant(c: f64) -> Self {
        CoefficientCurve::Table {
            t: vec![f64::NEG_INFINITY, f64::INFINITY],
            values: vec![c, c],
        }
    }

    pub fn table(t: Vec<f64>, values: Vec<f64>) -> Result<Self, DynamicsError> {
        if t.len() < 2 || t.len() != values.len() || t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DynamicsError::InvalidTable);
        }
        Ok(CoefficientCurve::Table { t, values })
    }

    /// Value at `t`; NaN outside a table's range.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CoefficientCurve::Expr { compiled, .. } => compiled.eval(&[t]),
            CoefficientCurve::Table { t: knots, values } => {
                if knots[0] == f64::NEG_INFINITY {
                    return values[0];
                }
                if t < knots[0] || t > knots[knots.len() - 1] {
                    return f64::NAN;
                }
                let j = knots.partition_point(|&k| k <= t).clamp(1, knots.len() - 1);
                let (t0, t1) = (knots[j - 1], knots[j]);
                let w = (t - t0) / (t1 - t0);
                values[j - 1] * (1.0 - w) + values[j] * w
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            CoefficientCurve::Expr { expr, .. } => expr.to_string(),
            CoefficientCurve::Table { t, values } if t[0] == f64::NEG_INFINITY => values[0].to_string(),
            CoefficientCurve::Table { t, .. } => format!("table[{} knots]", t.len()),
        }
    }
}

/// `Σ_α b_α(t) X_α(x)` with an ℝ-independent basis.
#[derive(Clone, Debug)]
pub struct LieSystem {
    basis: Vec<VectorField>,
    compiled: Vec<Vec<Compiled>>,
    coefficients: Vec<CoefficientCurve>,
}

impl LieSystem {
    pub fn new(basis: Vec<VectorField>, coefficients: Vec<CoefficientCurve>) -> Result<Self, DynamicsError> {
        if basis.len() != coefficients.len() || basis.is_empty() {
            return Err(DynamicsError::CountMismatch {
                fields: basis.len(),
                coefficients: coefficients.len(),
            });
        }
        if basis.iter().any(|b| b.chart() != basis[0].chart()) {
            return Err(DynamicsError::ChartMismatch);
        }
        let (_, dropped) = prune_dependent(&basis)?;
        if let Some(&i) = dropped.first() {
            return Err(DynamicsError::DependentBasis(i));
        }
        let compiled = basis
            .iter()
            .map(VectorField::compile)
            .collect::<Result<_, _>>()?;
        Ok(LieSystem {
            basis,
            compiled,
            coefficients,
        })
    }

    pub fn chart(&self) -> &Chart {
        self.basis[0].chart()
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    pub fn basis(&self) -> &[VectorField] {
        &self.basis
    }

    pub fn coefficients(&self) -> &[CoefficientCurve] {
        &self.coefficients
    }

    fn rhs_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (comp, b) in self.compiled.iter().zip(&self.coefficients) {
            let bt = b.eval(t);
            if bt == 0.0 {
                continue;
            }
            for (o, c) in out.iter_mut().zip(comp) {
                *o += bt * c.eval(x);
            }
        }
    }

    /// Velocity `Σ b_α(t) X_α(x)`.
    pub fn evaluate_field(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, DynamicsError> {
        if x.len() != self.dim() {
            return Err(DynamicsError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut out = vec![0.0; x.len()];
        self.rhs_into(t, x, &mut out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(DynamicsError::NonFinite { t })
        }
    }

    pub fn integrate(&self, x0: &[f64], t_span: (f64, f64), opts: &IntegrateOptions) -> Result<Trajectory, DynamicsError> {
        if x0.len() != self.dim() {
            return Err(DynamicsError::Dimension {
                expected: self.dim(),
                got: x0.len(),
            });
        }
        integrate_rhs(|t, x, out| self.rhs_into(t, x, out), x0, t_span, opts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    /// Per-step local error bound (absolute and relative).
    pub tol: f64,
    /// Integration stops once `‖x‖` exceeds this.
    pub blowup: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            tol: DEFAULT_TOL,
            blowup: DEFAULT_BLOWUP,
            max_steps: 1_000_000,
        }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegrateOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationReason {
    BlowUp,
    StepUnderflow,
    MaxSteps,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Last time reached.
    pub at: f64,
    pub reason: TruncationReason,
}

/// Quartic interpolant over one accepted step.
#[derive(Clone, Debug, PartialEq)]
struct DenseSegment {
    t0: f64,
    h: f64,
    coeffs: [Vec<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64) -> Vec<f64> {
        let th = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let [c1, c2, c3, c4, c5] = &self.coeffs;
        (0..c1.len())
            .map(|i| c1[i] + th * (c2[i] + th1 * (c3[i] + th * (c4[i] + th1 * c5[i]))))
            .collect()
    }

    fn derivative(&self, t: f64) -> Vec<f64> {
        let th = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let [_, c2, c3, c4, c5] = &self.coeffs;
        (0..c2.len())
            .map(|i| {
                let p = c3[i] + th * (c4[i] + th1 * c5[i]);
                let dp = c4[i] + (th1 - th) * c5[i];
                (c2[i] + (th1 - th) * p + th * th1 * dp) / self.h
            })
            .collect()
    }
}

/// Samples of a solution on a strictly increasing grid, with the integrator's
/// dense output when available.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub truncated: Option<Truncation>,
    #[serde(skip)]
    dense: Vec<DenseSegment>,
}

impl Trajectory {
    /// Trajectory from bare samples; `sample` then interpolates linearly.
    pub fn from_samples(t: Vec<f64>, x: Vec<Vec<f64>>) -> Self {
        Trajectory {
            t,
            x,
            truncated: None,
            dense: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    pub fn last(&self) -> &[f64] {
        &self.x[self.x.len() - 1]
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated.is_some()
    }

    pub fn has_dense_output(&self) -> bool {
        !self.dense.is_empty()
    }

    /// State at `t` inside the covered interval.
    pub fn sample(&self, t: f64) -> Option<Vec<f64>> {
        if self.t.is_empty() || t < self.start() || t > self.end() {
            return None;
        }
        if !self.dense.is_empty() {
            let j = self
                .dense
                .partition_point(|s| s.t0 + s.h < t)
                .min(self.dense.len() - 1);
            return Some(self.dense[j].eval(t));
        }
        let j = self.t.partition_point(|&s| s < t);
        if j == 0 || self.t[j] == t {
            return Some(self.x[j].clone());
        }
        let (t0, t1) = (self.t[j - 1], self.t[j]);
        let w = (t - t0) / (t1 - t0);
        Some(
            self.x[j - 1]
                .iter()
                .zip(&self.x[j])
                .map(|(a, b)| a * (1.0 - w) + b * w)
                .collect(),
        )
    }

    /// Time derivative of the dense output at `t`.
    pub fn derivative(&self, t: f64) -> Option<Vec<f64>> {
        if self.dense.is_empty() || t < self.start() || t > self.end() {
            return None;
        }
        let j = self
            .dense
            .partition_point(|s| s.t0 + s.h < t)
            .min(self.dense.len() - 1);
        Some(self.dense[j].derivative(t))
    }

    /// Midpoints of the integrator's accepted steps.
    pub fn step_midpoints(&self) -> Vec<f64> {
        self.dense.iter().map(|s| s.t0 + 0.5 * s.h).collect()
    }

    /// Same solution on `grid` (points outside the covered interval are dropped).
    pub fn resample(&self, grid: &[f64]) -> Trajectory {
        let (t, x): (Vec<f64>, Vec<Vec<f64>>) = grid
            .iter()
            .filter_map(|&s| self.sample(s).map(|v| (s, v)))
            .unzip();
        Trajectory {
            t,
            x,
            truncated: self.truncated,
            dense: self.dense.clone(),
        }
    }

    /// One row per grid point: `t,<names...>`.
    pub fn to_csv<S: AsRef<str>>(&self, names: &[S]) -> String {
        let mut out = String::from("t");
        for n in names {
            out.push(',');
            out.push_str(n.as_ref());
        }
        out.push('\n');
        for (t, x) in self.t.iter().zip(&self.x) {
            out.push_str(&format!("{:e}", t));
            for v in x {
                out.push_str(&format!(",{:e}", v));
            }
            out.push('\n');
        }
        out
    }
}

/// `n + 1` equally spaced points from `a` to `b`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|j| a + (b - a) * j as f64 / n as f64).collect()
}

/// Union of the grids, cut at the earliest end time.
pub fn common_grid(trajs: &[Trajectory]) -> Vec<f64> {
    let end = trajs.iter().map(Trajectory::end).fold(f64::INFINITY, f64::min);
    let start = trajs.iter().map(Trajectory::start).fold(f64::NEG_INFINITY, f64::max);
    let mut all: Vec<f64> = trajs
        .iter()
        .flat_map(|tr| tr.t.iter().copied())
        .filter(|&t| t >= start && t <= end)
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
    all
}

/// Resamples every trajectory onto their common grid.
pub fn align(trajs: &[Trajectory]) -> Vec<Trajectory> {
    let grid = common_grid(trajs);
    trajs.iter().map(|tr| tr.resample(&grid)).collect()
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn initial_step<F: Fn(f64, &[f64], &mut [f64])>(rhs: &F, t0: f64, y0: &[f64], f0: &[f64], tol: f64, span: f64) -> f64 {
    let n = y0.len() as f64;
    let sk: Vec<f64> = y0.iter().map(|v| tol + tol * v.abs()).collect();
    let d0 = (y0.iter().zip(&sk).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sk).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    rhs(t0 + h0, &y1, &mut f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sk)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 || !m.is_finite() {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / m).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `ẋ = rhs(t, x)` over `t_span` with the Dormand–Prince 5(4) pair.
/// Blow-up past `opts.blowup`, step underflow and the step cap truncate the
/// trajectory instead of failing.
pub fn integrate_rhs<F>(rhs: F, x0: &[f64], t_span: (f64, f64), opts: &IntegrateOptions) -> Result<Trajectory, DynamicsError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let (t0, t1) = t_span;
    if !t0.is_finite() || !t1.is_finite() || t1 < t0 {
        return Err(DynamicsError::InvalidSpan(t0, t1));
    }
    if !(opts.tol > 0.0) {
        return Err(DynamicsError::InvalidTolerance);
    }
    let n = x0.len();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    rhs(t0, x0, &mut k[0]);
    if k[0].iter().chain(x0).any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite { t: t0 });
    }
    let mut traj = Trajectory {
        t: vec![t0],
        x: vec![x0.to_vec()],
        truncated: None,
        dense: Vec::new(),
    };
    if t1 == t0 {
        return Ok(traj);
    }
    let tol = opts.tol;
    let mut t = t0;
    let mut y = x0.to_vec();
    let mut h = initial_step(&rhs, t0, &y, &k[0], tol, t1 - t0);
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut rejected_last = false;
    let mut steps = 0usize;
    while t < t1 {
        if steps >= opts.max_steps {
            traj.truncated = Some(Truncation {
                at: t,
                reason: TruncationReason::MaxSteps,
            });
            break;
        }
        steps += 1;
        if t + 1.01 * h >= t1 {
            h = t1 - t;
        }
        let stages: [&[f64]; 6] = [&A2, &A3, &A4, &A5, &A6, &A7];
        for (s, a) in stages.iter().enumerate() {
            let target = if s == 5 { &mut y_new } else { &mut stage };
            for i in 0..n {
                let acc: f64 = a.iter().enumerate().map(|(j, c)| c * k[j][i]).sum();
                target[i] = y[i] + h * acc;
            }
            let arg = if s == 5 { &y_new } else { &stage };
            let mut out = std::mem::take(&mut k[s + 1]);
            rhs(t + C[s + 1] * h, arg, &mut out);
            k[s + 1] = out;
        }
        let mut err = 0.0;
        for i in 0..n {
            let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
            let sk = tol + tol * y[i].abs().max(y_new[i].abs());
            err += (e / sk).powi(2);
        }
        // error per unit step: never looser than `tol` per step while h ≤ 1
        err = (err / n.max(1) as f64).sqrt() / h.min(1.0);
        let finite = y_new.iter().all(|v| v.is_finite()) && k[6].iter().all(|v| v.is_finite());
        if !finite || !err.is_finite() {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            let ydiff: Vec<f64> = (0..n).map(|i| y_new[i] - y[i]).collect();
            let bspl: Vec<f64> = (0..n).map(|i| h * k[0][i] - ydiff[i]).collect();
            let c4: Vec<f64> = (0..n).map(|i| ydiff[i] - h * k[6][i] - bspl[i]).collect();
            let c5: Vec<f64> = (0..n)
                .map(|i| h * (0..7).map(|s| D[s] * k[s][i]).sum::<f64>())
                .collect();
            if norm(&y_new) > opts.blowup {
                traj.truncated = Some(Truncation {
                    at: t,
                    reason: TruncationReason::BlowUp,
                });
                break;
            }
            traj.dense.push(DenseSegment {
                t0: t,
                h,
                coeffs: [y.clone(), ydiff, bspl, c4, c5],
            });
            t = if h == t1 - t { t1 } else { t + h };
            y.copy_from_slice(&y_new);
            traj.t.push(t);
            traj.x.push(y.clone());
            let fac = (0.9 * err.max(1e-10).powf(-0.25)).clamp(0.2, if rejected_last { 1.0 } else { 10.0 });
            h *= fac;
            rejected_last = false;
            // first-same-as-last
            k.swap(0, 6);
        } else {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.25)).max(0.2)
            } else {
                0.25
            };
            h *= fac;
            rejected_last = true;
        }
        if t < t1 && h < 1e-14 * t.abs().max(1.0) {
            traj.truncated = Some(Truncation {
                at: t,
                reason: TruncationReason::StepUnderflow,
            });
            break;
        }
    }
    Ok(traj)
}

/// Settings for [`fundamental_set`].
#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalOptions {
    pub seed: u64,
    /// Random initial points are drawn from `[-half_width, half_width]^n`.
    pub half_width: f64,
    pub max_draws: usize,
    pub rel_threshold: f64,
}

impl Default for FundamentalOptions {
    fn default() -> Self {
        FundamentalOptions {
            seed: 0,
            half_width: 1.0,
            max_draws: 100,
            rel_threshold: 1e-10,
        }
    }
}

/// True when the stacked evaluation matrix at `points` has the largest rank
/// the copy count allows, `min(r, m·n)`.
pub fn is_fundamental_tuple(sys: &LieSystem, points: &[Vec<f64>], rel_threshold: f64) -> Result<bool, DynamicsError> {
    let target = sys.basis.len().min(points.len() * sys.dim());
    Ok(rank_at(&sys.basis, points, rel_threshold)? == target)
}

/// Integrates `m` solutions from a fundamental initial tuple, either the one
/// supplied or a random one, and resamples them onto a shared grid.
pub fn fundamental_set(
    sys: &LieSystem,
    m: usize,
    initial: Option<Vec<Vec<f64>>>,
    t_span: (f64, f64),
    opts: &IntegrateOptions,
    fopts: &FundamentalOptions,
) -> Result<Vec<Trajectory>, DynamicsError> {
    let n = sys.dim();
    let points = match initial {
        Some(p) => {
            if let Some(bad) = p.iter().find(|v| v.len() != n) {
                return Err(DynamicsError::Dimension {
                    expected: n,
                    got: bad.len(),
                });
            }
            if p.len() != m || !is_fundamental_tuple(sys, &p, fopts.rel_threshold)? {
                return Err(DynamicsError::NotFundamental(1));
            }
            p
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(fopts.seed);
            let mut found = None;
            for _ in 0..fopts.max_draws {
                let cand: Vec<Vec<f64>> = (0..m)
                    .map(|_| {
                        (0..n)
                            .map(|_| rng.gen_range(-fopts.half_width..=fopts.half_width))
                            .collect()
                    })
                    .collect();
                if is_fundamental_tuple(sys, &cand, fopts.rel_threshold)? {
                    found = Some(cand);
                    break;
                }
            }
            found.ok_or(DynamicsError::NotFundamental(fopts.max_draws))?
        }
    };
    let trajs: Vec<Trajectory> = points
        .par_iter()
        .map(|p| sys.integrate(p, t_span, opts))
        .collect::<Result<_, _>>()?;
    Ok(align(&trajs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(chart: &[&str], fields: &[&[&str]], coeffs: &[&str]) -> LieSystem {
        let c = Chart::new(chart).unwrap();
        LieSystem::new(
            fields.iter().map(|f| VectorField::parse(&c, f).unwrap()).collect(),
            coeffs.iter().map(|b| CoefficientCurve::parse(b).unwrap()).collect(),
        )
        .unwrap()
    }

    fn riccati(b: [&str; 3]) -> LieSystem {
        system(&["x"], &[&["1"], &["x"], &["x^2"]], &b)
    }

    #[test]
    fn field_evaluation_examples() {
        let lin = system(&["x"], &[&["x"]], &["1"]);
        assert_eq!(lin.evaluate_field(0.0, &[1.0]).unwrap(), vec![1.0]);
        assert_eq!(riccati(["1", "0", "1"]).evaluate_field(0.0, &[2.0]).unwrap(), vec![5.0]);
        let euclid = system(&["x", "y"], &[&["1", "0"], &["0", "1"], &["y", "-x"]], &["0", "0", "1"]);
        assert_eq!(euclid.evaluate_field(0.0, &[1.0, 0.0]).unwrap(), vec![0.0, -1.0]);
        let bad = system(&["x"], &[&["1/x"]], &["1"]);
        assert_eq!(bad.evaluate_field(0.5, &[0.0]), Err(DynamicsError::NonFinite { t: 0.5 }));
    }

    #[test]
    fn dependent_basis_is_rejected() {
        let c = Chart::new(&["x"]).unwrap();
        let err = LieSystem::new(
            vec![
                VectorField::parse(&c, &["x"]).unwrap(),
                VectorField::parse(&c, &["3*x"]).unwrap(),
            ],
            vec![CoefficientCurve::constant(1.0), CoefficientCurve::constant(1.0)],
        )
        .unwrap_err();
        assert_eq!(err, DynamicsError::DependentBasis(1));
    }

    #[test]
    fn exponential_growth() {
        let sys = system(&["x"], &[&["x"]], &["1"]);
        let tr = sys.integrate(&[1.0], (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        assert_eq!(tr.end(), 1.0);
        assert!((tr.last()[0] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn cube_root_solution() {
        let sys = system(&["x"], &[&["1/x^2"]], &["1"]);
        let tr = sys.integrate(&[1.0], (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        for (t, x) in tr.t.iter().zip(&tr.x) {
            assert!((x[0] - (1.0 + 3.0 * t).cbrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn tangent_blows_up() {
        let sys = riccati(["1", "0", "1"]);
        let tr = sys.integrate(&[0.0], (0.0, 2.0), &IntegrateOptions::default()).unwrap();
        let cut = tr.truncated.expect("must truncate");
        assert!(cut.at < std::f64::consts::FRAC_PI_2 && cut.at > 1.5);
        for (t, x) in tr.t.iter().zip(&tr.x) {
            assert!((x[0] - t.tan()).abs() <= 1e-6 * (1.0 + t.tan().powi(2)));
        }
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        let sys = riccati(["1", "0", "1"]);
        let tr = sys.integrate(&[0.0], (0.0, 1.0), &IntegrateOptions::default()).unwrap();
        for j in 0..=100 {
            let t = j as f64 / 100.0;
            assert!((tr.sample(t).unwrap()[0] - t.tan()).abs() < 1e-8, "t = {}", t);
        }
    }

    #[test]
    fn tabulated_coefficients() {
        let c = CoefficientCurve::table(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(c.eval(0.5), 1.0);
        assert_eq!(c.eval(1.5), 1.0);
        assert!(c.eval(2.5).is_nan());
        assert!(CoefficientCurve::table(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn fundamental_sets() {
        let sys = riccati(["1", "0", "1"]);
        let opts = IntegrateOptions::default();
        let fopts = FundamentalOptions::default();
        let set = fundamental_set(&sys, 3, Some(vec![vec![-0.5], vec![0.0], vec![0.2]]), (0.0, 1.0), &opts, &fopts).unwrap();
        assert_eq!(set.len(), 3);
        assert!(set.windows(2).all(|w| w[0].t == w[1].t));
        assert_eq!(
            fundamental_set(&sys, 3, Some(vec![vec![0.1], vec![0.1], vec![0.2]]), (0.0, 1.0), &opts, &fopts),
            Err(DynamicsError::NotFundamental(1))
        );
        let random = fundamental_set(&sys, 3, None, (0.0, 0.5), &opts, &fopts).unwrap();
        assert_eq!(random.len(), 3);

        let lin = system(
            &["x", "y"],
            &[&["x", "0"], &["y", "0"], &["0", "x"], &["0", "y"]],
            &["1", "t", "-1", "0"],
        );
        let set = fundamental_set(&lin, 2, Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]), (0.0, 1.0), &opts, &fopts).unwrap();
        assert_eq!(set[0].t, set[1].t);
    }

    #[test]
    fn csv_has_one_row_per_point() {
        let sys = system(&["x"], &[&["x"]], &["1"]);
        let tr = sys
            .integrate(&[1.0], (0.0, 1.0), &IntegrateOptions::default())
            .unwrap()
            .resample(&uniform_grid(0.0, 1.0, 4));
        let csv = tr.to_csv(&["x"]);
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("t,x\n"));
    }
}
