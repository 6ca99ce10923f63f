//! Superposition rules: level maps Ψ on the product of `m + 1` copies, their
//! explicit inverses Φ, and leaf-following reconstruction of new solutions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::numerical_rank;
use crate::dynamics::{DynamicsError, LieSystem, Trajectory};
use crate::expr::{zero_test, Chart, Compiled, Expr, ExprError, RatFn, ZeroTest};
use crate::geometry::{prolong_into, GeometryError, ProductChart, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuperpositionError {
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("constant name '{0}' collides with a product coordinate")]
    NameClash(String),
    #[error("rule has no explicit map Φ")]
    MissingPhi,
    #[error("expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("trajectories do not share a grid")]
    GridMismatch,
    #[error("Ψ is singular or non-finite at t = {t}")]
    SingularPsi { t: f64 },
    #[error("Newton did not converge at t = {t} (residual {residual:e})")]
    NewtonFailed { t: f64, residual: f64 },
    #[error("singular Jacobian ∂Ψ/∂x_0 at t = {t}")]
    SingularJacobian { t: f64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

pub const DEFAULT_TOL_CONST: f64 = 1e-6;
pub const DEFAULT_TOL_ODE: f64 = 1e-4;
pub const DEFAULT_FD_STEP: f64 = 1e-3;
pub const DEFAULT_TOL_CONSTRAINT: f64 = 1e-8;

/// Serialized rule: `{m, s, psi, phi, constraints}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub m: usize,
    pub s: usize,
    pub psi: Vec<String>,
    #[serde(default)]
    pub phi: Option<Vec<String>>,
    #[serde(default)]
    pub constraints: Vec<String>,
}

/// Name of the `j`-th constant (1-based) in Φ.
pub fn constant_name(j: usize) -> String {
    format!("k_{}", j)
}

fn compile_all(exprs: &[Expr], names: &[String]) -> Result<Vec<Compiled>, ExprError> {
    exprs.iter().map(|e| e.compile(names)).collect()
}

/// A (possibly partial) superposition rule of rank `s` consuming `m` solutions.
#[derive(Clone, Debug)]
pub struct SuperpositionRule {
    product: ProductChart,
    m: usize,
    s: usize,
    psi: Vec<Expr>,
    phi: Option<Vec<Expr>>,
    constraints: Vec<Expr>,
    phi_chart: Chart,
    psi_c: Vec<Compiled>,
    phi_c: Option<Vec<Compiled>>,
    constraint_c: Vec<Compiled>,
    /// `∂(Ψ, constraints)/∂x_0`, row-major `n × n`.
    jac_c: Vec<Compiled>,
}

impl SuperpositionRule {
    pub fn new(base: &Chart, spec: &RuleSpec) -> Result<Self, SuperpositionError> {
        let n = base.dim();
        let invalid = |msg: String| Err(SuperpositionError::InvalidRule(msg));
        if spec.m == 0 {
            return invalid("m must be at least 1".into());
        }
        if spec.s == 0 || spec.s > n {
            return invalid(format!("rank s = {} must lie in 1..={}", spec.s, n));
        }
        if spec.psi.len() != spec.s {
            return invalid(format!("{} Ψ components for rank {}", spec.psi.len(), spec.s));
        }
        if spec.constraints.len() != n - spec.s {
            return invalid(format!(
                "{} constraints, expected n - s = {}",
                spec.constraints.len(),
                n - spec.s
            ));
        }
        if let Some(phi) = &spec.phi {
            if phi.len() != n {
                return invalid(format!("{} Φ components, expected {}", phi.len(), n));
            }
        }
        let product = ProductChart::new(base, spec.m + 1)?;
        let names = product.chart().names().to_vec();
        let k_names: Vec<String> = (1..=spec.s).map(constant_name).collect();
        if let Some(clash) = k_names.iter().find(|k| product.chart().contains(k)) {
            return Err(SuperpositionError::NameClash(clash.clone()));
        }
        let phi_names: Vec<String> = names[n..].iter().cloned().chain(k_names).collect();
        let phi_chart = Chart::new(&phi_names)?;
        let parse_all = |texts: &[String], chart: &Chart| -> Result<Vec<Expr>, ExprError> {
            texts.iter().map(|t| Expr::parse(t, chart)).collect()
        };
        let psi = parse_all(&spec.psi, product.chart())?;
        let constraints = parse_all(&spec.constraints, product.chart())?;
        let phi = spec.phi.as_ref().map(|p| parse_all(p, &phi_chart)).transpose()?;
        let slot0 = product.slot_names(0);
        let jac_c = psi
            .iter()
            .chain(&constraints)
            .flat_map(|e| slot0.iter().map(move |v| e.diff(v)))
            .map(|d| d.compile(&names))
            .collect::<Result<_, _>>()?;
        Ok(SuperpositionRule {
            psi_c: compile_all(&psi, &names)?,
            constraint_c: compile_all(&constraints, &names)?,
            phi_c: phi.as_ref().map(|p| compile_all(p, &phi_names)).transpose()?,
            product,
            m: spec.m,
            s: spec.s,
            psi,
            phi,
            constraints,
            phi_chart,
            jac_c,
        })
    }

    pub fn spec(&self) -> RuleSpec {
        RuleSpec {
            m: self.m,
            s: self.s,
            psi: self.psi.iter().map(Expr::to_string).collect(),
            phi: self.phi.as_ref().map(|p| p.iter().map(Expr::to_string).collect()),
            constraints: self.constraints.iter().map(Expr::to_string).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rank(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.product.base().dim()
    }

    pub fn is_partial(&self) -> bool {
        self.s < self.dim()
    }

    pub fn has_phi(&self) -> bool {
        self.phi.is_some()
    }

    pub fn product(&self) -> &ProductChart {
        &self.product
    }

    pub fn phi_chart(&self) -> &Chart {
        &self.phi_chart
    }

    pub fn psi(&self) -> &[Expr] {
        &self.psi
    }

    pub fn constraints(&self) -> &[Expr] {
        &self.constraints
    }

    fn flatten(&self, x0: &[f64], particular: &[&[f64]]) -> Result<Vec<f64>, SuperpositionError> {
        let n = self.dim();
        if particular.len() != self.m {
            return Err(SuperpositionError::Dimension {
                expected: self.m,
                got: particular.len(),
            });
        }
        if let Some(bad) = std::iter::once(x0).chain(particular.iter().copied()).find(|p| p.len() != n) {
            return Err(SuperpositionError::Dimension {
                expected: n,
                got: bad.len(),
            });
        }
        Ok(x0.iter().chain(particular.iter().flat_map(|p| p.iter())).copied().collect())
    }

    /// Ψ at `(x_0, x_1, …, x_m)`.
    pub fn eval_psi(&self, x0: &[f64], particular: &[&[f64]]) -> Result<Vec<f64>, SuperpositionError> {
        let args = self.flatten(x0, particular)?;
        Ok(self.psi_c.iter().map(|c| c.eval(&args)).collect())
    }

    pub fn eval_constraints(&self, x0: &[f64], particular: &[&[f64]]) -> Result<Vec<f64>, SuperpositionError> {
        let args = self.flatten(x0, particular)?;
        Ok(self.constraint_c.iter().map(|c| c.eval(&args)).collect())
    }

    /// `k := Ψ(x_0, x_1, …, x_m)`.
    pub fn constants_from(&self, x0: &[f64], particular: &[&[f64]]) -> Result<Vec<f64>, SuperpositionError> {
        self.eval_psi(x0, particular)
    }

    /// Φ(x_1, …, x_m; k).
    pub fn eval_phi(&self, particular: &[&[f64]], k: &[f64]) -> Result<Vec<f64>, SuperpositionError> {
        let phi = self.phi_c.as_ref().ok_or(SuperpositionError::MissingPhi)?;
        if k.len() != self.s {
            return Err(SuperpositionError::Dimension {
                expected: self.s,
                got: k.len(),
            });
        }
        let zeros = vec![0.0; self.dim()];
        let mut args = self.flatten(&zeros, particular)?.split_off(self.dim());
        args.extend_from_slice(k);
        Ok(phi.iter().map(|c| c.eval(&args)).collect())
    }

    fn residual_and_jacobian(&self, args: &[f64], k: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dim();
        let res = DVector::from_iterator(
            n,
            self.psi_c
                .iter()
                .zip(k)
                .map(|(c, kj)| c.eval(args) - kj)
                .chain(self.constraint_c.iter().map(|c| c.eval(args))),
        );
        let jac = DMatrix::from_fn(n, n, |r, c| self.jac_c[r * n + c].eval(args));
        (res, jac)
    }

    /// Solves `Ψ(x_0, x_1..m) = k` (and the constraints) for `x_0` by damped Newton.
    pub fn solve_leaf(
        &self,
        particular: &[&[f64]],
        k: &[f64],
        guess: &[f64],
        opts: &NewtonOptions,
        t: f64,
    ) -> Result<NewtonSolution, SuperpositionError> {
        let n = self.dim();
        if k.len() != self.s {
            return Err(SuperpositionError::Dimension {
                expected: self.s,
                got: k.len(),
            });
        }
        let mut args = self.flatten(guess, particular)?;
        let target = opts.tol * (1.0 + k.iter().map(|v| v * v).sum::<f64>().sqrt());
        let (mut res, mut jac) = self.residual_and_jacobian(&args, k);
        let mut norm = res.norm();
        if !norm.is_finite() {
            return Err(SuperpositionError::SingularPsi { t });
        }
        for iter in 0..=opts.max_iter {
            if norm <= target {
                return Ok(NewtonSolution {
                    x: args[..n].to_vec(),
                    iterations: iter,
                    residual: norm,
                });
            }
            if iter == opts.max_iter {
                break;
            }
            let step = jac
                .clone()
                .lu()
                .solve(&res)
                .filter(|s| s.iter().all(|v| v.is_finite()))
                .ok_or(SuperpositionError::SingularJacobian { t })?;
            let x_norm = args[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_halvings {
                let mut trial = args.clone();
                for i in 0..n {
                    trial[i] -= lambda * step[i];
                }
                let (r, j) = self.residual_and_jacobian(&trial, k);
                let rn = r.norm();
                if rn.is_finite() && rn < norm {
                    accepted = Some((trial, r, j, rn));
                    break;
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((trial, r, j, rn)) => {
                    args = trial;
                    res = r;
                    jac = j;
                    norm = rn;
                }
                None => {
                    // no decrease possible: accept only if the update is at rounding level
                    if step.norm() <= 4.0 * f64::EPSILON * (1.0 + x_norm) && norm <= 1e3 * target {
                        return Ok(NewtonSolution {
                            x: args[..n].to_vec(),
                            iterations: iter,
                            residual: norm,
                        });
                    }
                    break;
                }
            }
        }
        Err(SuperpositionError::NewtonFailed { t, residual: norm })
    }

    /// Symbolic residuals `X̃_α(Ψ^j)` (and `X̃_α(c)` for constraints `c`).
    /// Partial rules are judged on the constraint submanifold by sampling.
    pub fn verify_tangency(&self, fields: &[VectorField]) -> Result<TangencyReport, SuperpositionError> {
        let psi_r: Vec<RatFn> = self.psi.iter().map(Expr::canonical).collect::<Result<_, _>>()?;
        let con_r: Vec<RatFn> = self
            .constraints
            .iter()
            .map(Expr::canonical)
            .collect::<Result<_, _>>()?;
        let samples = if self.is_partial() {
            self.sample_submanifold(24, 0x7a9e)
        } else {
            Vec::new()
        };
        let names = self.product.chart().names().to_vec();
        let mut residuals = Vec::new();
        for (alpha, x) in fields.iter().enumerate() {
            let lifted = prolong_into(x, &self.product)?;
            let targets = psi_r
                .iter()
                .map(|f| (TangencyTarget::Psi, f))
                .chain(con_r.iter().map(|f| (TangencyTarget::Constraint, f)));
            for (j, (kind, f)) in targets.enumerate() {
                let r = lifted.apply(f);
                let verdict = if !self.is_partial() || r.is_zero() {
                    zero_test(&r)
                } else {
                    let c = Expr::from_canonical(&r).compile(&names)?;
                    on_samples(&c, &samples)
                };
                residuals.push(TangencyResidual {
                    field: alpha,
                    index: if kind == TangencyTarget::Psi { j } else { j - self.s },
                    target: kind,
                    residual: r,
                    verdict,
                });
            }
        }
        Ok(TangencyReport { residuals })
    }

    /// Random points of the constraint submanifold: `x_0 = Φ(x_1..m; k)` when Φ
    /// is known, otherwise a minimum-norm Newton projection of a random `x_0`.
    fn sample_submanifold(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        let mut attempts = 0;
        while out.len() < count && attempts < count * 50 {
            attempts += 1;
            let parts: Vec<Vec<f64>> = (0..self.m)
                .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let refs: Vec<&[f64]> = parts.iter().map(Vec::as_slice).collect();
            let x0 = if self.phi_c.is_some() {
                let k: Vec<f64> = (0..self.s).map(|_| rng.gen_range(-2.0..2.0)).collect();
                self.eval_phi(&refs, &k).ok()
            } else {
                let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                self.project_onto_constraints(&refs, start)
            };
            let Some(x0) = x0 else { continue };
            let Ok(args) = self.flatten(&x0, &refs) else { continue };
            if args.iter().all(|v| v.is_finite()) {
                out.push(args);
            }
        }
        out
    }

    fn project_onto_constraints(&self, particular: &[&[f64]], mut x0: Vec<f64>) -> Option<Vec<f64>> {
        let n = self.dim();
        let slot0 = self.product.slot_names(0);
        let names = self.product.chart().names().to_vec();
        let jac: Vec<Compiled> = self
            .constraints
            .iter()
            .flat_map(|e| slot0.iter().map(move |v| e.diff(v)))
            .map(|d| d.compile(&names))
            .collect::<Result<_, _>>()
            .ok()?;
        let c = self.constraints.len();
        for _ in 0..50 {
            let args = self.flatten(&x0, particular).ok()?;
            let r = DVector::from_iterator(c, self.constraint_c.iter().map(|f| f.eval(&args)));
            if r.norm() < 1e-13 {
                return Some(x0);
            }
            let j = DMatrix::from_fn(c, n, |a, b| jac[a * n + b].eval(&args));
            let step = j.pseudo_inverse(1e-12).ok()? * r;
            for i in 0..n {
                x0[i] -= step[i];
            }
        }
        None
    }

    /// Max over `samples` random points of `|Ψ(Φ(x;k), x) − k| / (1 + |k|)`.
    pub fn phi_psi_consistency(&self, samples: usize, seed: u64) -> Result<f64, SuperpositionError> {
        if self.phi_c.is_none() {
            return Err(SuperpositionError::MissingPhi);
        }
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut taken = 0;
        let mut attempts = 0;
        while taken < samples && attempts < samples * 50 {
            attempts += 1;
            let parts: Vec<Vec<f64>> = (0..self.m)
                .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let refs: Vec<&[f64]> = parts.iter().map(Vec::as_slice).collect();
            let k: Vec<f64> = (0..self.s).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x0 = self.eval_phi(&refs, &k)?;
            let back = self.eval_psi(&x0, &refs)?;
            if x0.iter().chain(&back).any(|v| !v.is_finite() || v.abs() > 1e6) {
                continue;
            }
            taken += 1;
            for (b, kj) in back.iter().zip(&k) {
                worst = worst.max((b - kj).abs() / (1.0 + kj.abs()));
            }
        }
        Ok(worst)
    }

    /// Rank of `∂Ψ/∂x_0` at random points (median), which should be `s`.
    pub fn generic_jacobian_rank(&self, samples: usize, seed: u64) -> usize {
        let n = self.dim();
        let dim = self.product.chart().dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ranks: Vec<usize> = (0..samples)
            .map(|_| {
                let args: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let j = DMatrix::from_fn(self.s, n, |r, c| self.jac_c[r * n + c].eval(&args));
                if j.iter().all(|v| v.is_finite()) {
                    numerical_rank(&j, 1e-10)
                } else {
                    0
                }
            })
            .collect();
        ranks.sort_unstable();
        ranks[ranks.len() / 2]
    }

    /// Componentwise `max_t |Ψ(t) − Ψ(t_0)|` over a tuple `(x_0, x_1, …, x_m)`
    /// of solutions on a common grid.
    pub fn verify_along_solutions(&self, tuple: &[Trajectory], tol_const: f64) -> Result<DriftReport, SuperpositionError> {
        if tuple.len() != self.m + 1 {
            return Err(SuperpositionError::Dimension {
                expected: self.m + 1,
                got: tuple.len(),
            });
        }
        if tuple.iter().any(|tr| tr.t != tuple[0].t) || tuple[0].is_empty() {
            return Err(SuperpositionError::GridMismatch);
        }
        let mut initial: Option<Vec<f64>> = None;
        let mut drift = vec![0.0f64; self.s];
        let mut worst_t = vec![tuple[0].t[0]; self.s];
        for (j, &t) in tuple[0].t.iter().enumerate() {
            let parts: Vec<&[f64]> = tuple[1..].iter().map(|tr| tr.x[j].as_slice()).collect();
            let psi = self.eval_psi(&tuple[0].x[j], &parts)?;
            if psi.iter().any(|v| !v.is_finite()) {
                return Err(SuperpositionError::SingularPsi { t });
            }
            match &initial {
                None => initial = Some(psi),
                Some(p0) => {
                    for c in 0..self.s {
                        let d = (psi[c] - p0[c]).abs();
                        if d > drift[c] {
                            drift[c] = d;
                            worst_t[c] = t;
                        }
                    }
                }
            }
        }
        let pass = drift.iter().all(|d| *d <= tol_const);
        Ok(DriftReport {
            initial: initial.unwrap_or_default(),
            drift,
            worst_t,
            tol_const,
            points: tuple[0].len(),
            pass,
        })
    }

    /// Slot-0 curve on the particular solutions' grid holding Ψ = k. With Φ the
    /// map is evaluated directly and every `cross_check_every`-th point is also
    /// solved by Newton, warm-started from the previous point.
    pub fn reconstruct(
        &self,
        particular: &[Trajectory],
        k: &[f64],
        x0_guess: &[f64],
        opts: &NewtonOptions,
    ) -> Result<Reconstruction, SuperpositionError> {
        if particular.len() != self.m {
            return Err(SuperpositionError::Dimension {
                expected: self.m,
                got: particular.len(),
            });
        }
        if particular.iter().any(|tr| tr.t != particular[0].t) || particular[0].is_empty() {
            return Err(SuperpositionError::GridMismatch);
        }
        let grid = &particular[0].t;
        let mut xs: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
        let mut guess = x0_guess.to_vec();
        let mut iterations = 0;
        let mut newton_solves = 0;
        let mut cross_check: f64 = 0.0;
        for (j, &t) in grid.iter().enumerate() {
            let parts: Vec<&[f64]> = particular.iter().map(|tr| tr.x[j].as_slice()).collect();
            let x = if self.phi_c.is_some() {
                let x = self.eval_phi(&parts, k)?;
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(SuperpositionError::SingularPsi { t });
                }
                if j % opts.cross_check_every == 0 {
                    let sol = self.solve_leaf(&parts, k, &guess, opts, t)?;
                    iterations += sol.iterations;
                    newton_solves += 1;
                    let d = sol.x.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    cross_check = cross_check.max(d);
                }
                x
            } else {
                let sol = self.solve_leaf(&parts, k, &guess, opts, t)?;
                iterations += sol.iterations;
                newton_solves += 1;
                sol.x
            };
            guess = x.clone();
            xs.push(x);
        }
        Ok(Reconstruction {
            trajectory: Trajectory::from_samples(grid.clone(), xs),
            newton_solves,
            newton_iterations: iterations,
            phi_cross_check: self.phi_c.is_some().then_some(cross_check),
        })
    }

    /// Builds `x_0(t)` from the particular solutions (via Φ, or by Newton with
    /// `x0_guess`) and checks that it solves the system and stays on the
    /// constraint submanifold.
    pub fn verify_partial_rule(
        &self,
        sys: &LieSystem,
        particular: &[Trajectory],
        k: &[f64],
        x0_guess: Option<&[f64]>,
        opts: &PartialCheckOptions,
    ) -> Result<PartialRuleReport, SuperpositionError> {
        if particular.len() != self.m {
            return Err(SuperpositionError::Dimension {
                expected: self.m,
                got: particular.len(),
            });
        }
        let h = opts.fd_step;
        let start = particular.iter().map(Trajectory::start).fold(f64::NEG_INFINITY, f64::max);
        let end = particular.iter().map(Trajectory::end).fold(f64::INFINITY, f64::min);
        let mut guess = match (x0_guess, self.phi_c.is_some()) {
            (Some(g), _) => g.to_vec(),
            (None, true) => Vec::new(),
            (None, false) => return Err(SuperpositionError::MissingPhi),
        };
        let newton = NewtonOptions::default();
        let at = |t: f64, guess: &mut Vec<f64>| -> Result<(Vec<f64>, Vec<Vec<f64>>), SuperpositionError> {
            let parts: Vec<Vec<f64>> = particular
                .iter()
                .map(|tr| tr.sample(t).ok_or(SuperpositionError::GridMismatch))
                .collect::<Result<_, _>>()?;
            let refs: Vec<&[f64]> = parts.iter().map(Vec::as_slice).collect();
            let x = if self.phi_c.is_some() {
                self.eval_phi(&refs, k)?
            } else {
                self.solve_leaf(&refs, k, guess, &newton, t)?.x
            };
            *guess = x.clone();
            Ok((x, parts))
        };
        let mut ode_residual: f64 = 0.0;
        let mut constraint_residual: f64 = 0.0;
        let mut checked = 0;
        let mut worst_t = start;
        let count = ((end - start - 2.0 * h) / opts.spacing).floor().max(0.0) as usize;
        for i in 0..=count {
            let t = start + h + i as f64 * opts.spacing;
            let (xm, _) = at(t - h, &mut guess)?;
            let (x, parts) = at(t, &mut guess)?;
            let (xp, _) = at(t + h, &mut guess)?;
            let v = sys.evaluate_field(t, &x)?;
            for c in 0..x.len() {
                let fd = (xp[c] - xm[c]) / (2.0 * h);
                let r = (fd - v[c]).abs();
                if r > ode_residual {
                    ode_residual = r;
                    worst_t = t;
                }
            }
            let refs: Vec<&[f64]> = parts.iter().map(Vec::as_slice).collect();
            for c in self.eval_constraints(&x, &refs)? {
                constraint_residual = constraint_residual.max(c.abs());
            }
            checked += 1;
        }
        Ok(PartialRuleReport {
            ode_residual,
            constraint_residual,
            worst_t,
            points: checked,
            pass: checked > 0 && ode_residual <= opts.tol_ode && constraint_residual <= opts.tol_constraint,
        })
    }
}

fn on_samples(c: &Compiled, samples: &[Vec<f64>]) -> ZeroTest {
    let mut taken = 0;
    for p in samples {
        let v = c.eval(p);
        if !v.is_finite() {
            continue;
        }
        taken += 1;
        let scale = 1.0 + p.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if v.abs() > 1e-8 * scale.powi(4) {
            return ZeroTest::NonZero;
        }
    }
    ZeroTest::Unknown { samples: taken }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Convergence when `‖residual‖ < tol · (1 + ‖k‖)`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub cross_check_every: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 50,
            max_halvings: 8,
            cross_check_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TangencyTarget {
    Psi,
    Constraint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangencyResidual {
    pub field: usize,
    pub target: TangencyTarget,
    pub index: usize,
    pub residual: RatFn,
    pub verdict: ZeroTest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangencyReport {
    pub residuals: Vec<TangencyResidual>,
}

impl TangencyReport {
    pub fn all_zero(&self) -> bool {
        self.residuals.iter().all(|r| r.verdict.is_zero_like())
    }

    pub fn is_probabilistic(&self) -> bool {
        self.residuals.iter().any(|r| r.verdict.is_probabilistic())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub initial: Vec<f64>,
    pub drift: Vec<f64>,
    pub worst_t: Vec<f64>,
    pub tol_const: f64,
    pub points: usize,
    pub pass: bool,
}

impl DriftReport {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().cloned().fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub trajectory: Trajectory,
    pub newton_solves: usize,
    pub newton_iterations: usize,
    /// Max |Φ − Newton| over the cross-checked points, when Φ was used.
    pub phi_cross_check: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialCheckOptions {
    pub tol_ode: f64,
    pub tol_constraint: f64,
    pub fd_step: f64,
    /// Distance between checked times.
    pub spacing: f64,
}

impl Default for PartialCheckOptions {
    fn default() -> Self {
        PartialCheckOptions {
            tol_ode: DEFAULT_TOL_ODE,
            tol_constraint: DEFAULT_TOL_CONSTRAINT,
            fd_step: DEFAULT_FD_STEP,
            spacing: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialRuleReport {
    pub ode_residual: f64,
    pub constraint_residual: f64,
    pub worst_t: f64,
    pub points: usize,
    pub pass: bool,
}

/// Max absolute difference between two trajectories on the first one's grid.
pub fn max_difference(a: &Trajectory, b: &Trajectory) -> f64 {
    a.t.iter()
        .zip(&a.x)
        .filter_map(|(t, x)| b.sample(*t).map(|y| (x.clone(), y)))
        .map(|(x, y)| x.iter().zip(&y).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}
