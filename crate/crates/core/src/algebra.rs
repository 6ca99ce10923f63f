//! Exact Lie closure of vector fields and the sampled rank criterion for the
//! size of a fundamental set of solutions.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::poly::gcd as gcd_poly;
use crate::expr::{Compiled, Monomial, Poly, RatFn};
use crate::geometry::{lie_bracket, GeometryError, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("no fields given")]
    Empty,
    #[error("no finite closure found up to dimension {cap}")]
    CapExceeded { cap: usize },
    #[error("fields vanish or are dependent at every sampled point (tested k up to {max_k})")]
    InconsistentSampling { max_k: usize },
    #[error("could not draw admissible sample tuples for k = {k}")]
    SamplingExhausted { k: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Result of expressing a field as a constant combination of others.
#[derive(Clone, Debug, PartialEq)]
pub enum Span {
    In(Vec<BigRational>),
    NotIn { residual: VectorField },
}

impl Span {
    pub fn coefficients(&self) -> Option<&[BigRational]> {
        match self {
            Span::In(c) => Some(c),
            Span::NotIn { .. } => None,
        }
    }
}

fn lcm(a: &Poly, b: &Poly) -> Poly {
    if a == b || b.is_constant() {
        return a.clone();
    }
    if a.is_constant() {
        return b.clone();
    }
    let g = gcd_poly(a, b);
    a.mul(&b.div_exact(&g).expect("gcd divides"))
}

/// Solves `A c = b` over the rationals. Returns a particular solution (free
/// unknowns set to zero) and whether the system is consistent.
fn solve_rational(rows: &[Vec<BigRational>], rhs: &[BigRational], unknowns: usize) -> (Vec<BigRational>, bool) {
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..unknowns {
        let Some(p) = (row..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for v in m[row].iter_mut() {
            *v *= &inv;
        }
        for i in 0..m.len() {
            if i != row && !m[i][col].is_zero() {
                let factor = m[i][col].clone();
                for j in col..=unknowns {
                    let delta = &factor * &m[row][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push((row, col));
        row += 1;
        if row == m.len() {
            break;
        }
    }
    let consistent = m[row..].iter().all(|r| r[unknowns].is_zero());
    let mut x = vec![BigRational::zero(); unknowns];
    for (r, c) in pivots {
        x[c] = m[r][unknowns].clone();
    }
    (x, consistent)
}

/// Constants `c` with `target = Σ c_α X_α`, found by matching monomial
/// coefficients after clearing denominators component by component.
pub fn span_coefficients(target: &VectorField, basis: &[VectorField]) -> Result<Span, AlgebraError> {
    for b in basis {
        if b.chart() != target.chart() {
            return Err(GeometryError::ChartMismatch(
                b.chart().names().to_vec(),
                target.chart().names().to_vec(),
            )
            .into());
        }
    }
    let r = basis.len();
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let mut rhs: Vec<BigRational> = Vec::new();
    for i in 0..target.dim() {
        let mut den = target.component(i).denom().clone();
        for b in basis {
            den = lcm(&den, b.component(i).denom());
        }
        let lift = |f: &RatFn| -> Poly {
            f.numer()
                .mul(&den.div_exact(f.denom()).expect("common denominator"))
        };
        let t = lift(target.component(i));
        let cols: Vec<Poly> = basis.iter().map(|b| lift(b.component(i))).collect();
        let mut table: BTreeMap<Monomial, (Vec<BigRational>, BigRational)> = BTreeMap::new();
        for (alpha, p) in cols.iter().enumerate() {
            for (m, c) in p.terms() {
                let entry = table
                    .entry(m.clone())
                    .or_insert_with(|| (vec![BigRational::zero(); r], BigRational::zero()));
                entry.0[alpha] = c.clone();
            }
        }
        for (m, c) in t.terms() {
            let entry = table
                .entry(m.clone())
                .or_insert_with(|| (vec![BigRational::zero(); r], BigRational::zero()));
            entry.1 = c.clone();
        }
        for (_, (row, b)) in table {
            rows.push(row);
            rhs.push(b);
        }
    }
    if rows.is_empty() {
        return Ok(Span::In(vec![BigRational::zero(); r]));
    }
    let (coeffs, consistent) = solve_rational(&rows, &rhs, r);
    if consistent {
        return Ok(Span::In(coeffs));
    }
    let mut residual = target.clone();
    for (b, c) in basis.iter().zip(&coeffs) {
        residual = residual.sub(&b.scale(&RatFn::constant(c.clone())))?;
    }
    Ok(Span::NotIn { residual })
}

/// Keeps a maximal ℝ-linearly independent subfamily, in input order. Returns the
/// kept fields and the indices that were dropped.
pub fn prune_dependent(fields: &[VectorField]) -> Result<(Vec<VectorField>, Vec<usize>), AlgebraError> {
    let mut kept: Vec<VectorField> = Vec::new();
    let mut dropped = Vec::new();
    for (idx, f) in fields.iter().enumerate() {
        if f.is_zero() {
            dropped.push(idx);
            continue;
        }
        match span_coefficients(f, &kept)? {
            Span::In(_) if !kept.is_empty() => dropped.push(idx),
            _ => kept.push(f.clone()),
        }
    }
    Ok((kept, dropped))
}

/// Structure constants `c[α][β][γ]` of `[X_α, X_β] = Σ_γ c_{αβ}^γ X_γ`.
pub type StructureConstants = Vec<Vec<Vec<BigRational>>>;

/// A bracket that left the span of the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosureWitness {
    pub alpha: usize,
    pub beta: usize,
    pub bracket: VectorField,
    pub residual: VectorField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LieClosureReport {
    /// Basis after pruning (and, with completion, after adjoining brackets).
    pub basis: Vec<VectorField>,
    /// Input indices removed as ℝ-dependent on earlier fields.
    pub dropped: Vec<usize>,
    /// Number of fields adjoined by completion.
    pub adjoined: usize,
    pub constants: StructureConstants,
    pub closed: bool,
    pub witness: Option<ClosureWitness>,
    /// Basis dimension after each completion round.
    pub dimension_trace: Vec<usize>,
    /// True when some field has transcendental components, in which case the
    /// monomial matching treats transcendental atoms as independent symbols.
    pub formal: bool,
}

impl LieClosureReport {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn constant(&self, alpha: usize, beta: usize, gamma: usize) -> &BigRational {
        &self.constants[alpha][beta][gamma]
    }
}

pub const DEFAULT_DIMENSION_CAP: usize = 32;

/// Prunes dependencies, brackets all pairs and expresses each bracket in the
/// basis. With `complete`, brackets outside the span are adjoined until the
/// family closes or exceeds `cap`.
pub fn closure_test(fields: &[VectorField], complete: bool, cap: usize) -> Result<LieClosureReport, AlgebraError> {
    if fields.is_empty() {
        return Err(AlgebraError::Empty);
    }
    let (mut basis, dropped) = prune_dependent(fields)?;
    let formal = fields.iter().any(VectorField::has_transcendental);
    let mut adjoined = 0;
    let mut trace = vec![basis.len()];
    'rounds: loop {
        if basis.len() > cap {
            return Err(AlgebraError::CapExceeded { cap });
        }
        let r = basis.len();
        let mut constants = vec![vec![vec![BigRational::zero(); r]; r]; r];
        for alpha in 0..r {
            for beta in alpha + 1..r {
                let bracket = lie_bracket(&basis[alpha], &basis[beta])?;
                match span_coefficients(&bracket, &basis)? {
                    Span::In(c) => {
                        for (gamma, v) in c.into_iter().enumerate() {
                            constants[beta][alpha][gamma] = -v.clone();
                            constants[alpha][beta][gamma] = v;
                        }
                    }
                    Span::NotIn { residual } => {
                        if complete {
                            basis.push(bracket);
                            adjoined += 1;
                            trace.push(basis.len());
                            continue 'rounds;
                        }
                        return Ok(LieClosureReport {
                            basis,
                            dropped,
                            adjoined,
                            constants,
                            closed: false,
                            witness: Some(ClosureWitness {
                                alpha,
                                beta,
                                bracket,
                                residual,
                            }),
                            dimension_trace: trace,
                            formal,
                        });
                    }
                }
            }
        }
        return Ok(LieClosureReport {
            basis,
            dropped,
            adjoined,
            constants,
            closed: true,
            witness: None,
            dimension_trace: trace,
            formal,
        });
    }
}

/// Largest |Jacobi residual| entry; zero iff the constants satisfy the Jacobi identity.
pub fn jacobi_residual(c: &StructureConstants) -> BigRational {
    let r = c.len();
    let mut worst = BigRational::zero();
    for a in 0..r {
        for b in 0..r {
            for g in 0..r {
                for nu in 0..r {
                    let mut s = BigRational::zero();
                    for mu in 0..r {
                        s += &c[a][b][mu] * &c[mu][g][nu];
                        s += &c[b][g][mu] * &c[mu][a][nu];
                        s += &c[g][a][mu] * &c[mu][b][nu];
                    }
                    if s.abs() > worst {
                        worst = s.abs();
                    }
                }
            }
        }
    }
    worst
}

pub fn is_antisymmetric(c: &StructureConstants) -> bool {
    let r = c.len();
    (0..r).all(|a| (0..r).all(|b| (0..r).all(|g| c[a][b][g] == -c[b][a][g].clone())))
}

/// `[X_α, X_β] − Σ_γ c_{αβ}^γ X_γ` for every pair; all zero for a closed report.
pub fn reconstruction_residuals(report: &LieClosureReport) -> Result<Vec<VectorField>, AlgebraError> {
    let r = report.basis.len();
    let mut out = Vec::new();
    for a in 0..r {
        for b in 0..r {
            let mut res = lie_bracket(&report.basis[a], &report.basis[b])?;
            for g in 0..r {
                res = res.sub(&report.basis[g].scale(&RatFn::constant(report.constants[a][b][g].clone())))?;
            }
            out.push(res);
        }
    }
    Ok(out)
}

/// Sampling configuration for [`minimal_m`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub samples: usize,
    pub seed: u64,
    /// Fraction of tuples that must reach full rank for a copy count to count as generic.
    pub vote: f64,
    /// Singular values below `rel_threshold · σ_max` are treated as zero.
    pub rel_threshold: f64,
    /// Coordinates are drawn from `[-half_width, half_width]`.
    pub half_width: f64,
    /// Tuples with two slots closer than this (max norm) are redrawn.
    pub min_separation: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            samples: 64,
            seed: 0,
            vote: 0.9,
            rel_threshold: 1e-10,
            half_width: 2.0,
            min_separation: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankProfileEntry {
    pub k: usize,
    /// Largest rank seen over the samples.
    pub max_rank: usize,
    pub full_rank_fraction: f64,
    /// Tuples that were drawn but rank-deficient (discarded as degenerate at k = m).
    pub deficient: usize,
    /// Tuples redrawn because of the exclusion predicate or non-finite values.
    pub redrawn: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalSizeReport {
    pub m: usize,
    pub r: usize,
    pub samples: usize,
    pub seed: u64,
    pub profile: Vec<RankProfileEntry>,
}

/// Numerical rank from singular values with a relative threshold.
pub fn numerical_rank(m: &DMatrix<f64>, rel_threshold: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 || !max.is_finite() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_threshold * max).count()
}

/// Stacked evaluation matrix `A_α^i(x_(a))`, rows `(a, i)`, columns `α`.
pub fn evaluation_matrix(compiled: &[Vec<Compiled>], points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points.first().map(Vec::len).unwrap_or(0);
    let r = compiled.len();
    DMatrix::from_fn(points.len() * n, r, |row, alpha| {
        let (a, i) = (row / n, row % n);
        compiled[alpha][i].eval(&points[a])
    })
}

fn tuple_rng(seed: u64, k: usize, j: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 32) | j as u64);
    rng
}

fn draw_tuple(
    rng: &mut ChaCha8Rng,
    k: usize,
    n: usize,
    cfg: &SamplingConfig,
    compiled: &[Vec<Compiled>],
) -> Option<(DMatrix<f64>, usize)> {
    for attempt in 0..1000 {
        let points: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        // rational grid of spacing 1/1024
                        let steps = (cfg.half_width * 1024.0) as i64;
                        rng.gen_range(-steps..=steps) as f64 / 1024.0
                    })
                    .collect()
            })
            .collect();
        let separated = (0..k).all(|a| {
            (a + 1..k).all(|b| {
                points[a]
                    .iter()
                    .zip(&points[b])
                    .map(|(u, v)| (u - v).abs())
                    .fold(0.0, f64::max)
                    >= cfg.min_separation
            })
        });
        if !separated {
            continue;
        }
        let m = evaluation_matrix(compiled, &points);
        if m.iter().all(|v| v.is_finite()) {
            return Some((m, attempt));
        }
    }
    None
}

/// Least number of copies `k` at which the prolonged fields are linearly
/// independent at generic points, decided by a vote over random tuples.
pub fn minimal_m(fields: &[VectorField], cfg: &SamplingConfig) -> Result<FundamentalSizeReport, AlgebraError> {
    if fields.is_empty() {
        return Err(AlgebraError::Empty);
    }
    let n = fields[0].dim();
    let r = fields.len();
    let compiled: Vec<Vec<Compiled>> = fields
        .iter()
        .map(VectorField::compile)
        .collect::<Result<_, _>>()?;
    let mut profile = Vec::new();
    for k in 1..=r {
        let results: Vec<Option<(usize, usize)>> = (0..cfg.samples)
            .into_par_iter()
            .map(|j| {
                let mut rng = tuple_rng(cfg.seed, k, j);
                draw_tuple(&mut rng, k, n, cfg, &compiled)
                    .map(|(m, redrawn)| (numerical_rank(&m, cfg.rel_threshold), redrawn))
            })
            .collect();
        if results.iter().any(Option::is_none) {
            return Err(AlgebraError::SamplingExhausted { k });
        }
        let ranks: Vec<(usize, usize)> = results.into_iter().flatten().collect();
        let full = ranks.iter().filter(|(rk, _)| *rk == r).count();
        let entry = RankProfileEntry {
            k,
            max_rank: ranks.iter().map(|(rk, _)| *rk).max().unwrap_or(0),
            full_rank_fraction: full as f64 / cfg.samples as f64,
            deficient: cfg.samples - full,
            redrawn: ranks.iter().map(|(_, d)| d).sum(),
        };
        let accepted = entry.full_rank_fraction >= cfg.vote;
        profile.push(entry);
        if accepted {
            return Ok(FundamentalSizeReport {
                m: k,
                r,
                samples: cfg.samples,
                seed: cfg.seed,
                profile,
            });
        }
    }
    Err(AlgebraError::InconsistentSampling { max_k: r })
}

/// Generic rank of the prolongations to `copies` slots (median over samples).
pub fn generic_prolonged_rank(fields: &[VectorField], copies: usize, cfg: &SamplingConfig) -> Result<usize, AlgebraError> {
    let n = fields.first().ok_or(AlgebraError::Empty)?.dim();
    let compiled: Vec<Vec<Compiled>> = fields
        .iter()
        .map(VectorField::compile)
        .collect::<Result<_, _>>()?;
    let mut ranks: Vec<usize> = (0..cfg.samples)
        .into_par_iter()
        .map(|j| {
            let mut rng = tuple_rng(cfg.seed ^ 0x9e37_79b9, copies, j);
            draw_tuple(&mut rng, copies, n, cfg, &compiled)
                .map(|(m, _)| numerical_rank(&m, cfg.rel_threshold))
                .unwrap_or(0)
        })
        .collect();
    ranks.sort_unstable();
    Ok(ranks[ranks.len() / 2])
}

/// Rank of the stacked evaluation matrix at explicit points.
pub fn rank_at(fields: &[VectorField], points: &[Vec<f64>], rel_threshold: f64) -> Result<usize, AlgebraError> {
    let compiled: Vec<Vec<Compiled>> = fields
        .iter()
        .map(VectorField::compile)
        .collect::<Result<_, _>>()?;
    Ok(numerical_rank(&evaluation_matrix(&compiled, points), rel_threshold))
}

pub fn rational_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Chart;
    use num_bigint::BigInt;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn fields(chart: &[&str], comps: &[&[&str]]) -> Vec<VectorField> {
        let c = Chart::new(chart).unwrap();
        comps.iter().map(|f| VectorField::parse(&c, f).unwrap()).collect()
    }

    fn riccati() -> Vec<VectorField> {
        fields(&["x"], &[&["1"], &["x"], &["x^2"]])
    }

    #[test]
    fn span_examples() {
        let f = fields(&["x"], &[&["x"], &["1"], &["x"], &["2*x"], &["x^2"]]);
        assert_eq!(
            span_coefficients(&f[0], &[f[1].clone(), f[2].clone()]).unwrap(),
            Span::In(vec![q(0), q(1)])
        );
        assert!(matches!(
            span_coefficients(&f[3], &[f[1].clone(), f[4].clone()]).unwrap(),
            Span::NotIn { .. }
        ));
        let ric = riccati();
        let b = lie_bracket(&ric[0], &ric[2]).unwrap();
        assert_eq!(span_coefficients(&b, &ric).unwrap(), Span::In(vec![q(0), q(2), q(0)]));
    }

    #[test]
    fn span_with_rational_components() {
        let f = fields(&["x", "y"], &[&["1/x", "y/(x+1)"], &["1/x", "0"], &["0", "y/(x+1)"]]);
        assert_eq!(
            span_coefficients(&f[0], &f[1..]).unwrap(),
            Span::In(vec![q(1), q(1)])
        );
    }

    #[test]
    fn riccati_constants() {
        let rep = closure_test(&riccati(), false, DEFAULT_DIMENSION_CAP).unwrap();
        assert!(rep.closed);
        assert_eq!(rep.constant(0, 1, 0), &q(1));
        assert_eq!(rep.constant(0, 2, 1), &q(2));
        assert_eq!(rep.constant(1, 2, 2), &q(1));
        let nonzero = rep
            .constants
            .iter()
            .flatten()
            .flatten()
            .filter(|c| !c.is_zero())
            .count();
        // three pairs, each mirrored
        assert_eq!(nonzero, 6);
        assert!(is_antisymmetric(&rep.constants));
        assert!(jacobi_residual(&rep.constants).is_zero());
        assert!(reconstruction_residuals(&rep).unwrap().iter().all(VectorField::is_zero));
    }

    #[test]
    fn completion_adjoins_missing_bracket() {
        let f = fields(&["x"], &[&["1"], &["x^2"]]);
        let open = closure_test(&f, false, DEFAULT_DIMENSION_CAP).unwrap();
        assert!(!open.closed);
        let w = open.witness.unwrap();
        assert_eq!(w.bracket, fields(&["x"], &[&["2*x"]])[0]);
        let done = closure_test(&f, true, DEFAULT_DIMENSION_CAP).unwrap();
        assert!(done.closed);
        assert_eq!(done.dimension(), 3);
        assert_eq!(done.dimension_trace, vec![2, 3]);
    }

    #[test]
    fn single_field_closes_trivially() {
        let f = fields(&["x", "y"], &[&["y", "x^3"]]);
        let rep = closure_test(&f, false, DEFAULT_DIMENSION_CAP).unwrap();
        assert!(rep.closed);
        assert!(rep.constants[0][0][0].is_zero());
    }

    #[test]
    fn infinite_family_hits_cap() {
        // ∂x and x^3∂x generate all x^k∂x
        let f = fields(&["x"], &[&["1"], &["x^3"]]);
        assert_eq!(
            closure_test(&f, true, 6).unwrap_err(),
            AlgebraError::CapExceeded { cap: 6 }
        );
    }

    #[test]
    fn pruning_drops_dependent_fields() {
        let f = fields(&["x"], &[&["1"], &["x"], &["2 - 3*x"], &["0"]]);
        let (kept, dropped) = prune_dependent(&f).unwrap();
        assert_eq!(kept.len(), 2);
        assert_eq!(dropped, vec![2, 3]);
    }

    #[test]
    fn minimal_m_examples() {
        let cfg = SamplingConfig::default();
        assert_eq!(minimal_m(&riccati(), &cfg).unwrap().m, 3);
        let euclid = fields(&["x", "y"], &[&["1", "0"], &["0", "1"], &["y", "-x"]]);
        assert_eq!(minimal_m(&euclid, &cfg).unwrap().m, 2);
        let sep = fields(&["x"], &[&["1 + x^2"]]);
        assert_eq!(minimal_m(&sep, &cfg).unwrap().m, 1);
        let translation = fields(&["x", "y"], &[&["1", "0"]]);
        assert_eq!(minimal_m(&translation, &cfg).unwrap().m, 1);
    }

    #[test]
    fn minimal_m_profile_is_monotone() {
        let rep = minimal_m(&riccati(), &SamplingConfig::default()).unwrap();
        let ranks: Vec<usize> = rep.profile.iter().map(|p| p.max_rank).collect();
        assert_eq!(ranks, vec![1, 2, 3]);
        assert!(rep.m <= rep.r);
    }

    #[test]
    fn zero_fields_are_inconsistent() {
        let z = fields(&["x"], &[&["0"]]);
        assert!(matches!(
            minimal_m(&z, &SamplingConfig::default()),
            Err(AlgebraError::InconsistentSampling { .. })
        ));
    }
}
