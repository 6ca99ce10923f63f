//! Symbolic scalar expressions.
//!
//! [`Expr`] is the tree produced by the parser and used for floating-point
//! evaluation; [`RatFn`] is its canonical form (a reduced quotient of expanded
//! polynomials over the rationals) and is what every exact comparison runs on.
//! Transcendental calls are kept as opaque atoms inside the canonical form, so
//! zero tests on them fall back to random sampling and say so.

mod compile;
mod parse;
pub mod poly;
pub mod ratfn;

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compile::Compiled;
pub use poly::{Atom, Func, Monomial, Poly};
pub use ratfn::RatFn;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier '{name}' at offset {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("division by an expression that is identically zero")]
    DivisionByZero,
    #[error("variable '{0}' is not bound")]
    UnboundVariable(String),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
}

/// Ordered list of unique coordinate names.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Chart {
    names: Vec<String>,
}

impl Chart {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, ExprError> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        if names.is_empty() {
            return Err(ExprError::InvalidChart("a chart needs at least one coordinate".into()));
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if !is_identifier(n) {
                return Err(ExprError::InvalidChart(format!("'{}' is not an identifier", n)));
            }
            if Func::from_name(n).is_some() {
                return Err(ExprError::InvalidChart(format!("'{}' is a reserved function name", n)));
            }
            if !seen.insert(n.clone()) {
                return Err(ExprError::InvalidChart(format!("duplicate coordinate '{}'", n)));
            }
        }
        Ok(Chart { names })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Concatenation of two charts; names must stay unique.
    pub fn join(&self, other: &Chart) -> Result<Chart, ExprError> {
        let names: Vec<&String> = self.names.iter().chain(other.names.iter()).collect();
        Chart::new(&names)
    }
}

impl TryFrom<Vec<String>> for Chart {
    type Error = ExprError;
    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Chart::new(&v)
    }
}

impl From<Chart> for Vec<String> {
    fn from(c: Chart) -> Self {
        c.names
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(BigRational),
    Var(String),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Neg(Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Call(Func, Box<Expr>),
}

/// Outcome of a zero test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ZeroTest {
    /// Canonical form is the empty sum.
    Zero,
    /// Canonical form is nonzero and free of transcendentals, or a sample evaluated
    /// clearly away from zero.
    NonZero,
    /// Transcendental input that vanished at every sample. Probabilistic.
    Unknown { samples: usize },
}

impl ZeroTest {
    /// True for `Zero` and for the probabilistic all-samples-vanish verdict.
    pub fn is_zero_like(&self) -> bool {
        !matches!(self, ZeroTest::NonZero)
    }

    pub fn is_probabilistic(&self) -> bool {
        matches!(self, ZeroTest::Unknown { .. })
    }
}

/// Number of random rational points used when a zero test has to sample.
pub const ZERO_TEST_SAMPLES: usize = 32;

impl Expr {
    pub fn parse(text: &str, chart: &Chart) -> Result<Expr, ExprError> {
        parse::parse(text, chart)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Num(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn canonical(&self) -> Result<RatFn, ExprError> {
        Ok(match self {
            Expr::Num(v) => RatFn::constant(v.clone()),
            Expr::Var(n) => RatFn::var(n),
            Expr::Add(ts) => {
                let mut acc = RatFn::zero();
                for t in ts {
                    acc = acc.add(&t.canonical()?);
                }
                acc
            }
            Expr::Mul(fs) => {
                let mut acc = RatFn::one();
                for f in fs {
                    acc = acc.mul(&f.canonical()?);
                }
                acc
            }
            Expr::Neg(e) => e.canonical()?.neg(),
            Expr::Div(a, b) => a
                .canonical()?
                .div(&b.canonical()?)
                .ok_or(ExprError::DivisionByZero)?,
            Expr::Pow(b, e) => b.canonical()?.pow(*e).ok_or(ExprError::DivisionByZero)?,
            Expr::Call(f, a) => RatFn::app(*f, a.canonical()?),
        })
    }

    /// Tree for a canonical form, printed as `numerator / denominator`.
    pub fn from_canonical(r: &RatFn) -> Expr {
        let num = poly_to_expr(r.numer());
        if r.denom().is_constant() {
            let d = r.denom().as_constant().expect("constant");
            if d.is_one() {
                return num;
            }
            return Expr::Div(Box::new(num), Box::new(Expr::Num(d)));
        }
        Expr::Div(Box::new(num), Box::new(poly_to_expr(r.denom())))
    }

    /// Canonical form rebuilt as a tree.
    pub fn simplified(&self) -> Result<Expr, ExprError> {
        Ok(Expr::from_canonical(&self.canonical()?))
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Add(v) | Expr::Mul(v) => v.iter().for_each(|e| e.collect_vars(out)),
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn has_transcendental(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Call(..) => true,
            Expr::Add(v) | Expr::Mul(v) => v.iter().any(Expr::has_transcendental),
            Expr::Neg(e) | Expr::Pow(e, _) => e.has_transcendental(),
            Expr::Div(a, b) => a.has_transcendental() || b.has_transcendental(),
        }
    }

    /// Structural derivative, lightly simplified but not canonicalized. Keeps the
    /// factored shape of the input, which evaluates more accurately than the
    /// expanded canonical form near cancellations.
    pub fn diff(&self, v: &str) -> Expr {
        match self {
            Expr::Num(_) => Expr::int(0),
            Expr::Var(n) => Expr::int(if n == v { 1 } else { 0 }),
            Expr::Add(ts) => sum(ts.iter().map(|t| t.diff(v)).collect()),
            Expr::Mul(fs) => {
                let mut terms = Vec::new();
                for i in 0..fs.len() {
                    let d = fs[i].diff(v);
                    if d.is_literal_zero() {
                        continue;
                    }
                    let mut factors: Vec<Expr> = fs.clone();
                    factors[i] = d;
                    terms.push(product(factors));
                }
                sum(terms)
            }
            Expr::Neg(e) => negate(e.diff(v)),
            Expr::Div(a, b) => {
                let da = a.diff(v);
                let db = b.diff(v);
                let first = quotient(da, (**b).clone());
                if db.is_literal_zero() {
                    return first;
                }
                let second = quotient(
                    product(vec![(**a).clone(), db]),
                    power((**b).clone(), 2),
                );
                sum(vec![first, negate(second)])
            }
            Expr::Pow(b, e) => {
                if *e == 0 {
                    return Expr::int(0);
                }
                let db = b.diff(v);
                product(vec![Expr::int(*e), power((**b).clone(), e - 1), db])
            }
            Expr::Call(f, a) => {
                let da = a.diff(v);
                if da.is_literal_zero() {
                    return Expr::int(0);
                }
                let outer = match f {
                    Func::Sin => Expr::Call(Func::Cos, a.clone()),
                    Func::Cos => negate(Expr::Call(Func::Sin, a.clone())),
                    Func::Exp => Expr::Call(Func::Exp, a.clone()),
                    Func::Ln => quotient(Expr::int(1), (**a).clone()),
                };
                product(vec![outer, da])
            }
        }
    }

    /// Exact partial derivative in canonical form.
    pub fn differentiate(&self, v: &str) -> Result<Expr, ExprError> {
        self.diff(v).simplified()
    }

    pub fn is_zero(&self) -> Result<ZeroTest, ExprError> {
        Ok(zero_test(&self.canonical()?))
    }

    fn is_literal_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if v.is_zero())
    }

    fn is_literal_one(&self) -> bool {
        matches!(self, Expr::Num(v) if v.is_one())
    }

    /// Replaces variables by expressions.
    pub fn substitute(&self, f: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(n) => f(n).unwrap_or_else(|| self.clone()),
            Expr::Add(v) => Expr::Add(v.iter().map(|e| e.substitute(f)).collect()),
            Expr::Mul(v) => Expr::Mul(v.iter().map(|e| e.substitute(f)).collect()),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(f))),
            Expr::Div(a, b) => Expr::Div(Box::new(a.substitute(f)), Box::new(b.substitute(f))),
            Expr::Pow(b, e) => Expr::Pow(Box::new(b.substitute(f)), *e),
            Expr::Call(func, a) => Expr::Call(*func, Box::new(a.substitute(f))),
        }
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> Expr {
        self.substitute(&|n| Some(Expr::Var(f(n))))
    }

    /// Floating-point evaluation with a name lookup.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Num(v) => poly::rational_to_f64(v),
            Expr::Var(n) => env(n).ok_or_else(|| ExprError::UnboundVariable(n.clone()))?,
            Expr::Add(v) => v.iter().map(|e| e.eval(env)).sum::<Result<f64, _>>()?,
            Expr::Mul(v) => v.iter().map(|e| e.eval(env)).product::<Result<f64, _>>()?,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Div(a, b) => a.eval(env)? / b.eval(env)?,
            Expr::Pow(b, e) => b.eval(env)?.powi(*e as i32),
            Expr::Call(f, a) => f.apply(a.eval(env)?),
        })
    }

    /// Compiles against an ordered variable list for repeated evaluation.
    pub fn compile<S: AsRef<str>>(&self, vars: &[S]) -> Result<Compiled, ExprError> {
        Compiled::new(self, vars)
    }
}

pub(crate) fn sum(terms: Vec<Expr>) -> Expr {
    let mut out = Vec::new();
    let mut constant = BigRational::zero();
    for t in terms {
        match t {
            Expr::Num(v) => constant += v,
            Expr::Add(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    if !constant.is_zero() {
        out.push(Expr::Num(constant));
    }
    match out.len() {
        0 => Expr::int(0),
        1 => out.pop().unwrap(),
        _ => Expr::Add(out),
    }
}

pub(crate) fn product(factors: Vec<Expr>) -> Expr {
    let mut out = Vec::new();
    let mut constant = BigRational::one();
    for f in factors {
        match f {
            Expr::Num(v) => constant *= v,
            Expr::Mul(inner) => out.extend(inner),
            Expr::Neg(inner) => {
                constant = -constant;
                out.push(*inner);
            }
            other => out.push(other),
        }
    }
    if constant.is_zero() {
        return Expr::int(0);
    }
    let body = match out.len() {
        0 => return Expr::Num(constant),
        1 => out.pop().unwrap(),
        _ => Expr::Mul(out),
    };
    if constant.is_one() {
        body
    } else if (-constant.clone()).is_one() {
        Expr::Neg(Box::new(body))
    } else {
        match body {
            Expr::Mul(mut v) => {
                v.insert(0, Expr::Num(constant));
                Expr::Mul(v)
            }
            b => Expr::Mul(vec![Expr::Num(constant), b]),
        }
    }
}

pub(crate) fn negate(e: Expr) -> Expr {
    match e {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn quotient(a: Expr, b: Expr) -> Expr {
    if a.is_literal_zero() {
        return Expr::int(0);
    }
    if b.is_literal_one() {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        if !y.is_zero() {
            return Expr::Num(x / y);
        }
    }
    Expr::Div(Box::new(a), Box::new(b))
}

pub(crate) fn power(b: Expr, e: i64) -> Expr {
    match e {
        0 => Expr::int(1),
        1 => b,
        _ => Expr::Pow(Box::new(b), e),
    }
}

fn poly_to_expr(p: &Poly) -> Expr {
    let mut terms: Vec<_> = p.terms().collect();
    terms.sort_by(|a, b| a.0.degree().cmp(&b.0.degree()).then(a.0.cmp(b.0)));
    let mut out = Vec::new();
    for (m, c) in terms {
        let mut factors = vec![Expr::Num(c.clone())];
        for (atom, e) in m.factors() {
            let base = match atom {
                Atom::Var(n) => Expr::Var(n.clone()),
                Atom::App(f, arg) => Expr::Call(*f, Box::new(Expr::from_canonical(arg))),
            };
            factors.push(power(base, *e as i64));
        }
        out.push(product(factors));
    }
    match out.len() {
        0 => Expr::int(0),
        1 => out.pop().unwrap(),
        _ => Expr::Add(out),
    }
}

/// Zero test on a canonical form with the default sample count and seed.
pub fn zero_test(r: &RatFn) -> ZeroTest {
    zero_test_with(r, ZERO_TEST_SAMPLES, 0x005e_ed0f_2e70)
}

/// Exact for rational input; samples at random rational points in `[-2, 2]`
/// when transcendental atoms remain.
pub fn zero_test_with(r: &RatFn, samples: usize, seed: u64) -> ZeroTest {
    if r.is_zero() {
        return ZeroTest::Zero;
    }
    if !r.has_transcendental() {
        return ZeroTest::NonZero;
    }
    let vars: Vec<String> = r.variables().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = 0;
    let mut attempts = 0;
    while taken < samples && attempts < samples * 20 {
        attempts += 1;
        let point: Vec<f64> = vars
            .iter()
            .map(|_| rng.gen_range(-128i32..=128) as f64 / 64.0)
            .collect();
        let env = |name: &str| vars.iter().position(|v| v == name).map(|i| point[i]);
        let Some((value, scale)) = numerator_with_scale(r.numer(), &env) else {
            continue;
        };
        let Some(den) = r.denom().eval_f64(&|a| atom_value(a, &env)) else {
            continue;
        };
        if !value.is_finite() || !den.is_finite() || den == 0.0 {
            continue;
        }
        taken += 1;
        if value.abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
            return ZeroTest::NonZero;
        }
    }
    ZeroTest::Unknown { samples: taken }
}

fn atom_value(atom: &Atom, env: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
    match atom {
        Atom::Var(n) => env(n),
        Atom::App(f, arg) => {
            let v = f.apply(arg.eval_f64(env)?);
            v.is_finite().then_some(v)
        }
    }
}

/// Value of a polynomial together with the sum of absolute term values.
fn numerator_with_scale(p: &Poly, env: &dyn Fn(&str) -> Option<f64>) -> Option<(f64, f64)> {
    let mut total = 0.0;
    let mut scale = 0.0;
    for (m, c) in p.terms() {
        let mut t = poly::rational_to_f64(c);
        for (atom, e) in m.factors() {
            t *= atom_value(atom, env)?.powi(*e as i32);
        }
        total += t;
        scale += t.abs();
    }
    Some((total, scale))
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(_) => 1,
        Expr::Mul(_) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Num(v) if v.is_negative() => 3,
        Expr::Num(v) if !v.is_integer() => 2,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn write_prec(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if precedence(e) < min {
        f.write_str("(")?;
        write!(f, "{}", e)?;
        f.write_str(")")
    } else {
        write!(f, "{}", e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if v.is_negative() {
                    f.write_str("-")?;
                    write_prec(&Expr::Num(-v.clone()), 4, f)
                } else if v.is_integer() {
                    write!(f, "{}", v.numer())
                } else {
                    write!(f, "{}/{}", v.numer(), v.denom())
                }
            }
            Expr::Var(n) => f.write_str(n),
            Expr::Add(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    match (i, t) {
                        (0, t) => write_prec(t, 2, f)?,
                        (_, Expr::Neg(inner)) => {
                            f.write_str(" - ")?;
                            write_prec(inner, 2, f)?;
                        }
                        (_, Expr::Num(v)) if v.is_negative() => {
                            f.write_str(" - ")?;
                            write_prec(&Expr::Num(-v.clone()), 2, f)?;
                        }
                        (_, t) => {
                            f.write_str(" + ")?;
                            write_prec(t, 2, f)?;
                        }
                    }
                }
                Ok(())
            }
            Expr::Mul(fs) => {
                for (i, x) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    // rationals inside products are parenthesized: (3/2)*x
                    write_prec(x, if i == 0 { 3 } else { 4 }, f)?;
                }
                Ok(())
            }
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_prec(e, 4, f)
            }
            Expr::Div(a, b) => {
                write_prec(a, 2, f)?;
                f.write_str("/")?;
                write_prec(b, 4, f)
            }
            Expr::Pow(b, e) => {
                write_prec(b, 5, f)?;
                if *e < 0 {
                    write!(f, "^({})", e)
                } else {
                    write!(f, "^{}", e)
                }
            }
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(names: &[&str]) -> Chart {
        Chart::new(names).unwrap()
    }

    fn canon(text: &str, c: &Chart) -> RatFn {
        Expr::parse(text, c).unwrap().canonical().unwrap()
    }

    #[test]
    fn parses_power_to_monomial() {
        let c = chart(&["x"]);
        let e = Expr::parse("x^2", &c).unwrap();
        assert_eq!(e, Expr::Pow(Box::new(Expr::var("x")), 2));
        assert_eq!(e.canonical().unwrap().to_string(), "x^2");
    }

    #[test]
    fn unknown_identifier_is_named() {
        let c = chart(&["x", "y"]);
        match Expr::parse("y*dx_coeff", &c) {
            Err(ExprError::UnknownIdentifier { name, position }) => {
                assert_eq!(name, "dx_coeff");
                assert_eq!(position, 2);
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn collects_like_terms() {
        let c = chart(&["x"]);
        assert_eq!(canon("1 + x + x", &c).to_string(), "1 + 2*x");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let c = chart(&["x"]);
        match Expr::parse("x + * 2", &c) {
            Err(ExprError::Syntax { position, .. }) => assert_eq!(position, 4),
            other => panic!("unexpected {:?}", other),
        }
        assert!(matches!(Expr::parse("(x + 1", &c), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expr::parse("x^x", &c), Err(ExprError::Syntax { .. })));
        assert!(matches!(
            Expr::parse("foo(x)", &c),
            Err(ExprError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn rational_and_decimal_literals() {
        let c = chart(&["x"]);
        assert_eq!(canon("3/4*x", &c), canon("0.75*x", &c));
        assert_eq!(canon("2^-1", &c), canon("1/2", &c));
        assert_eq!(canon("-x^2", &c), canon("-(x^2)", &c));
    }

    #[test]
    fn derivatives() {
        let c = chart(&["x", "y"]);
        let e = Expr::parse("x^2", &c).unwrap();
        assert_eq!(e.differentiate("x").unwrap().canonical().unwrap(), canon("2*x", &c));
        assert_eq!(e.differentiate("y").unwrap().canonical().unwrap(), RatFn::zero());
        // frozen from tests/oracles/sympy_oracles.py
        let e = Expr::parse("x^2*y - x/y", &c).unwrap();
        assert_eq!(
            e.differentiate("x").unwrap().canonical().unwrap(),
            canon("2*x*y - 1/y", &c)
        );
    }

    #[test]
    fn transcendental_derivatives() {
        let c = chart(&["x"]);
        let e = Expr::parse("sin(x^2) + ln(x) + exp(2*x)", &c).unwrap();
        let d = e.differentiate("x").unwrap().canonical().unwrap();
        assert_eq!(d, canon("2*x*cos(x^2) + 1/x + 2*exp(2*x)", &c));
    }

    #[test]
    fn zero_tests() {
        let c = chart(&["x", "y"]);
        let z = Expr::parse("(x+1)^2 - x^2 - 2*x - 1", &c).unwrap();
        assert_eq!(z.is_zero().unwrap(), ZeroTest::Zero);
        let nz = Expr::parse("x - y", &c).unwrap();
        assert_eq!(nz.is_zero().unwrap(), ZeroTest::NonZero);
        let trig = Expr::parse("sin(x)^2 + cos(x)^2 - 1", &c).unwrap();
        assert_eq!(trig.is_zero().unwrap(), ZeroTest::Unknown { samples: 32 });
        let trig_nz = Expr::parse("sin(x)^2 - cos(x)^2", &c).unwrap();
        assert_eq!(trig_nz.is_zero().unwrap(), ZeroTest::NonZero);
    }

    #[test]
    fn printing_round_trips() {
        let c = chart(&["x", "y"]);
        for text in [
            "-x^2 + 3/2*y",
            "(x - y)/(x + y)^(-2)",
            "-(3/2)*x*sin(y - 1)",
            "x - (y - 1)",
            "x/(y*x)",
            "2^3^2",
            "-(-x)",
        ] {
            let e = Expr::parse(text, &c).unwrap();
            let back = Expr::parse(&e.to_string(), &c).unwrap();
            assert_eq!(e.canonical().unwrap(), back.canonical().unwrap(), "{}", text);
        }
    }

    #[test]
    fn chart_validation() {
        assert!(Chart::new::<&str>(&[]).is_err());
        assert!(Chart::new(&["x", "x"]).is_err());
        assert!(Chart::new(&["sin"]).is_err());
        assert!(Chart::new(&["1x"]).is_err());
    }
}
