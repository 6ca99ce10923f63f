//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Indeterminates are [`Atom`]s: plain variables or opaque transcendental
//! applications such as `sin(x + 1)`. Exact division and gcd work over the
//! whole atom set, so transcendental atoms behave like independent symbols.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::ratfn::RatFn;

/// Transcendental functions understood by the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            _ => None,
        }
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
        }
    }
}

/// An indeterminate of the polynomial ring.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(String),
    App(Func, Box<RatFn>),
}

impl Atom {
    pub fn is_transcendental(&self) -> bool {
        matches!(self, Atom::App(..))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(name) => f.write_str(name),
            Atom::App(func, arg) => write!(f, "{}({})", func.name(), arg),
        }
    }
}

/// Product of atoms with positive exponents, sorted by atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Atom, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(atom: Atom, exp: u32) -> Self {
        if exp == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(atom, exp)])
        }
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent_of(&self, atom: &Atom) -> u32 {
        self.0
            .binary_search_by(|(a, _)| a.cmp(atom))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (atom, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 < *atom {
                return None;
            }
            if j < other.0.len() && other.0[j].0 == *atom {
                let f = other.0[j].1;
                j += 1;
                match e.cmp(&f) {
                    Ordering::Less => return None,
                    Ordering::Equal => {}
                    Ordering::Greater => out.push((atom.clone(), e - f)),
                }
            } else {
                out.push((atom.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Removes `atom` and returns its exponent alongside the remaining monomial.
    fn split_off(&self, atom: &Atom) -> (u32, Monomial) {
        let mut rest = Vec::with_capacity(self.0.len());
        let mut exp = 0;
        for (a, e) in &self.0 {
            if a == atom {
                exp = *e;
            } else {
                rest.push((a.clone(), *e));
            }
        }
        (exp, Monomial(rest))
    }

    /// Lexicographic order with the greatest atom most significant.
    pub fn lex_cmp(&self, other: &Monomial) -> Ordering {
        let (mut i, mut j) = (self.0.len(), other.0.len());
        while i > 0 && j > 0 {
            let (a, ea) = &self.0[i - 1];
            let (b, eb) = &other.0[j - 1];
            match a.cmp(b) {
                Ordering::Greater => return Ordering::Greater,
                Ordering::Less => return Ordering::Less,
                Ordering::Equal => match ea.cmp(eb) {
                    Ordering::Equal => {
                        i -= 1;
                        j -= 1;
                    }
                    ord => return ord,
                },
            }
        }
        (i > 0).cmp(&(j > 0))
    }
}

/// Sparse polynomial over the rationals; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn from_int(n: i64) -> Self {
        Poly::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn atom(atom: Atom) -> Self {
        Poly::term(Monomial::atom(atom, 1), BigRational::one())
    }

    pub fn var(name: &str) -> Self {
        Poly::atom(Atom::Var(name.to_string()))
    }

    pub fn term(mono: Monomial, coeff: BigRational) -> Self {
        let mut p = Poly::zero();
        if !coeff.is_zero() {
            p.terms.insert(mono, coeff);
        }
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// Value of a constant polynomial.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if self.is_constant() {
            return self.terms.values().next().cloned();
        }
        None
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|(a, _)| a.clone()))
            .collect()
    }

    pub fn has_transcendental(&self) -> bool {
        self.terms
            .keys()
            .any(|m| m.factors().iter().any(|(a, _)| a.is_transcendental()))
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    fn add_term(&mut self, mono: Monomial, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    fn mul_term(&self, mono: &Monomial, coeff: &BigRational) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.mul(mono), c * coeff))
                .collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Leading term in lexicographic order.
    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// Scales so the lex-leading coefficient is one.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some((_, lc)) => {
                let inv = lc.recip();
                self.scale(&inv)
            }
        }
    }

    /// Exact quotient `self / divisor`, or `None` when the division leaves a remainder.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        let (lm_d, lc_d) = divisor.leading()?;
        if divisor.terms.len() == 1 {
            let mut q = Poly::zero();
            for (m, c) in &self.terms {
                q.terms.insert(m.div(lm_d)?, c / lc_d);
            }
            return Some(q);
        }
        let (lm_d, lc_d) = (lm_d.clone(), lc_d.clone());
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while let Some((lm_r, lc_r)) = rem.leading() {
            let mono = lm_r.div(&lm_d)?;
            let coeff = lc_r / &lc_d;
            rem = rem.sub(&divisor.mul_term(&mono, &coeff));
            quot.add_term(mono, coeff);
        }
        Some(quot)
    }

    pub fn degree_in(&self, atom: &Atom) -> u32 {
        self.terms
            .keys()
            .map(|m| m.exponent_of(atom))
            .max()
            .unwrap_or(0)
    }

    /// Coefficients of `atom^0, atom^1, ...` as polynomials in the remaining atoms.
    pub fn coeffs_in(&self, atom: &Atom) -> Vec<Poly> {
        let deg = self.degree_in(atom) as usize;
        let mut out = vec![Poly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let (e, rest) = m.split_off(atom);
            out[e as usize].add_term(rest, c.clone());
        }
        out
    }

    fn leading_coeff_in(&self, atom: &Atom) -> Poly {
        let d = self.degree_in(atom);
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (e, rest) = m.split_off(atom);
            if e == d {
                out.add_term(rest, c.clone());
            }
        }
        out
    }

    /// Pseudo-remainder of `self` by `divisor` viewed as polynomials in `atom`.
    fn pseudo_rem(&self, divisor: &Poly, atom: &Atom) -> Poly {
        let db = divisor.degree_in(atom);
        let lcb = divisor.leading_coeff_in(atom);
        let mut r = self.clone();
        while !r.is_zero() && r.degree_in(atom) >= db {
            let dr = r.degree_in(atom);
            let lcr = r.leading_coeff_in(atom);
            let shift = Poly::term(Monomial::atom(atom.clone(), dr - db), BigRational::one());
            r = r.mul(&lcb).sub(&lcr.mul(&shift).mul(divisor));
        }
        r
    }

    fn content_in(&self, atom: &Atom) -> Poly {
        self.coeffs_in(atom)
            .iter()
            .filter(|c| !c.is_zero())
            .fold(Poly::zero(), |acc, c| gcd(&acc, c))
    }

    fn primitive_in(&self, atom: &Atom) -> Poly {
        let content = self.content_in(atom);
        self.div_exact(&content)
            .expect("content divides its polynomial")
    }

    /// Partial derivative with respect to a variable name. Chain-rule terms for
    /// transcendental atoms make the result a rational function in general.
    pub fn derivative(&self, var: &str) -> RatFn {
        let mut poly_part = Poly::zero();
        let mut extra = RatFn::zero();
        for (m, c) in &self.terms {
            for (idx, (atom, e)) in m.factors().iter().enumerate() {
                let inner = match atom {
                    Atom::Var(name) if name == var => None,
                    Atom::Var(_) => continue,
                    Atom::App(func, arg) => {
                        let d_arg = arg.derivative(var);
                        if d_arg.is_zero() {
                            continue;
                        }
                        Some(atom_derivative(*func, arg).mul(&d_arg))
                    }
                };
                let mut rest: Vec<(Atom, u32)> = m.factors().to_vec();
                if *e == 1 {
                    rest.remove(idx);
                } else {
                    rest[idx].1 -= 1;
                }
                let coeff = c * BigRational::from_integer(BigInt::from(*e));
                let reduced = Poly::term(Monomial(rest), coeff);
                match inner {
                    None => poly_part = poly_part.add(&reduced),
                    Some(chain) => extra = extra.add(&RatFn::from_poly(reduced).mul(&chain)),
                }
            }
        }
        RatFn::from_poly(poly_part).add(&extra)
    }

    /// Substitutes each atom by a rational function.
    pub fn substitute(&self, f: &dyn Fn(&Atom) -> Option<RatFn>) -> Option<RatFn> {
        let mut acc = RatFn::zero();
        for (m, c) in &self.terms {
            let mut term = RatFn::constant(c.clone());
            for (atom, e) in m.factors() {
                let base = match f(atom) {
                    Some(v) => v,
                    None => RatFn::from_poly(Poly::atom(atom.clone())),
                };
                term = term.mul(&base.pow(*e as i64)?);
            }
            acc = acc.add(&term);
        }
        Some(acc)
    }

    pub fn eval_f64(&self, env: &dyn Fn(&Atom) -> Option<f64>) -> Option<f64> {
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut t = rational_to_f64(c);
            for (atom, e) in m.factors() {
                t *= env(atom)?.powi(*e as i32);
            }
            total += t;
        }
        Some(total)
    }

    pub fn eval_exact(&self, env: &dyn Fn(&str) -> Option<BigRational>) -> Option<BigRational> {
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (atom, e) in m.factors() {
                match atom {
                    Atom::Var(name) => t *= num_traits::pow(env(name)?, *e as usize),
                    Atom::App(..) => return None,
                }
            }
            total += t;
        }
        Some(total)
    }
}

fn atom_derivative(func: Func, arg: &RatFn) -> RatFn {
    match func {
        Func::Sin => RatFn::app(Func::Cos, arg.clone()),
        Func::Cos => RatFn::app(Func::Sin, arg.clone()).neg(),
        Func::Exp => RatFn::app(Func::Exp, arg.clone()),
        Func::Ln => RatFn::one()
            .div(arg)
            .expect("ln argument is a nonzero rational function"),
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Greatest common divisor over `Q[atoms]`, normalized to be monic (lex).
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    if coprime_by_images(a, b) {
        return Poly::one();
    }
    let main = a
        .atoms()
        .into_iter()
        .chain(b.atoms())
        .max()
        .expect("non-constant polynomials have atoms");
    let da = a.degree_in(&main);
    let db = b.degree_in(&main);
    if da == 0 {
        return b
            .coeffs_in(&main)
            .iter()
            .fold(a.clone(), |acc, c| gcd(&acc, c));
    }
    if db == 0 {
        return a
            .coeffs_in(&main)
            .iter()
            .fold(b.clone(), |acc, c| gcd(&acc, c));
    }
    let ca = a.content_in(&main);
    let cb = b.content_in(&main);
    let content = gcd(&ca, &cb);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");
    let (mut r0, mut r1) = if da >= db { (pa, pb) } else { (pb, pa) };
    loop {
        let r = r0.pseudo_rem(&r1, &main);
        if r.is_zero() {
            break;
        }
        if r.degree_in(&main) == 0 {
            r1 = Poly::one();
            break;
        }
        r0 = r1;
        r1 = r.primitive_in(&main);
    }
    let g = if r1.is_constant() {
        Poly::one()
    } else {
        r1.primitive_in(&main)
    };
    content.mul(&g).monic()
}

/// Exact certificate that `gcd(a, b)` is constant. For each shared variable,
/// all other variables are fixed at integers where both leading coefficients
/// survive; a constant univariate image gcd then bounds the true degree in that
/// variable by zero. `false` means inconclusive.
fn coprime_by_images(a: &Poly, b: &Poly) -> bool {
    let atoms_a = a.atoms();
    let atoms_b = b.atoms();
    if atoms_a.iter().chain(&atoms_b).any(|x| matches!(x, Atom::App(..))) {
        return false;
    }
    let all: Vec<&Atom> = atoms_a.union(&atoms_b).collect();
    let shared: Vec<&Atom> = atoms_a.intersection(&atoms_b).collect();
    shared.iter().enumerate().all(|(k, v)| {
        (0..2u64).any(|round| {
            let point = |name: &str| -> Option<BigRational> {
                let i = all.iter().position(|x| matches!(x, Atom::Var(n) if n == name))?;
                let h = splitmix(((k as u64) << 32) ^ ((i as u64) << 8) ^ round);
                Some(BigRational::from_integer(BigInt::from((h % 2_000_001) as i64 - 1_000_000)))
            };
            let image = |p: &Poly| -> Option<Vec<BigRational>> {
                let c: Vec<BigRational> = p
                    .coeffs_in(v)
                    .iter()
                    .map(|c| c.eval_exact(&point))
                    .collect::<Option<_>>()?;
                if c.last().is_none_or(Zero::is_zero) {
                    None
                } else {
                    Some(c)
                }
            };
            match (image(a), image(b)) {
                (Some(ia), Some(ib)) => univariate_gcd_degree(ia, ib) == 0,
                _ => false,
            }
        })
    })
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Degree of the gcd of two univariate polynomials over `Q` (low degree first).
fn univariate_gcd_degree(mut a: Vec<BigRational>, mut b: Vec<BigRational>) -> usize {
    let trim = |p: &mut Vec<BigRational>| {
        while p.last().is_some_and(Zero::is_zero) {
            p.pop();
        }
    };
    trim(&mut a);
    trim(&mut b);
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_empty() {
        let lb = b.last().expect("nonempty").clone();
        while a.len() >= b.len() {
            let shift = a.len() - b.len();
            let q = a.last().expect("nonempty").clone() / &lb;
            for (i, c) in b.iter().enumerate() {
                let t = &q * c;
                a[i + shift] -= t;
            }
            a.pop();
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len().saturating_sub(1)
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| a.0.degree().cmp(&b.0.degree()).then(a.0.cmp(b.0)));
        for (i, (m, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let coeff_str = if mag.is_integer() {
                mag.numer().to_string()
            } else {
                format!("({}/{})", mag.numer(), mag.denom())
            };
            if m.is_one() {
                f.write_str(&coeff_str)?;
                continue;
            }
            if !mag.is_one() {
                write!(f, "{}*", coeff_str)?;
            }
            for (j, (atom, e)) in m.factors().iter().enumerate() {
                if j > 0 {
                    f.write_str("*")?;
                }
                if *e == 1 {
                    write!(f, "{}", atom)?;
                } else {
                    write!(f, "{}^{}", atom, e)?;
                }
            }
        }
        Ok(())
    }
}
