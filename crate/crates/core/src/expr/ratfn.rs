//! Canonical form: a reduced quotient of expanded polynomials.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::poly::{gcd, rational_to_f64, Atom, Func, Poly};

/// Multivariate rational function `num / den` with `gcd(num, den) = 1` and a
/// monic (lex) denominator. Two `RatFn`s are equal iff they denote the same
/// function, which makes the zero test for rational input exact.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatFn {
    num: Poly,
    den: Poly,
}

impl RatFn {
    pub fn zero() -> Self {
        RatFn {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        RatFn::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        RatFn {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        RatFn::from_poly(Poly::from_int(n))
    }

    pub fn var(name: &str) -> Self {
        RatFn::from_poly(Poly::var(name))
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFn {
            num: p,
            den: Poly::one(),
        }
    }

    /// Transcendental application with constant folding at the trivial points.
    pub fn app(func: Func, arg: RatFn) -> Self {
        if let Some(c) = arg.as_constant() {
            let folded = match func {
                Func::Sin if c.is_zero() => Some(RatFn::zero()),
                Func::Cos | Func::Exp if c.is_zero() => Some(RatFn::one()),
                Func::Ln if c.is_one() => Some(RatFn::zero()),
                _ => None,
            };
            if let Some(v) = folded {
                return v;
            }
        }
        RatFn::from_poly(Poly::atom(Atom::App(func, Box::new(arg))))
    }

    /// Builds `num / den`, reducing to lowest terms. `None` when `den` is zero.
    pub fn new(num: Poly, den: Poly) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        if num.is_zero() {
            return Some(RatFn::zero());
        }
        let (num, den) = if den.is_constant() {
            (num, den)
        } else {
            let g = gcd(&num, &den);
            if g.is_constant() {
                (num, den)
            } else {
                (
                    num.div_exact(&g).expect("gcd divides numerator"),
                    den.div_exact(&g).expect("gcd divides denominator"),
                )
            }
        };
        let lc = den.leading().map(|(_, c)| c.clone()).expect("nonzero");
        let inv = lc.recip();
        Some(RatFn {
            num: num.scale(&inv),
            den: den.scale(&inv),
        })
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.den.is_constant() {
            let n = self.num.as_constant()?;
            let d = self.den.as_constant()?;
            Some(n / d)
        } else {
            None
        }
    }

    pub fn has_transcendental(&self) -> bool {
        self.num.has_transcendental() || self.den.has_transcendental()
    }

    /// Variable names occurring anywhere, including inside transcendental arguments.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for atom in self.num.atoms().into_iter().chain(self.den.atoms()) {
            match atom {
                Atom::Var(name) => {
                    out.insert(name);
                }
                Atom::App(_, arg) => out.extend(arg.variables()),
            }
        }
        out
    }

    pub fn add(&self, other: &RatFn) -> RatFn {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        if self.den == other.den {
            return RatFn::new(self.num.add(&other.num), self.den.clone()).expect("nonzero den");
        }
        RatFn::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
        .expect("nonzero den")
    }

    pub fn neg(&self) -> RatFn {
        RatFn {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &RatFn) -> RatFn {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigRational) -> RatFn {
        if k.is_zero() {
            return RatFn::zero();
        }
        RatFn {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RatFn) -> RatFn {
        if self.is_zero() || other.is_zero() {
            return RatFn::zero();
        }
        if self.is_polynomial() && other.is_polynomial() {
            let c = self.den.as_constant().unwrap() * other.den.as_constant().unwrap();
            return RatFn::new(self.num.mul(&other.num), Poly::constant(c)).expect("nonzero den");
        }
        RatFn::new(self.num.mul(&other.num), self.den.mul(&other.den)).expect("nonzero den")
    }

    /// `None` on division by the zero function.
    pub fn div(&self, other: &RatFn) -> Option<RatFn> {
        if other.is_zero() {
            return None;
        }
        RatFn::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn recip(&self) -> Option<RatFn> {
        RatFn::one().div(self)
    }

    /// Integer power; negative exponents of zero give `None`.
    pub fn pow(&self, e: i64) -> Option<RatFn> {
        let mag = e.unsigned_abs() as u32;
        let p = RatFn {
            num: self.num.pow(mag),
            den: self.den.pow(mag),
        };
        let p = RatFn::new(p.num, p.den)?;
        if e < 0 {
            p.recip()
        } else {
            Some(p)
        }
    }

    pub fn derivative(&self, var: &str) -> RatFn {
        let dn = self.num.derivative(var);
        if self.den.is_constant() {
            let c = self.den.as_constant().expect("constant");
            return dn.scale(&c.recip());
        }
        let dd = self.den.derivative(var);
        if dn.is_polynomial() && dd.is_polynomial() {
            // One reduction of (N'D - ND')/D² instead of one per operation.
            let c = dn.denom().as_constant().expect("constant") * dd.denom().as_constant().expect("constant");
            let p = dn
                .numer()
                .mul(&self.den)
                .scale(dd.denom().as_constant().as_ref().expect("constant"))
                .sub(&self.num.mul(dd.numer()).scale(dn.denom().as_constant().as_ref().expect("constant")));
            return RatFn::new(p, self.den.mul(&self.den).scale(&c)).expect("denominator is nonzero");
        }
        let den = RatFn::from_poly(self.den.clone());
        let num = RatFn::from_poly(self.num.clone());
        dn.mul(&den)
            .sub(&num.mul(&dd))
            .div(&den.mul(&den))
            .expect("denominator is nonzero")
    }

    /// `Σ c_v ∂f/∂v` over a single common denominator. Polynomial data take one
    /// gcd at the end instead of one per term, which matters on large charts.
    pub fn directional(&self, terms: &[(&str, &RatFn)]) -> RatFn {
        let poly_of = |r: &RatFn| -> Option<Poly> {
            let c = r.den.as_constant()?;
            Some(r.num.scale(&c.recip()))
        };
        let fast = || -> Option<RatFn> {
            let mut acc = Poly::zero();
            for (v, c) in terms {
                let c = poly_of(c)?;
                let dn = poly_of(&self.num.derivative(v))?;
                let dd = poly_of(&self.den.derivative(v))?;
                acc = acc.add(&c.mul(&dn.mul(&self.den).sub(&self.num.mul(&dd))));
            }
            RatFn::new(acc, self.den.mul(&self.den))
        };
        fast().unwrap_or_else(|| {
            terms
                .iter()
                .fold(RatFn::zero(), |acc, (v, c)| acc.add(&c.mul(&self.derivative(v))))
        })
    }

    /// Replaces variables by rational functions; `None` if a denominator vanishes.
    pub fn substitute(&self, f: &dyn Fn(&str) -> Option<RatFn>) -> Option<RatFn> {
        let sub = |atom: &Atom| -> Option<RatFn> {
            match atom {
                Atom::Var(name) => f(name),
                Atom::App(func, arg) => {
                    let new_arg = arg.substitute(f)?;
                    Some(RatFn::app(*func, new_arg))
                }
            }
        };
        let n = self.num.substitute(&|a| sub(a))?;
        let d = self.den.substitute(&|a| sub(a))?;
        n.div(&d)
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> RatFn {
        self.substitute(&|name| Some(RatFn::var(&f(name))))
            .expect("renaming cannot create a zero denominator")
    }

    pub fn eval_f64(&self, env: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        let atom_env = |atom: &Atom| -> Option<f64> {
            match atom {
                Atom::Var(name) => env(name),
                Atom::App(func, arg) => Some(func.apply(arg.eval_f64(env)?)),
            }
        };
        let n = self.num.eval_f64(&atom_env)?;
        let d = self.den.eval_f64(&atom_env)?;
        Some(n / d)
    }

    /// Exact evaluation; `None` for transcendental input, missing variables, or a pole.
    pub fn eval_exact(&self, env: &dyn Fn(&str) -> Option<BigRational>) -> Option<BigRational> {
        let n = self.num.eval_exact(env)?;
        let d = self.den.eval_exact(env)?;
        if d.is_zero() {
            None
        } else {
            Some(n / d)
        }
    }

    pub fn to_f64_constant(&self) -> Option<f64> {
        self.as_constant().map(|c| rational_to_f64(&c))
    }
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_constant() {
            let d = self.den.as_constant().expect("constant");
            if d.is_one() {
                return write!(f, "{}", self.num);
            }
            return write!(f, "({})/{}", self.num, d);
        }
        let num = if self.num.len() > 1 {
            format!("({})", self.num)
        } else {
            self.num.to_string()
        };
        write!(f, "{}/({})", num, self.den)
    }
}
