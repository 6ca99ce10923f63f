//! Vector fields on a coordinate chart, Lie brackets, and diagonal prolongations
//! to products of the chart.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Chart, Compiled, Expr, ExprError, RatFn};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("charts differ: {0:?} vs {1:?}")]
    ChartMismatch(Vec<String>, Vec<String>),
    #[error("field has {got} components but the chart has dimension {dim}")]
    ComponentCount { got: usize, dim: usize },
    #[error("component {index} references '{var}', which is not a chart coordinate")]
    ForeignVariable { index: usize, var: String },
    #[error("a product needs at least one copy")]
    NoCopies,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// `Σ_i A^i(x) ∂/∂x^i` with components in canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    chart: Chart,
    components: Vec<RatFn>,
}

impl VectorField {
    pub fn new(chart: Chart, components: Vec<RatFn>) -> Result<Self, GeometryError> {
        if components.len() != chart.dim() {
            return Err(GeometryError::ComponentCount {
                got: components.len(),
                dim: chart.dim(),
            });
        }
        for (index, c) in components.iter().enumerate() {
            if let Some(var) = c.variables().into_iter().find(|v| !chart.contains(v)) {
                return Err(GeometryError::ForeignVariable { index, var });
            }
        }
        Ok(VectorField { chart, components })
    }

    /// Parses one expression string per coordinate.
    pub fn parse<S: AsRef<str>>(chart: &Chart, components: &[S]) -> Result<Self, GeometryError> {
        let comps = components
            .iter()
            .map(|s| Expr::parse(s.as_ref(), chart)?.canonical())
            .collect::<Result<Vec<_>, _>>()?;
        VectorField::new(chart.clone(), comps)
    }

    pub fn zero(chart: &Chart) -> Self {
        VectorField {
            chart: chart.clone(),
            components: vec![RatFn::zero(); chart.dim()],
        }
    }

    /// `∂/∂x^i`.
    pub fn coordinate(chart: &Chart, i: usize) -> Self {
        let mut f = VectorField::zero(chart);
        f.components[i] = RatFn::one();
        f
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[RatFn] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &RatFn {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(RatFn::is_zero)
    }

    pub fn has_transcendental(&self) -> bool {
        self.components.iter().any(RatFn::has_transcendental)
    }

    fn check_chart(&self, other: &VectorField) -> Result<(), GeometryError> {
        if self.chart != other.chart {
            return Err(GeometryError::ChartMismatch(
                self.chart.names().to_vec(),
                other.chart.names().to_vec(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, GeometryError> {
        self.check_chart(other)?;
        Ok(VectorField {
            chart: self.chart.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField, GeometryError> {
        self.add(&other.scale(&RatFn::from_int(-1)))
    }

    /// Pointwise multiple `f · X`; `f` may be any function on the chart.
    pub fn scale(&self, f: &RatFn) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            components: self.components.iter().map(|c| c.mul(f)).collect(),
        }
    }

    /// Directional derivative `X(f) = Σ_i X^i ∂f/∂x^i`.
    pub fn apply(&self, f: &RatFn) -> RatFn {
        let terms: Vec<(&str, &RatFn)> = self
            .chart
            .names()
            .iter()
            .zip(&self.components)
            .filter(|(_, c)| !c.is_zero())
            .map(|(n, c)| (n.as_str(), c))
            .collect();
        f.directional(&terms)
    }

    /// Compiles the components against the chart coordinates (in chart order).
    pub fn compile(&self) -> Result<Vec<Compiled>, GeometryError> {
        self.components
            .iter()
            .map(|c| Ok(Expr::from_canonical(c).compile(self.chart.names())?))
            .collect()
    }

    pub fn component_strings(&self) -> Vec<String> {
        self.components.iter().map(|c| c.to_string()).collect()
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, c) in self.chart.names().iter().zip(&self.components) {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({})·∂/∂{}", c, name)?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Serialized form: `{chart: [...], components: [expr, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub chart: Chart,
    pub components: Vec<String>,
}

impl From<&VectorField> for FieldSpec {
    fn from(f: &VectorField) -> Self {
        FieldSpec {
            chart: f.chart.clone(),
            components: f.component_strings(),
        }
    }
}

impl TryFrom<&FieldSpec> for VectorField {
    type Error = GeometryError;
    fn try_from(s: &FieldSpec) -> Result<Self, Self::Error> {
        VectorField::parse(&s.chart, &s.components)
    }
}

/// `[X, Y]^i = Σ_j (X^j ∂Y^i/∂x^j − Y^j ∂X^i/∂x^j)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, GeometryError> {
    x.check_chart(y)?;
    let components = (0..x.dim())
        .map(|i| x.apply(&y.components[i]).sub(&y.apply(&x.components[i])))
        .collect();
    Ok(VectorField {
        chart: x.chart.clone(),
        components,
    })
}

/// `copies` copies of a base chart with coordinates `<var>_<slot>`; slot 0 holds
/// the solution being reconstructed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductChart {
    base: Chart,
    copies: usize,
    chart: Chart,
}

pub fn slot_name(var: &str, slot: usize) -> String {
    format!("{}_{}", var, slot)
}

impl ProductChart {
    pub fn new(base: &Chart, copies: usize) -> Result<Self, GeometryError> {
        if copies == 0 {
            return Err(GeometryError::NoCopies);
        }
        let names: Vec<String> = (0..copies)
            .flat_map(|a| base.names().iter().map(move |v| slot_name(v, a)))
            .collect();
        Ok(ProductChart {
            base: base.clone(),
            copies,
            chart: Chart::new(&names)?,
        })
    }

    pub fn base(&self) -> &Chart {
        &self.base
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Names of the coordinates in one slot, in base-chart order.
    pub fn slot_names(&self, slot: usize) -> Vec<String> {
        self.base.names().iter().map(|v| slot_name(v, slot)).collect()
    }

    /// `(slot, base index)` of a product coordinate.
    pub fn locate(&self, name: &str) -> Option<(usize, usize)> {
        self.chart
            .index_of(name)
            .map(|k| (k / self.base.dim(), k % self.base.dim()))
    }

    /// Renames a base-chart function into slot `slot`.
    pub fn to_slot(&self, f: &RatFn, slot: usize) -> RatFn {
        f.rename(&|v| slot_name(v, slot))
    }

    /// Renames product coordinates according to `perm` (slot `a` goes to `perm[a]`).
    fn permute_fn(&self, f: &RatFn, perm: &[usize]) -> RatFn {
        f.rename(&|v| match self.locate(v) {
            Some((a, i)) => slot_name(&self.base.names()[i], perm[a]),
            None => v.to_string(),
        })
    }
}

/// `X̃ = Σ_a X_(a)`: the same field acting independently in every slot.
pub fn diagonal_prolongation(x: &VectorField, copies: usize) -> Result<(ProductChart, VectorField), GeometryError> {
    let product = ProductChart::new(x.chart(), copies)?;
    let field = prolong_into(x, &product)?;
    Ok((product, field))
}

/// Prolongation onto an existing product chart.
pub fn prolong_into(x: &VectorField, product: &ProductChart) -> Result<VectorField, GeometryError> {
    if x.chart() != product.base() {
        return Err(GeometryError::ChartMismatch(
            x.chart().names().to_vec(),
            product.base().names().to_vec(),
        ));
    }
    let components = (0..product.copies())
        .flat_map(|a| x.components().iter().map(move |c| product.to_slot(c, a)))
        .collect();
    VectorField::new(product.chart().clone(), components)
}

/// Applies a slot permutation to a field on the product chart.
pub fn permute_slots(z: &VectorField, product: &ProductChart, perm: &[usize]) -> Result<VectorField, GeometryError> {
    if z.chart() != product.chart() {
        return Err(GeometryError::ChartMismatch(
            z.chart().names().to_vec(),
            product.chart().names().to_vec(),
        ));
    }
    let n = product.base().dim();
    let mut components = vec![RatFn::zero(); z.dim()];
    for a in 0..product.copies() {
        for i in 0..n {
            components[perm[a] * n + i] = product.permute_fn(z.component(a * n + i), perm);
        }
    }
    VectorField::new(product.chart().clone(), components)
}

/// Why a product-chart field fails to be a diagonal prolongation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProlongationWitness {
    /// The slot-`slot` components depend on coordinates of `depends_on`.
    CrossSlot {
        slot: usize,
        component: usize,
        depends_on: usize,
    },
    /// Slot `slot` carries a different function than slot 0 after renaming.
    SlotMismatch { slot: usize, component: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProlongationCheck {
    Yes { base: VectorField },
    No { witness: ProlongationWitness },
}

impl ProlongationCheck {
    pub fn is_yes(&self) -> bool {
        matches!(self, ProlongationCheck::Yes { .. })
    }
}

/// Decides symbolically whether `z` equals `X̃` for some base field `X`.
pub fn is_diagonal_prolongation(z: &VectorField, product: &ProductChart) -> Result<ProlongationCheck, GeometryError> {
    if z.chart() != product.chart() {
        return Err(GeometryError::ChartMismatch(
            z.chart().names().to_vec(),
            product.chart().names().to_vec(),
        ));
    }
    let n = product.base().dim();
    for a in 0..product.copies() {
        for i in 0..n {
            for v in z.component(a * n + i).variables() {
                if let Some((b, _)) = product.locate(&v) {
                    if b != a {
                        return Ok(ProlongationCheck::No {
                            witness: ProlongationWitness::CrossSlot {
                                slot: a,
                                component: i,
                                depends_on: b,
                            },
                        });
                    }
                }
            }
        }
    }
    let to_base = |f: &RatFn| -> RatFn {
        f.rename(&|v| match product.locate(v) {
            Some((_, i)) => product.base().names()[i].clone(),
            None => v.to_string(),
        })
    };
    let base_components: Vec<RatFn> = (0..n).map(|i| to_base(z.component(i))).collect();
    for a in 1..product.copies() {
        for (i, expected) in base_components.iter().enumerate() {
            if to_base(z.component(a * n + i)) != *expected {
                return Ok(ProlongationCheck::No {
                    witness: ProlongationWitness::SlotMismatch { slot: a, component: i },
                });
            }
        }
    }
    Ok(ProlongationCheck::Yes {
        base: VectorField::new(product.base().clone(), base_components)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(names: &[&str]) -> Chart {
        Chart::new(names).unwrap()
    }

    fn field(c: &Chart, comps: &[&str]) -> VectorField {
        VectorField::parse(c, comps).unwrap()
    }

    #[test]
    fn bracket_examples() {
        // frozen from tests/oracles/sympy_oracles.py
        let c = chart(&["x"]);
        let b = lie_bracket(&field(&c, &["1"]), &field(&c, &["x"])).unwrap();
        assert_eq!(b, field(&c, &["1"]));
        let c2 = chart(&["x", "y"]);
        let b = lie_bracket(&field(&c2, &["1", "0"]), &field(&c2, &["y", "-x"])).unwrap();
        assert_eq!(b, field(&c2, &["0", "-1"]));
    }

    #[test]
    fn bracket_chart_mismatch() {
        let a = field(&chart(&["x"]), &["1"]);
        let b = field(&chart(&["y"]), &["1"]);
        assert!(matches!(lie_bracket(&a, &b), Err(GeometryError::ChartMismatch(..))));
    }

    #[test]
    fn self_bracket_vanishes() {
        let c = chart(&["x", "y"]);
        let x = field(&c, &["x^2*y - 3", "y/(1 + x^2)"]);
        assert!(lie_bracket(&x, &x).unwrap().is_zero());
    }

    #[test]
    fn prolongation_examples() {
        let c = chart(&["x"]);
        let (p, z) = diagonal_prolongation(&field(&c, &["1"]), 2).unwrap();
        assert_eq!(p.chart().names(), &["x_0".to_string(), "x_1".to_string()]);
        assert_eq!(z, field(p.chart(), &["1", "1"]));
        let (p3, z3) = diagonal_prolongation(&field(&c, &["1"]), 3).unwrap();
        assert_eq!(z3, field(p3.chart(), &["1", "1", "1"]));
        let (_, zero) = diagonal_prolongation(&VectorField::zero(&c), 4).unwrap();
        assert!(zero.is_zero());
        let (p, z) = diagonal_prolongation(&field(&c, &["x^2"]), 2).unwrap();
        assert_eq!(z, field(p.chart(), &["x_0^2", "x_1^2"]));
    }

    #[test]
    fn function_combination_of_prolongations() {
        // x y X̃1 − (x + y) X̃2 with X1 = ∂x, X2 = x∂x on two copies
        let c = chart(&["x"]);
        let (p, x1) = diagonal_prolongation(&field(&c, &["1"]), 2).unwrap();
        let (_, x2) = diagonal_prolongation(&field(&c, &["x"]), 2).unwrap();
        let pc = p.chart();
        let b1 = Expr::parse("x_0*x_1", pc).unwrap().canonical().unwrap();
        let b2 = Expr::parse("-(x_0 + x_1)", pc).unwrap().canonical().unwrap();
        let z = x1.scale(&b1).add(&x2.scale(&b2)).unwrap();
        match is_diagonal_prolongation(&z, &p).unwrap() {
            ProlongationCheck::Yes { base } => assert_eq!(base, field(&c, &["-x^2"])),
            other => panic!("expected a prolongation, got {:?}", other),
        }
    }

    #[test]
    fn cross_slot_dependence_is_witnessed() {
        let c = chart(&["x"]);
        let p = ProductChart::new(&c, 2).unwrap();
        let z = field(p.chart(), &["x_1", "0"]);
        assert_eq!(
            is_diagonal_prolongation(&z, &p).unwrap(),
            ProlongationCheck::No {
                witness: ProlongationWitness::CrossSlot {
                    slot: 0,
                    component: 0,
                    depends_on: 1
                }
            }
        );
        let z = field(p.chart(), &["x_0", "2*x_1"]);
        assert!(matches!(
            is_diagonal_prolongation(&z, &p).unwrap(),
            ProlongationCheck::No {
                witness: ProlongationWitness::SlotMismatch { slot: 1, .. }
            }
        ));
    }

    #[test]
    fn permutation_leaves_prolongation_fixed() {
        let c = chart(&["x", "y"]);
        let (p, z) = diagonal_prolongation(&field(&c, &["y*x^2", "x - y"]), 3).unwrap();
        let w = permute_slots(&z, &p, &[2, 0, 1]).unwrap();
        assert_eq!(w, z);
        // a field that is not symmetric changes
        let asym = field(p.chart(), &["x_1", "0", "0", "0", "0", "0"]);
        assert_ne!(permute_slots(&asym, &p, &[1, 0, 2]).unwrap(), asym);
    }
}
