//! Problem files: the JSON input shared by every command and by the catalog.

use serde::{Deserialize, Serialize};

use liesys::dynamics::{CoefficientCurve, LieSystem};
use liesys::expr::Chart;
use liesys::geometry::VectorField;
use liesys::superposition::RuleSpec;

use crate::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub chart: Option<Chart>,
    /// Basis fields, one list of component expressions per field.
    #[serde(default)]
    pub fields: Option<Vec<Vec<String>>>,
    /// `b_α(t)`, one per field.
    #[serde(default)]
    pub coefficients: Option<Vec<String>>,
    #[serde(default)]
    pub rule: Option<OneOrMany<RuleEntry>>,
    #[serde(default)]
    pub action: Option<ActionSpec>,
    #[serde(default)]
    pub pde: Option<PdeSpec>,
    #[serde(default)]
    pub combination: Option<CombinationSpec>,
    #[serde(default)]
    pub task: TaskParams,
    #[serde(default)]
    pub expect: Expectations,
    /// Commands executed by `examples run`.
    #[serde(default)]
    pub run: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    #[default]
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleEntry {
    #[serde(default)]
    pub name: Option<String>,
    pub m: usize,
    pub s: usize,
    pub psi: Vec<String>,
    #[serde(default)]
    pub phi: Option<Vec<String>>,
    #[serde(default)]
    pub constraints: Vec<String>,
    /// `fail` marks a rule that is expected not to hold for this system.
    #[serde(default)]
    pub expect: Outcome,
}

impl RuleEntry {
    pub fn spec(&self) -> RuleSpec {
        RuleSpec {
            m: self.m,
            s: self.s,
            psi: self.psi.clone(),
            phi: self.phi.clone(),
            constraints: self.constraints.clone(),
        }
    }

    pub fn label(&self, index: usize) -> String {
        self.name.clone().unwrap_or_else(|| format!("rule{}", index))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Linear,
    Mobius,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub kind: ActionKind,
    /// `a(t) = b₁e + b₂h + b₃f` in the sl(2) basis.
    #[serde(default)]
    pub sl2: Option<[String; 3]>,
    /// Matrix entries as expressions in `t`.
    #[serde(default)]
    pub matrix: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSpec {
    pub s: usize,
    /// Parameter names; `t1..ts` by default (`x, y` for the Riccati family).
    #[serde(default)]
    pub params: Option<Vec<String>>,
    #[serde(default)]
    pub chart: Option<Chart>,
    #[serde(default)]
    pub fields: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub decomposition: Option<DecompositionSpec>,
    /// Coefficients `a..f` of `u_x = a u² + b u + c`, `u_y = d u² + e u + f`.
    #[serde(default)]
    pub riccati: Option<[String; 6]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSpec {
    pub u: Vec<Vec<String>>,
    pub basis: Vec<Vec<String>>,
}

/// `Σ b_α X̃_α` on `copies` copies of the chart, with function coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinationSpec {
    pub copies: usize,
    pub fields: Vec<Vec<String>>,
    pub functions: Vec<String>,
    /// Expected base field when the combination is a prolongation.
    #[serde(default)]
    pub base: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub bounds: Vec<[f64; 2]>,
    pub intervals: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskParams {
    #[serde(default)]
    pub t_span: Option<[f64; 2]>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub tol_const: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub k: Option<Vec<f64>>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub complete: Option<bool>,
    /// Initial points of the particular solutions.
    #[serde(default)]
    pub particular: Option<Vec<Vec<f64>>>,
    /// Initial point of the solution to reconstruct or integrate.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// End point in parameter space for PDE path solving.
    #[serde(default)]
    pub target: Option<Vec<f64>>,
    #[serde(default)]
    pub paths: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Extra draws of random bounded coefficient curves.
    #[serde(default)]
    pub random_coefficients: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    /// Nonzero structure constants written `c[a][b][g] = v`.
    #[serde(default)]
    pub constants: Option<Vec<String>>,
    #[serde(default)]
    pub flat: Option<bool>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let p: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    /// Structural checks that serde cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        let schema = |m: String| Err(CliError::Schema(m));
        if let (Some(f), Some(c)) = (&self.fields, &self.coefficients) {
            if f.len() != c.len() {
                return schema(format!("{} fields but {} coefficients", f.len(), c.len()));
            }
        }
        if self.fields.is_some() && self.chart.is_none() {
            return schema("`fields` needs a `chart`".into());
        }
        if let Some(p) = &self.pde {
            match (&p.fields, &p.riccati) {
                (Some(_), Some(_)) => return schema("pde: give either `fields` or `riccati`, not both".into()),
                (None, None) => return schema("pde: one of `fields` or `riccati` is required".into()),
                (Some(f), None) => {
                    if p.chart.is_none() {
                        return schema("pde: `fields` needs a `chart`".into());
                    }
                    if f.len() != p.s {
                        return schema(format!("pde: s = {} but {} fields", p.s, f.len()));
                    }
                }
                (None, Some(_)) => {
                    if p.s != 2 {
                        return schema("pde: the Riccati family has s = 2".into());
                    }
                }
            }
            if let Some(params) = &p.params {
                if params.len() != p.s {
                    return schema(format!("pde: s = {} but {} params", p.s, params.len()));
                }
            }
        }
        if let Some(a) = &self.action {
            if a.sl2.is_some() == a.matrix.is_some() {
                return schema("action: give exactly one of `sl2` or `matrix`".into());
            }
        }
        if let Some(c) = &self.combination {
            if c.fields.len() != c.functions.len() {
                return schema("combination: one function per field".into());
            }
            if self.chart.is_none() {
                return schema("combination needs a `chart`".into());
            }
        }
        if let Some([a, b]) = self.task.t_span {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return schema("task.t_span must be finite and increasing".into());
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "problem".into())
    }

    pub fn chart(&self) -> Result<&Chart, CliError> {
        self.chart.as_ref().ok_or_else(|| CliError::Schema("missing `chart`".into()))
    }

    pub fn basis(&self) -> Result<Vec<VectorField>, CliError> {
        let chart = self.chart()?;
        let fields = self.fields.as_ref().ok_or_else(|| CliError::Schema("missing `fields`".into()))?;
        fields
            .iter()
            .map(|f| VectorField::parse(chart, f).map_err(CliError::module))
            .collect()
    }

    pub fn coefficient_curves(&self) -> Result<Vec<CoefficientCurve>, CliError> {
        let c = self
            .coefficients
            .as_ref()
            .ok_or_else(|| CliError::Schema("missing `coefficients`".into()))?;
        c.iter().map(|b| CoefficientCurve::parse(b).map_err(CliError::module)).collect()
    }

    pub fn system(&self) -> Result<LieSystem, CliError> {
        LieSystem::new(self.basis()?, self.coefficient_curves()?).map_err(CliError::module)
    }

    pub fn rules(&self) -> Vec<RuleEntry> {
        self.rule.as_ref().map(OneOrMany::to_vec).unwrap_or_default()
    }
}
