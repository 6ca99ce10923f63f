//! Reports: named checks plus a command-specific JSON payload.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::problem::Outcome;

/// JSON schema every emitted report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub tol: f64,
    pub tol_const: f64,
    pub t_span: [f64; 2],
    pub seed: u64,
    pub samples: usize,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Raw outcome of the check.
    pub pass: bool,
    /// What the problem file expects; a check is satisfied when they agree.
    pub expected: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            pass,
            expected: Outcome::Pass,
            value: None,
            threshold: None,
            detail: None,
        }
    }

    /// Passes when `value ≤ threshold` (and is finite).
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            value: Some(value),
            threshold: Some(threshold),
            ..Check::new(name, value.is_finite() && value <= threshold)
        }
    }

    pub fn value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    pub fn expect(mut self, e: Outcome) -> Self {
        self.expected = e;
        self
    }

    pub fn satisfied(&self) -> bool {
        self.pass == (self.expected == Outcome::Pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub problem: String,
    pub version: String,
    pub settings: Settings,
    pub checks: Vec<Check>,
    pub data: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Report>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str, problem: &str, settings: &Settings) -> Self {
        Report {
            command: command.into(),
            problem: problem.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            settings: settings.clone(),
            checks: Vec::new(),
            data: Map::new(),
            children: Vec::new(),
            pass: true,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn put(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report data serializes");
        self.data.insert(key.into(), v);
    }

    /// Sets `pass` from the checks and children.
    pub fn finish(mut self) -> Self {
        self.pass = self.checks.iter().all(Check::satisfied) && self.children.iter().all(|c| c.pass);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable rendering; every number printed comes from a check.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        let _ = writeln!(
            out,
            "{}{} {}: {}",
            pad,
            self.command,
            self.problem,
            if self.pass { "PASS" } else { "FAIL" }
        );
        for c in &self.checks {
            let mut line = format!("{}  {} {}", pad, if c.pass { "PASS" } else { "FAIL" }, c.name);
            if let Some(v) = c.value {
                let _ = write!(line, " = {:e}", v);
            }
            if let Some(t) = c.threshold {
                let _ = write!(line, " (limit {:e})", t);
            }
            if c.expected == Outcome::Fail {
                line.push_str(if c.satisfied() { " [expected FAIL]" } else { " [expected FAIL, got PASS]" });
            }
            if let Some(d) = &c.detail {
                let _ = write!(line, ": {}", d);
            }
            out.push_str(&line);
            out.push('\n');
        }
        for child in &self.children {
            child.render_into(out, depth + 1);
        }
    }
}
