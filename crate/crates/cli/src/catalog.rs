//! Bundled example problems.

use rayon::prelude::*;

use crate::commands::{entry_seed, run_problem, Overrides};
use crate::problem::ProblemFile;
use crate::report::Report;
use crate::CliError;

macro_rules! entry {
    ($name:literal) => {
        ($name, include_str!(concat!("../catalog/", $name, ".json")))
    };
}

pub const CATALOG: &[(&str, &str)] = &[
    entry!("riccati"),
    entry!("linear2"),
    entry!("linear_n"),
    entry!("euclidean_se2"),
    entry!("separable_invsq"),
    entry!("separable_sq"),
    entry!("translation_nonunique"),
    entry!("sl2_group"),
    entry!("pde_riccati"),
    entry!("pde_nonflat"),
    entry!("lemma_counterexample"),
    entry!("partial_linear_rank1"),
    entry!("partial_linear_rank1_m2"),
];

pub fn names() -> Vec<&'static str> {
    CATALOG.iter().map(|(n, _)| *n).collect()
}

pub fn load(name: &str) -> Result<ProblemFile, CliError> {
    let (_, text) = CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::Usage(format!("no catalog entry '{}' (see `examples list`)", name)))?;
    ProblemFile::from_json(text)
}

/// Runs one entry with a seed derived from `master` and the entry name.
pub fn run(name: &str, master: u64, ov: &Overrides) -> Result<Report, CliError> {
    let p = load(name)?;
    let ov = Overrides {
        seed: Some(entry_seed(master, name)),
        ..ov.clone()
    };
    Ok(run_problem(&p, &ov))
}

/// Every entry, concurrently; children keep catalog order.
pub fn run_all(master: u64, ov: &Overrides) -> Result<Report, CliError> {
    let children: Vec<Report> = names()
        .par_iter()
        .map(|n| run(n, master, ov))
        .collect::<Result<_, _>>()?;
    let ctx = crate::commands::Context::new(
        &ProblemFile::default(),
        &Overrides {
            seed: Some(master),
            ..ov.clone()
        },
    )?;
    let mut rep = Report::new("examples run-all", "catalog", &ctx.settings);
    rep.children = children;
    Ok(rep.finish())
}
