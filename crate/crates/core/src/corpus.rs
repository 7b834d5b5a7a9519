//! Built-in regression problems with stored golden reports.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::problem::parse_problem;
use crate::report::{diff_reports, run, Report};

/// Seed used for every corpus run.
pub const CORPUS_SEED: u64 = 20_240_601;

pub struct Example {
    pub name: &'static str,
    pub problem: &'static str,
    pub golden: &'static str,
}

macro_rules! example {
    ($name:literal) => {
        Example {
            name: $name,
            problem: include_str!(concat!("../corpus/", $name, ".problem")),
            golden: include_str!(concat!("../corpus/", $name, ".golden.json")),
        }
    };
}

pub const EXAMPLES: [Example; 5] = [
    example!("first-order"),
    example!("mechanics"),
    example!("plate"),
    example!("camassa-holm"),
    example!("first-as-second"),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    EXAMPLES.iter().map(|e| e.name)
}

pub fn example(name: &str) -> Result<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name).ok_or_else(|| {
        let known: Vec<&str> = names().collect();
        Error::Usage(format!("unknown corpus example `{name}` (known: {})", known.join(", ")))
    })
}

pub struct Outcome {
    pub report: Report,
    /// Mismatches against the stored golden; empty on success.
    pub diff: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.diff.is_empty() && self.report.consistency_failures.is_empty()
    }
}

pub fn run_example(ex: &Example) -> Result<Outcome> {
    let problem = parse_problem(ex.problem)?;
    let report = run(&problem, CORPUS_SEED)?;
    let golden: Value = serde_json::from_str(ex.golden)
        .map_err(|e| Error::Internal(format!("golden for `{}` is not valid JSON: {e}", ex.name)))?;
    let diff = diff_reports(&golden, &report.to_json());
    Ok(Outcome { report, diff })
}
