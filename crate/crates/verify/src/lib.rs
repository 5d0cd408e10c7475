//! Independent oracles and the built-in check suites.

pub mod oracles;
pub mod suites;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Oracles,
    Invariants,
    PaperValues,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracles" => Ok(Suite::Oracles),
            "invariants" => Ok(Suite::Invariants),
            "paper-values" => Ok(Suite::PaperValues),
            other => Err(format!("suite: unknown suite '{other}' (expected oracles, invariants or paper-values)")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Oracles => "oracles",
            Suite::Invariants => "invariants",
            Suite::PaperValues => "paper-values",
        })
    }
}

/// One numerical check: `|value − expected| ≤ tolerance` unless `passed` was
/// decided otherwise (inequalities, trends).
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// The mathematical statement being checked.
    pub anchor: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn close(name: &str, anchor: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            value,
            expected,
            tolerance,
            passed: (value - expected).abs() <= tolerance,
            detail: String::new(),
        }
    }

    pub fn relative(name: &str, anchor: &str, value: f64, expected: f64, rel: f64) -> Self {
        let mut c = Self::close(name, anchor, value, expected, rel * expected.abs());
        c.tolerance = rel;
        c.detail = "relative tolerance".into();
        c
    }

    pub fn holds(name: &str, anchor: &str, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            anchor: anchor.into(),
            value,
            expected: f64::NAN,
            tolerance: f64::NAN,
            passed,
            detail: detail.into(),
        }
    }

    pub fn failed(name: &str, anchor: &str, error: impl fmt::Display) -> Self {
        Self::holds(name, anchor, false, f64::NAN, format!("error: {error}"))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {}  [{}]  value {:.10e}", self.name, self.anchor, self.value)?;
        if self.expected.is_finite() {
            write!(f, "  expected {:.10e}  tol {:.1e}", self.expected, self.tolerance)?;
        }
        if !self.detail.is_empty() {
            write!(f, "  ({})", self.detail)?;
        }
        Ok(())
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    match suite {
        Suite::Oracles => suites::oracles(seed),
        Suite::Invariants => suites::invariants(seed),
        Suite::PaperValues => suites::paper_values(seed),
    }
}
