//! Named pass/fail records shared by the acceptance suite and the CLI.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn le(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, tolerance: limit, pass: value <= limit }
    }

    /// Passes when `value ≥ limit`.
    pub fn ge(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, tolerance: limit, pass: value >= limit }
    }

    /// Passes when `|value − target| ≤ tol`; records the deviation.
    pub fn near(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let dev = (value - target).abs();
        Self { name: name.into(), value: dev, tolerance: tol, pass: dev <= tol }
    }

    /// Boolean verdict, recorded as 1 or 0 against tolerance 0.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 0.0, pass: ok }
    }

    /// A failed step: value NaN.
    pub fn error(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self { name: format!("{}: {err}", name.into()), value: f64::NAN, tolerance: 0.0, pass: false }
    }
}

/// Folds a fallible step into checks, turning an error into one failed check.
pub fn collect<E: std::fmt::Display>(name: &str, r: Result<Vec<Check>, E>) -> Vec<Check> {
    r.unwrap_or_else(|e| vec![Check::error(name, e)])
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
