//! Named pass/fail checks shared by the CLI and the acceptance suite.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Short identifier of the identity or bound being checked.
    pub paper_tag: String,
    pub value: f64,
    pub target: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    /// `|value − target| ≤ tol`.
    pub fn abs(name: impl Into<String>, tag: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let pass = (value - target).abs() <= tol;
        Check { name: name.into(), paper_tag: tag.into(), value, target, tol, pass }
    }

    /// `|value − target| ≤ tol·|target|`.
    pub fn rel(name: impl Into<String>, tag: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let pass = (value - target).abs() <= tol * target.abs();
        Check { name: name.into(), paper_tag: tag.into(), value, target, tol, pass }
    }

    /// `value ≥ target − tol`.
    pub fn at_least(name: impl Into<String>, tag: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let pass = value >= target - tol;
        Check { name: name.into(), paper_tag: tag.into(), value, target, tol, pass }
    }

    /// `value ≤ target + tol`.
    pub fn at_most(name: impl Into<String>, tag: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let pass = value <= target + tol;
        Check { name: name.into(), paper_tag: tag.into(), value, target, tol, pass }
    }

    /// A boolean outcome, recorded as value 1/0 against target 1.
    pub fn flag(name: impl Into<String>, tag: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            paper_tag: tag.into(),
            value: if ok { 1.0 } else { 0.0 },
            target: 1.0,
            tol: 0.0,
            pass: ok,
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Check::abs("a", "t", 1.0, 1.05, 0.1).pass);
        assert!(!Check::rel("a", "t", 1.0, 2.0, 0.1).pass);
        assert!(Check::at_least("a", "t", -0.01, 0.0, 0.02).pass);
        assert!(!Check::at_most("a", "t", 0.2, 0.15, 0.0).pass);
        assert!(!all_pass(&[Check::flag("a", "t", true), Check::flag("b", "t", false)]));
    }
}
