//! Slack reports for constraint checking.
//!
//! Checkers report signed slacks (nonnegative means satisfied) instead of
//! booleans so that tolerance policy stays with the test suites and drivers.

use serde::{Deserialize, Serialize};

/// One evaluated constraint: identifying label and signed slack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintSlack {
    /// Stable label such as `"C1[k=0]"` or `"C6[l=2]"`.
    pub label: String,
    pub slack: f64,
}

/// Collection of constraint slacks from one checker run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub entries: Vec<ConstraintSlack>,
}

impl ConstraintReport {
    pub fn push(&mut self, label: impl Into<String>, slack: f64) {
        self.entries.push(ConstraintSlack {
            label: label.into(),
            slack,
        });
    }

    /// Smallest slack in the report (`+∞` when empty).
    pub fn min_slack(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.slack)
            .fold(f64::INFINITY, f64::min)
    }

    /// True when every slack is at least `-tol`.
    pub fn all_satisfied(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| e.slack >= -tol)
    }

    /// Labels of entries with slack below `-tol`.
    pub fn violations(&self, tol: f64) -> Vec<&ConstraintSlack> {
        self.entries.iter().filter(|e| e.slack < -tol).collect()
    }

    pub fn merge(&mut self, other: ConstraintReport) {
        self.entries.extend(other.entries);
    }
}
