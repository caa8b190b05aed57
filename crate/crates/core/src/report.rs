//! Machine-readable pass/fail reports.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// gated checks decide the exit status; the rest are diagnostics
    pub gated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, passed: measured <= tolerance, gated: true, detail: None }
    }

    /// Passes when `measured >= tolerance`.
    pub fn at_least(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, passed: measured >= tolerance, gated: true, detail: None }
    }

    pub fn soft(mut self) -> Self {
        self.gated = false;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub timestamp: String,
    pub inputs: serde_json::Value,
    pub checks: Vec<Check>,
    /// set when the run stopped before all checks completed
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn new(inputs: serde_json::Value) -> Self {
        Self {
            tool: "zs".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: String::new(),
            inputs,
            checks: Vec::new(),
            partial: false,
            error: None,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Marks the report partial with the error that stopped it.
    pub fn fail(&mut self, error: impl ToString) {
        self.partial = true;
        self.error = Some(error.to_string());
    }

    pub fn gated_pass(&self) -> bool {
        !self.partial && self.checks.iter().filter(|c| c.gated).all(|c| c.passed)
    }
}
