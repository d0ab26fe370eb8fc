use std::path::Path;

use anyhow::Result;

use crate::table::{num, Table};

/// One named pass/fail check with the measured value and its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        value: f64,
        bound: impl Into<String>,
        passed: bool,
    ) -> Self {
        Self {
            name: name.into(),
            value,
            bound: bound.into(),
            passed,
        }
    }
}

/// Checks collected by a command; the process exits nonzero unless all pass.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(["check", "value", "bound", "passed"]);
        for c in &self.checks {
            t.push(vec![
                c.name.clone(),
                num(c.value),
                c.bound.clone(),
                c.passed.to_string(),
            ]);
        }
        t
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.table().write(path)
    }

    pub fn print(&self) {
        for c in &self.checks {
            let v = c.value.abs();
            let value = if v == 0.0 || (1e-3..1e6).contains(&v) {
                format!("{:.6}", c.value)
            } else {
                format!("{:.3e}", c.value)
            };
            println!(
                "{} {}: {value} ({})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.bound
            );
        }
    }
}
