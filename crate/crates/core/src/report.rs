//! Pass/fail records shared by every certification routine.
//!
//! A check carries a signed `margin`: positive means the inequality holds with
//! room to spare, negative means it is violated by that amount. A check passes
//! when `margin >= -tolerance`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub location: f64,
    pub margin: f64,
    pub pass: bool,
    #[serde(skip)]
    pub tolerance: f64,
    /// Advisory checks are reported but never fail a report.
    #[serde(default, skip_serializing_if = "is_false")]
    pub advisory: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, location: f64, margin: f64, tolerance: f64) -> Self {
        let pass = margin.is_finite() && margin >= -tolerance;
        Self {
            name: name.into(),
            location,
            margin,
            pass,
            tolerance,
            advisory: false,
        }
    }

    pub fn advisory(mut self) -> Self {
        self.advisory = true;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub tolerance_model: String,
}

impl VerificationReport {
    pub fn new(tolerance_model: impl Into<String>) -> Self {
        Self {
            checks: Vec::new(),
            tolerance_model: tolerance_model.into(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        if !other.tolerance_model.is_empty() {
            if !self.tolerance_model.is_empty() {
                self.tolerance_model.push_str("; ");
            }
            self.tolerance_model.push_str(&other.tolerance_model);
        }
        self.checks.extend(other.checks);
    }

    /// True when every non-advisory check passes. Empty reports pass.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass || c.advisory)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass && !c.advisory)
    }

    pub fn named<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name.starts_with(prefix))
    }

    /// Smallest margin among checks whose name starts with `prefix`.
    pub fn worst(&self, prefix: &str) -> Option<&Check> {
        self.checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }

    /// Flat form with columns `name,location,margin,pass`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["name", "location", "margin", "pass"])?;
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                format!("{:.16e}", c.location),
                format!("{:.16e}", c.margin),
                c.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
