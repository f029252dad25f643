//! Test reports and their JSON / CSV forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One numeric comparison inside a report; passes when `value <= limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(label: impl Into<String>, value: f64, limit: f64) -> Self {
        Check {
            label: label.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }

    /// `|z| <= 3`.
    pub fn within_3se(label: impl Into<String>, z: f64) -> Self {
        Check::new(label, z, 3.0)
    }

    /// How far past its limit the check is: relative for positive limits,
    /// absolute otherwise. Non-positive means pass. NaN counts as a failure.
    pub fn excess(&self) -> f64 {
        let e = if self.limit > 0.0 {
            self.value / self.limit - 1.0
        } else {
            self.value - self.limit
        };
        if e.is_nan() {
            f64::INFINITY
        } else {
            e
        }
    }
}

/// A value reported for information only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub label: String,
    pub value: f64,
}

impl Metric {
    pub fn new(label: impl Into<String>, value: f64) -> Self {
        Metric {
            label: label.into(),
            value,
        }
    }
}

/// Outcome of one named test. `statistic` is the worst [`Check::excess`],
/// so `pass` holds exactly when `statistic <= threshold` (= 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub replicates: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metrics: Vec<Metric>,
}

impl TestReport {
    pub fn from_checks(name: &str, replicates: usize, seed: u64, checks: Vec<Check>) -> Self {
        let statistic = checks.iter().map(Check::excess).fold(f64::NEG_INFINITY, f64::max);
        let statistic = if checks.is_empty() { f64::INFINITY } else { statistic };
        TestReport {
            name: name.to_string(),
            statistic,
            threshold: 0.0,
            pass: statistic <= 0.0,
            replicates,
            seed,
            checks,
            metrics: Vec::new(),
        }
    }

    pub fn with_metrics(mut self, metrics: Vec<Metric>) -> Self {
        self.metrics = metrics;
        self
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub fn write_json<W: Write>(w: W, reports: &[TestReport]) -> Result<()> {
    serde_json::to_writer_pretty(w, reports)?;
    Ok(())
}

/// CSV `name,statistic,threshold,pass,replicates,seed`.
pub fn write_summary_csv<W: Write>(mut w: W, reports: &[TestReport]) -> Result<()> {
    writeln!(w, "name,statistic,threshold,pass,replicates,seed")?;
    for r in reports {
        writeln!(
            w,
            "{},{:?},{:?},{},{},{}",
            r.name, r.statistic, r.threshold, r.pass, r.replicates, r.seed
        )?;
    }
    Ok(())
}
