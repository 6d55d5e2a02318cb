//! Report and CSV emission. Every file is written atomically (temp file
//! plus rename) and every float is printed with full round-trip precision,
//! so identical configs and seeds reproduce outputs byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

use super::config::ExperimentConfig;

/// One probe's verdict inside a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub id: String,
    pub required: bool,
    /// `pass`, `fail`, or `inconclusive`.
    pub verdict: String,
    pub passed: bool,
    /// Probe-specific numbers (slopes, ratios, norms).
    pub details: Value,
}

impl ProbeOutcome {
    pub fn new(id: &str, required: bool, passed: bool, details: Value) -> Self {
        Self {
            id: id.to_string(),
            required,
            verdict: if passed { "pass" } else { "fail" }.to_string(),
            passed,
            details,
        }
    }

    pub fn inconclusive(id: &str, required: bool, details: Value) -> Self {
        Self {
            id: id.to_string(),
            required,
            verdict: "inconclusive".to_string(),
            passed: false,
            details,
        }
    }
}

/// The JSON document a run leaves behind: the fully resolved config, every
/// probe outcome, and the aggregate status.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub stage: String,
    pub status: String,
    /// Set when the evolution guard aborted the run; partial outputs are
    /// kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    pub outcomes: Vec<ProbeOutcome>,
    pub config: ExperimentConfig,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.aborted.is_none() && self.outcomes.iter().filter(|o| o.required).all(|o| o.passed)
    }

    pub fn finalize(mut self) -> Self {
        self.status = if self.passed() { "pass" } else { "fail" }.to_string();
        self
    }
}

/// Full-precision float formatting shared by every CSV column.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes bytes atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes a CSV with a fixed header row.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

pub fn write_report(out_dir: &Path, report: &ExperimentReport) -> Result<PathBuf> {
    let path = out_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// Renders a stored report as a human-readable summary.
pub fn render_report(text: &str) -> Result<String> {
    let report: ExperimentReport = serde_json::from_str(text)?;
    let mut out = String::new();
    out.push_str(&format!("stage:  {}\n", report.stage));
    out.push_str(&format!("status: {}\n", report.status));
    if let Some(reason) = &report.aborted {
        out.push_str(&format!("aborted: {reason}\n"));
    }
    out.push_str(&format!(
        "grid:   dim {} / N {} / L {}\n",
        report.config.grid.dim, report.config.grid.points_per_dim, report.config.grid.extent
    ));
    out.push_str(&format!("seed:   {}  threads: {}\n", report.config.seed, report.config.threads));
    out.push_str("probes:\n");
    for o in &report.outcomes {
        let req = if o.required { "required" } else { "optional" };
        out.push_str(&format!("  [{:^12}] {:<28} ({req})\n", o.verdict, o.id));
        if let Value::Object(map) = &o.details {
            for (k, v) in map {
                out.push_str(&format!("      {k}: {v}\n"));
            }
        }
    }
    Ok(out)
}
