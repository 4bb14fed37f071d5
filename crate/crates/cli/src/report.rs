//! Report records and the files written for a run.

use std::fs;
use std::path::Path;

use densitylab::comparison::{ComparisonSeries, SeriesKind};
use densitylab::Verdict;
use serde::Serialize;
use serde_json::Value;

use crate::scenario::Scenario;
use crate::svg::{Line, Plot};
use crate::CliError;

/// Ordered from harmless to fatal; a record takes the worst status of its
/// parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Inconclusive,
    HypothesisViolated,
    Violation,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Inconclusive => "inconclusive",
            Status::HypothesisViolated => "hypothesis-violated",
            Status::Violation => "violation",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationRecord {
    pub series: String,
    pub index: usize,
    pub t: f64,
    pub magnitude: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub status: Status,
    pub notes: Vec<String>,
    /// Named tolerances every numeric claim of the record was held to.
    pub tolerance: Value,
    pub grid: Value,
    pub result: Value,
    pub violations: Vec<ViolationRecord>,
    /// Where the curvature hypothesis fails, for checks that depend on it.
    pub hypothesis_violation: Option<Value>,
    /// Stems of the files under `series/` and `plots/`.
    pub series: Vec<String>,
}

impl CheckRecord {
    pub fn new(check: &str) -> Self {
        Self {
            check: check.to_string(),
            status: Status::Pass,
            notes: Vec::new(),
            tolerance: Value::Null,
            grid: Value::Null,
            result: Value::Null,
            violations: Vec::new(),
            hypothesis_violation: None,
            series: Vec::new(),
        }
    }

    pub fn raise(&mut self, status: Status) {
        self.status = self.status.max(status);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        let text = text.into();
        if !self.notes.contains(&text) {
            self.notes.push(text);
        }
    }

    pub fn error(check: &str, message: String) -> Self {
        let mut rec = Self::new(check);
        rec.status = Status::Error;
        rec.notes.push(message);
        rec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub verdict: Verdict,
    pub certified: bool,
    pub min_eigenvalue: f64,
    pub argmin_r: f64,
    pub zero_crossing: Option<f64>,
    pub tolerance: f64,
    pub grid: Value,
    /// Set when a profile comes from data rather than a closed form.
    pub lower_trust: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub scenario: Scenario,
    pub hypothesis: Hypothesis,
    pub status: Status,
    pub exit_code: i32,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn to_json(&self) -> Result<String, CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// A CSV table and, optionally, its plot.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFile {
    pub stem: String,
    pub csv: String,
    pub plot: Option<Plot>,
}

impl SeriesFile {
    /// Monotone series plot their normalized values; bounded series plot
    /// the values against the bound.
    pub fn from_series(stem: &str, series: &ComparisonSeries, log_x: bool) -> Self {
        let mut plot = Plot::new(&series.label, "t", log_x);
        match (series.kind, &series.bound) {
            (SeriesKind::Bounded, Some(bound)) => {
                plot.y_label = "value".into();
                plot.lines.push(Line::solid("value", &series.radii, &series.values));
                plot.lines.push(Line::dashed("bound", &series.radii, bound));
            }
            _ => {
                plot.y_label = "normalized".into();
                plot.lines.push(Line::solid("normalized", &series.radii, &series.normalized));
            }
        }
        if let Some(v) = series.monotone_violation {
            let y = match series.kind {
                SeriesKind::Bounded => series.values[v.index],
                SeriesKind::Monotone => series.normalized[v.index],
            };
            plot.markers.push((v.t, y));
        }
        Self {
            stem: stem.to_string(),
            csv: series.to_csv(),
            plot: Some(plot),
        }
    }
}

/// Columns of equal length as CSV with `{:e}` formatting.
pub fn columns_csv(header: &[&str], columns: &[&[f64]]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| format!("{:e}", c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes `report.json`, `series/*.csv`, `plots/*.svg` and `meta.json`.
pub fn write_outputs(dir: &Path, report: &Report, series: &[SeriesFile], meta: &Value) -> Result<(), CliError> {
    create_dir(&dir.join("series"))?;
    create_dir(&dir.join("plots"))?;
    write(&dir.join("report.json"), &report.to_json()?)?;
    for s in series {
        write(&dir.join("series").join(format!("{}.csv", s.stem)), &s.csv)?;
        if let Some(plot) = &s.plot {
            write(&dir.join("plots").join(format!("{}.svg", s.stem)), &plot.render())?;
        }
    }
    let mut meta_text = serde_json::to_string_pretty(meta)?;
    meta_text.push('\n');
    write(&dir.join("meta.json"), &meta_text)
}
