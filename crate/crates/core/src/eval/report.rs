//! Success-rate aggregation and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::eval::FailureCategory;

pub const REPORT_SCHEMA_VERSION: &str = "1";

/// What one (task, policy, seed) cell produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub seed: u64,
    pub success: bool,
    pub ticks: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<FailureCategory>,
    /// Policy, scenario, or classification error for the cell, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task: String,
    pub policy: String,
    pub n: usize,
    pub successes: usize,
    pub mean: f64,
    /// Sample standard deviation of the per-seed 0/1 outcomes.
    pub std: f64,
    /// Mean ticks per episode.
    pub mean_steps: f64,
    pub failures: BTreeMap<FailureCategory, usize>,
    pub errors: usize,
}

impl ReportRow {
    /// `0.75 ± 0.50`
    pub fn cell(&self) -> String {
        format!("{:.2} ± {:.2}", self.mean, self.std)
    }
}

/// Mean and sample standard deviation (n - 1 denominator, zero when n = 1).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// # Panics
/// When `outcomes` is empty.
pub fn aggregate(task: &str, policy: &str, outcomes: &[EpisodeSummary]) -> ReportRow {
    assert!(!outcomes.is_empty(), "aggregate needs at least one outcome");
    let xs: Vec<f64> = outcomes.iter().map(|o| if o.success { 1.0 } else { 0.0 }).collect();
    let (mean, std) = mean_std(&xs);
    let steps: Vec<f64> = outcomes.iter().map(|o| o.ticks as f64).collect();
    let mut failures = BTreeMap::new();
    for c in outcomes.iter().filter(|o| !o.success).filter_map(|o| o.category) {
        *failures.entry(c).or_default() += 1;
    }
    ReportRow {
        task: task.into(),
        policy: policy.into(),
        n: outcomes.len(),
        successes: outcomes.iter().filter(|o| o.success).count(),
        mean,
        std,
        mean_steps: mean_std(&steps).0,
        failures,
        errors: outcomes.iter().filter(|o| o.error.is_some()).count(),
    }
}

/// Tasks as rows, policies as columns, `mean ± std` cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub task: String,
    pub cells: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: String,
    pub tasks: Vec<String>,
    pub policies: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub table: Table,
    /// Per-cell episode outcomes, in (task, policy) row order.
    pub episodes: Vec<Vec<EpisodeSummary>>,
}

impl BenchmarkReport {
    pub fn new(tasks: Vec<String>, policies: Vec<String>, rows: Vec<ReportRow>, episodes: Vec<Vec<EpisodeSummary>>) -> Self {
        let table = Table {
            columns: policies.clone(),
            rows: tasks
                .iter()
                .map(|t| TableRow {
                    task: t.clone(),
                    cells: policies
                        .iter()
                        .map(|p| {
                            rows.iter().find(|r| &r.task == t && &r.policy == p).map_or_else(|| "-".into(), ReportRow::cell)
                        })
                        .collect(),
                })
                .collect(),
        };
        BenchmarkReport { schema_version: REPORT_SCHEMA_VERSION.into(), tasks, policies, rows, table, episodes }
    }

    pub fn row(&self, task: &str, policy: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.task == task && r.policy == policy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Aligned plain-text rendering of the report table.
pub fn render_table(report: &BenchmarkReport) -> String {
    let t = &report.table;
    let head = "Task";
    let mut widths = vec![t.rows.iter().map(|r| r.task.chars().count()).chain([head.len()]).max().unwrap_or(0)];
    for (i, c) in t.columns.iter().enumerate() {
        let w = t.rows.iter().map(|r| r.cells[i].chars().count()).chain([c.chars().count()]).max().unwrap_or(0);
        widths.push(w);
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            let pad = widths[i] - c.chars().count();
            if i == 0 {
                let _ = write!(s, "{c}{}", " ".repeat(pad));
            } else {
                let _ = write!(s, " | {}{c}", " ".repeat(pad));
            }
        }
        s.trim_end().to_string()
    };
    let mut out = String::new();
    out.push_str(&line(std::iter::once(head).chain(t.columns.iter().map(String::as_str)).collect()));
    out.push('\n');
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for r in &t.rows {
        out.push_str(&line(std::iter::once(r.task.as_str()).chain(r.cells.iter().map(String::as_str)).collect()));
        out.push('\n');
    }
    out
}
