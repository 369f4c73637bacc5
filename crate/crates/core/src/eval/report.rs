use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::eval::AccuracyMode;
use crate::model::{FormInstance, Weight};

/// A table row referenced from a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormRef {
    /// Row index in the table.
    pub instance: usize,
    pub language: String,
    pub form: String,
}

impl FormRef {
    pub fn new(instance: usize, f: &FormInstance) -> Self {
        FormRef {
            instance,
            language: f.language.clone(),
            form: f.form.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum PrecisionStatus {
    Computed,
    /// Not yet recomputed after an edit.
    Pending,
    /// Too many nodes for exact counting.
    OverCapacity {
        nodes: usize,
        cap: usize,
    },
    /// No connected subset of size two or more exists.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub size: Weight,
    pub n_edges: usize,
    pub recall: f64,
    pub precision: Option<f64>,
    pub precision_status: PrecisionStatus,
    /// Connected induced subsets counted in the precision denominator.
    pub possible_forms: Option<u64>,
    pub min_subset_size: usize,
    pub avg_d: f64,
    pub div_d: f64,
    pub acc: Option<f64>,
    pub acc_mode: Option<AccuracyMode>,
    pub connected_forms: usize,
    pub total_forms: usize,
    pub unconnected_forms: Vec<FormRef>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Same report ignoring precision, for comparing a live report with a
    /// fully computed one.
    pub fn eq_ignoring_precision(&self, other: &MetricsReport) -> bool {
        let strip = |r: &MetricsReport| MetricsReport {
            precision: None,
            precision_status: PrecisionStatus::Pending,
            possible_forms: None,
            ..r.clone()
        };
        strip(self) == strip(other)
    }
}

/// Formats with at least four significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (3 - mag).max(4) as usize;
    format!("{x:.decimals$}")
}

/// One column of a metric table.
pub struct MetricColumn<'a> {
    pub name: String,
    pub report: &'a MetricsReport,
    pub time_s: Option<f64>,
}

/// Metrics as rows and graphs as columns.
pub fn render_metric_table(columns: &[MetricColumn<'_>]) -> String {
    let mut rows: Vec<(&str, Vec<String>)> = vec![
        ("Metric", columns.iter().map(|c| c.name.clone()).collect()),
        ("Size", columns.iter().map(|c| c.report.size.to_string()).collect()),
        (
            "n_edges",
            columns.iter().map(|c| c.report.n_edges.to_string()).collect(),
        ),
        ("Recall", columns.iter().map(|c| fmt_sig(c.report.recall)).collect()),
        (
            "Precision",
            columns
                .iter()
                .map(|c| match (c.report.precision, c.report.precision_status) {
                    (Some(p), _) => fmt_sig(p),
                    (None, PrecisionStatus::Pending) => "pending".to_owned(),
                    (None, PrecisionStatus::OverCapacity { cap, .. }) => format!("n/a (>{cap} nodes)"),
                    (None, _) => "undefined".to_owned(),
                })
                .collect(),
        ),
        ("Div_D", columns.iter().map(|c| fmt_sig(c.report.div_d)).collect()),
        ("Avg_D", columns.iter().map(|c| fmt_sig(c.report.avg_d)).collect()),
        (
            "Acc",
            columns
                .iter()
                .map(|c| c.report.acc.map(fmt_sig).unwrap_or_else(|| "-".to_owned()))
                .collect(),
        ),
    ];
    if columns.iter().any(|c| c.time_s.is_some()) {
        rows.push((
            "Time (s)",
            columns
                .iter()
                .map(|c| c.time_s.map(|t| format!("{t:.3}")).unwrap_or_else(|| "-".to_owned()))
                .collect(),
        ));
    }
    let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let col_w: Vec<usize> = (0..columns.len())
        .map(|j| rows.iter().map(|(_, v)| v[j].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (label, values) in &rows {
        write!(out, "{label:<label_w$}").unwrap();
        for (v, w) in values.iter().zip(&col_w) {
            write!(out, "  {v:>w$}").unwrap();
        }
        out.push('\n');
    }
    out
}
