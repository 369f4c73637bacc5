//! Intrinsic and extrinsic metrics of a conceptual graph.
//!
//! | metric    | better |
//! | --------- | ------ |
//! | Size      | higher |
//! | Recall    | higher |
//! | Precision | higher |
//! | Avg_D     | n/a    |
//! | Div_D     | lower  |
//! | Acc       | higher |

mod report;
pub mod subsets;
mod sweep;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use report::{render_metric_table, FormRef, MetricColumn, MetricsReport, PrecisionStatus};
pub use sweep::{
    candidate_correlation, k_sweep, k_sweep_each, sweep_csv, SweepError, SweepOptions, SweepOutcome, SweepRow,
};

use crate::error::{EvalError, MetricError};
use crate::merge::is_form_connected;
use crate::model::{ConceptualGraph, FormFunctionTable, FunctionId, GoldStandard, Weight};
use subsets::{count_connected_subsets, neighbour_masks, MAX_SUBSET_NODES};

/// Default node cap for exact precision.
pub const DEFAULT_PRECISION_CAP: usize = 25;

/// Smallest node subset counted as a possible form.
pub const MIN_POSSIBLE_FORM: usize = 2;

/// Sum of edge weights.
pub fn size(g: &ConceptualGraph) -> Weight {
    g.edges().map(|(_, w)| w).sum()
}

/// Connected and total counts over the forms that express something.
fn form_counts(g: &ConceptualGraph, table: &FormFunctionTable) -> (usize, usize) {
    let adj = g.adjacency();
    table.expressed_forms().fold((0, 0), |(conn, total), (_, f)| {
        (conn + usize::from(is_form_connected(&adj, &f.functions)), total + 1)
    })
}

/// Share of expressed forms whose functions induce a connected subgraph.
pub fn recall(g: &ConceptualGraph, table: &FormFunctionTable) -> Result<f64, MetricError> {
    let (connected, total) = form_counts(g, table);
    if total == 0 {
        return Err(MetricError::NoForms);
    }
    Ok(connected as f64 / total as f64)
}

/// Numerator and denominator of precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionCounts {
    /// Distinct function sets (size >= 2) of connected forms.
    pub connected_forms: usize,
    /// Connected induced node subsets of size >= 2.
    pub possible_forms: u64,
}

impl PrecisionCounts {
    pub fn value(&self) -> f64 {
        self.connected_forms as f64 / self.possible_forms as f64
    }
}

pub fn precision_counts(
    g: &ConceptualGraph,
    table: &FormFunctionTable,
    cap: usize,
) -> Result<PrecisionCounts, MetricError> {
    let cap = cap.min(MAX_SUBSET_NODES);
    if g.node_count() > cap {
        return Err(MetricError::OverCapacity {
            nodes: g.node_count(),
            cap,
        });
    }
    let masks = neighbour_masks(g);
    let possible_forms = count_connected_subsets(&masks, MIN_POSSIBLE_FORM);
    let adj = g.adjacency();
    let distinct: BTreeSet<&[FunctionId]> = table
        .expressed_forms()
        .map(|(_, f)| f.functions.as_slice())
        .filter(|fs| fs.len() >= MIN_POSSIBLE_FORM && is_form_connected(&adj, fs))
        .collect();
    Ok(PrecisionCounts {
        connected_forms: distinct.len(),
        possible_forms,
    })
}

/// Distinct connected form sets over all connected node subsets of size
/// two or more.
pub fn precision(g: &ConceptualGraph, table: &FormFunctionTable, cap: usize) -> Result<f64, MetricError> {
    let c = precision_counts(g, table, cap)?;
    if c.possible_forms == 0 {
        return Err(MetricError::NoPossibleForms);
    }
    Ok(c.value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats {
    pub avg_d: f64,
    /// Population standard deviation.
    pub div_d: f64,
}

pub fn degree_stats(g: &ConceptualGraph) -> DegreeStats {
    let n = g.node_count();
    if n == 0 {
        return DegreeStats { avg_d: 0.0, div_d: 0.0 };
    }
    let deg = g.degrees();
    let sum: u128 = deg.iter().map(|&d| d as u128).sum();
    let sq: u128 = deg.iter().map(|&d| (d * d) as u128).sum();
    // n^2 * variance, exact
    let spread = n as u128 * sq - sum * sum;
    DegreeStats {
        avg_d: sum as f64 / n as f64,
        div_d: (spread as f64).sqrt() / n as f64,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    /// Agreement over all unordered node pairs, self-pairs excluded.
    #[default]
    Matrix,
    /// Gold edges recovered, over all gold edges.
    EdgeOverlap,
}

impl std::str::FromStr for AccuracyMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "matrix" => Ok(AccuracyMode::Matrix),
            "edges" | "edge_overlap" => Ok(AccuracyMode::EdgeOverlap),
            other => Err(format!("unknown accuracy mode {other:?} (expected matrix or edges)")),
        }
    }
}

pub fn accuracy(g: &ConceptualGraph, gold: &GoldStandard, mode: AccuracyMode) -> Result<f64, MetricError> {
    let n = g.node_count();
    if gold.labels().len() != n {
        return Err(MetricError::NodeMismatch {
            graph: n,
            gold: gold.labels().len(),
        });
    }
    match mode {
        AccuracyMode::Matrix => {
            if n < 2 {
                return Err(MetricError::TooFewNodes);
            }
            let pairs = n * (n - 1) / 2;
            // pairs that disagree are exactly the symmetric difference
            let only_pred = g.edge_keys().filter(|k| !gold.contains(*k)).count();
            let only_gold = gold.edges().iter().filter(|k| !g.contains(**k)).count();
            Ok((pairs - only_pred - only_gold) as f64 / pairs as f64)
        }
        AccuracyMode::EdgeOverlap => {
            if gold.edges().is_empty() {
                return Err(MetricError::EmptyGold);
            }
            let hit = gold.edges().iter().filter(|k| g.contains(**k)).count();
            Ok(hit as f64 / gold.edges().len() as f64)
        }
    }
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricError> {
    if xs.len() != ys.len() {
        return Err(MetricError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricError::TooFewSamples);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub acc_mode: AccuracyMode,
    pub precision_cap: usize,
    /// Leave precision pending for a later [`refresh_precision`].
    pub defer_precision: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            acc_mode: AccuracyMode::Matrix,
            precision_cap: DEFAULT_PRECISION_CAP,
            defer_precision: false,
        }
    }
}

/// Evaluates every metric. Recall and accuracy failures are collected
/// into one error; precision problems are recorded in the report status.
pub fn evaluate(
    g: &ConceptualGraph,
    table: &FormFunctionTable,
    gold: Option<&GoldStandard>,
    opts: &EvalOptions,
) -> Result<MetricsReport, EvalError> {
    let mut errors = Vec::new();
    let adj = g.adjacency();
    let mut unconnected = Vec::new();
    let mut total = 0usize;
    for (i, f) in table.expressed_forms() {
        total += 1;
        if !is_form_connected(&adj, &f.functions) {
            unconnected.push(FormRef::new(i, f));
        }
    }
    if total == 0 {
        errors.push(MetricError::NoForms);
    }
    let acc = match gold {
        Some(gold) => match accuracy(g, gold, opts.acc_mode) {
            Ok(a) => Some(a),
            Err(e) => {
                errors.push(e);
                None
            }
        },
        None => None,
    };
    if !errors.is_empty() {
        return Err(EvalError(errors));
    }
    let connected = total - unconnected.len();
    let deg = degree_stats(g);
    let mut report = MetricsReport {
        size: size(g),
        n_edges: g.edge_count(),
        recall: connected as f64 / total as f64,
        precision: None,
        precision_status: PrecisionStatus::Pending,
        possible_forms: None,
        min_subset_size: MIN_POSSIBLE_FORM,
        avg_d: deg.avg_d,
        div_d: deg.div_d,
        acc,
        acc_mode: gold.map(|_| opts.acc_mode),
        connected_forms: connected,
        total_forms: total,
        unconnected_forms: unconnected,
    };
    if !opts.defer_precision {
        refresh_precision(&mut report, g, table, opts.precision_cap);
    }
    Ok(report)
}

/// Computes precision for a report whose precision is pending.
pub fn refresh_precision(report: &mut MetricsReport, g: &ConceptualGraph, table: &FormFunctionTable, cap: usize) {
    let (value, status, possible) = match precision_counts(g, table, cap) {
        Ok(c) if c.possible_forms == 0 => (None, PrecisionStatus::Undefined, Some(0)),
        Ok(c) => (Some(c.value()), PrecisionStatus::Computed, Some(c.possible_forms)),
        Err(MetricError::OverCapacity { nodes, cap }) => (None, PrecisionStatus::OverCapacity { nodes, cap }, None),
        Err(_) => (None, PrecisionStatus::Undefined, None),
    };
    report.precision = value;
    report.precision_status = status;
    report.possible_forms = possible;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::parse_table;
    use crate::model::{EdgeKey, Provenance};

    fn graph(n: usize, edges: &[(usize, usize, u64)]) -> ConceptualGraph {
        let labels: Vec<String> = (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
        ConceptualGraph::from_edges(
            labels,
            edges
                .iter()
                .map(|&(a, b, w)| (EdgeKey::new(a, b).unwrap(), Weight::from_count(w))),
            Provenance::Edited,
        )
        .unwrap()
    }

    fn gold(n: usize, edges: &[(usize, usize)]) -> GoldStandard {
        let g = graph(n, &[]);
        GoldStandard::new(
            g.labels().to_vec(),
            edges.iter().map(|&(a, b)| EdgeKey::new(a, b).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn size_sums_weights() {
        assert_eq!(
            size(&graph(4, &[(0, 1, 2), (1, 2, 3), (2, 3, 5)])),
            Weight::from_count(10)
        );
        assert_eq!(size(&graph(3, &[])), Weight::zero());
    }

    #[test]
    fn recall_cases() {
        let t = parse_table(b"language,form,A,B,C\nl,f1,1,0,0\nl,f2,0,0,1\n").unwrap();
        assert_eq!(recall(&graph(3, &[]), &t).unwrap(), 1.0);
        let t = parse_table(b"language,form,A,B,C\nl,f1,1,1,0\nl,f2,1,0,1\n").unwrap();
        assert_eq!(recall(&graph(3, &[(0, 1, 1), (1, 2, 1)]), &t).unwrap(), 0.5);
        let t = parse_table(b"language,form,A,B,C\nl,f1,0,0,0\n").unwrap();
        assert_eq!(recall(&graph(3, &[]), &t), Err(MetricError::NoForms));
    }

    #[test]
    fn precision_cases() {
        let t = parse_table(b"language,form,A,B,C\nl,f1,1,1,0\nl,f2,1,1,1\n").unwrap();
        let k3 = graph(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]);
        assert_eq!(precision(&k3, &t, 25).unwrap(), 0.5);

        let t = parse_table(b"language,form,A,B,C\nl,f1,1,1,0\n").unwrap();
        let path = graph(3, &[(0, 1, 1), (1, 2, 1)]);
        assert_eq!(precision(&path, &t, 25).unwrap(), 1.0 / 3.0);

        assert_eq!(precision(&graph(3, &[]), &t, 25), Err(MetricError::NoPossibleForms));
        assert_eq!(
            precision(&path, &t, 2),
            Err(MetricError::OverCapacity { nodes: 3, cap: 2 })
        );
    }

    #[test]
    fn precision_dedups_forms() {
        let t = parse_table(b"language,form,A,B,C\nl1,f1,1,1,0\nl2,f1,1,1,0\nl3,f1,1,0,0\n").unwrap();
        let path = graph(3, &[(0, 1, 1), (1, 2, 1)]);
        let c = precision_counts(&path, &t, 25).unwrap();
        assert_eq!((c.connected_forms, c.possible_forms), (1, 3));
    }

    #[test]
    fn degree_cases() {
        let d = degree_stats(&graph(3, &[(0, 1, 1), (1, 2, 1)]));
        assert!((d.avg_d - 4.0 / 3.0).abs() < 1e-12);
        assert!((d.div_d - (2.0f64 / 9.0).sqrt()).abs() < 1e-12);
        for n in 3..9 {
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1)).collect();
            assert_eq!(degree_stats(&graph(n, &edges)).div_d, 0.0);
        }
    }

    #[test]
    fn accuracy_cases() {
        let g = graph(3, &[(1, 2, 1)]);
        let gs = gold(3, &[(0, 1)]);
        assert!((accuracy(&g, &gs, AccuracyMode::Matrix).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(accuracy(&g, &gs, AccuracyMode::EdgeOverlap).unwrap(), 0.0);
        let same = gold(3, &[(1, 2)]);
        assert_eq!(accuracy(&g, &same, AccuracyMode::Matrix).unwrap(), 1.0);
        assert_eq!(accuracy(&g, &same, AccuracyMode::EdgeOverlap).unwrap(), 1.0);
        assert_eq!(
            accuracy(&g, &gold(3, &[]), AccuracyMode::EdgeOverlap),
            Err(MetricError::EmptyGold)
        );
        assert!(matches!(
            accuracy(&g, &gold(4, &[]), AccuracyMode::Matrix),
            Err(MetricError::NodeMismatch { graph: 3, gold: 4 })
        ));
    }

    #[test]
    fn pearson_cases() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&xs, &[1.0; 4]), Err(MetricError::ZeroVariance));
        assert_eq!(pearson(&[1.0], &[1.0]), Err(MetricError::TooFewSamples));
        assert_eq!(pearson(&xs, &[1.0]), Err(MetricError::LengthMismatch(4, 1)));
    }

    #[test]
    fn evaluate_without_gold() {
        let t = parse_table(b"language,form,A,B,C\nl,f1,1,1,0\nl,f2,1,0,1\nl,f3,0,0,0\n").unwrap();
        let g = graph(3, &[(0, 1, 2), (1, 2, 1)]);
        let r = evaluate(&g, &t, None, &EvalOptions::default()).unwrap();
        assert_eq!(r.acc, None);
        assert_eq!(r.size, Weight::from_count(3));
        assert_eq!(r.n_edges, 2);
        assert_eq!(r.recall, 0.5);
        assert_eq!(r.total_forms, 2);
        assert_eq!(r.unconnected_forms.len(), 1);
        assert_eq!(r.unconnected_forms[0].form, "f2");
        assert_eq!(r.precision_status, PrecisionStatus::Computed);
        assert_eq!(r.precision, Some(1.0 / 3.0));
    }

    #[test]
    fn evaluate_collects_errors() {
        let t = parse_table(b"language,form,A,B\nl,f1,0,0\n").unwrap();
        let g = graph(2, &[]);
        let err = evaluate(
            &g,
            &t,
            Some(&gold(2, &[])),
            &EvalOptions {
                acc_mode: AccuracyMode::EdgeOverlap,
                ..EvalOptions::default()
            },
        )
        .unwrap_err();
        assert_eq!(err.0, vec![MetricError::NoForms, MetricError::EmptyGold]);
    }

    #[test]
    fn deferred_and_capped_precision() {
        let t = parse_table(b"language,form,A,B,C\nl,f1,1,1,0\n").unwrap();
        let g = graph(3, &[(0, 1, 1)]);
        let opts = EvalOptions {
            defer_precision: true,
            ..EvalOptions::default()
        };
        let mut r = evaluate(&g, &t, None, &opts).unwrap();
        assert_eq!(r.precision_status, PrecisionStatus::Pending);
        assert_eq!(r.precision, None);
        refresh_precision(&mut r, &g, &t, 25);
        assert_eq!(r.precision, Some(1.0));
        refresh_precision(&mut r, &g, &t, 2);
        assert_eq!(r.precision_status, PrecisionStatus::OverCapacity { nodes: 3, cap: 2 });
        assert_eq!(r.precision, None);
    }
}
