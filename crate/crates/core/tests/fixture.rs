//! Expected values below were produced by `fixtures/oracle.py`, a
//! standalone brute-force implementation, before the library existed.

use semmap_core::merge::merge_traced;
use semmap_core::{run_pipeline, AccuracyMode, EvalOptions, MergeOrder, PipelineConfig, PrecisionStatus, Weight};

const TABLE: &[u8] = include_bytes!("fixtures/small_table.csv");
const GOLD: &[u8] = include_bytes!("fixtures/small_gold.json");

fn edges(g: &semmap_core::ConceptualGraph) -> Vec<String> {
    g.edge_keys()
        .map(|k| format!("{}{}", g.label(k.lo()), g.label(k.hi())))
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn co_occurrence_weights() {
    let b = run_pipeline(TABLE, Some(GOLD), &PipelineConfig::default()).unwrap();
    let got: Vec<(String, Weight)> = b
        .g0()
        .edges()
        .filter(|(_, w)| !w.is_zero())
        .map(|(k, w)| (format!("{}{}", b.g0().label(k.lo()), b.g0().label(k.hi())), w))
        .collect();
    let expected = [
        ("AB", 2),
        ("AC", 1),
        ("AD", 1),
        ("BC", 3),
        ("BD", 1),
        ("CD", 2),
        ("CE", 1),
        ("DE", 1),
        ("EF", 1),
    ];
    assert_eq!(got.len(), expected.len());
    for ((l, w), (el, ew)) in got.iter().zip(expected) {
        assert_eq!(l, el);
        assert_eq!(*w, Weight::from_count(ew));
    }
    assert_eq!(b.max_weight(), Weight::from_count(9));
    assert_eq!(b.enumerated(), 2);
}

#[test]
fn unmerged_candidates() {
    let b = run_pipeline(TABLE, Some(GOLD), &PipelineConfig::default()).unwrap();
    let c = b.candidates();
    assert_eq!(c.len(), 2);
    assert_eq!(edges(c[0].graph()), ["AB", "BC", "CD", "DE", "EF"]);
    assert_eq!(edges(c[1].graph()), ["AB", "BC", "CD", "CE", "EF"]);

    let r = c[0].report();
    assert_eq!(r.size, Weight::from_count(9));
    assert_eq!(r.n_edges, 5);
    assert!(close(r.recall, 4.0 / 5.0));
    assert_eq!(r.possible_forms, Some(15));
    assert!(close(r.precision.unwrap(), 7.0 / 15.0));
    assert!(close(r.avg_d, 5.0 / 3.0));
    assert!(close(r.div_d, 0.4714045207910317));
    assert!(close(r.acc.unwrap(), 14.0 / 15.0));
    let rows: Vec<usize> = r.unconnected_forms.iter().map(|f| f.instance).collect();
    assert_eq!(rows, [5, 10]);

    let r = c[1].report();
    assert!(close(r.precision.unwrap(), 7.0 / 19.0));
    assert!(close(r.div_d, 0.7453559924999299));
    assert!(close(r.acc.unwrap(), 4.0 / 5.0));
    let rows: Vec<usize> = r.unconnected_forms.iter().map(|f| f.instance).collect();
    assert_eq!(rows, [4, 5]);
}

#[test]
fn edge_overlap_accuracy() {
    let cfg = PipelineConfig {
        eval: EvalOptions {
            acc_mode: AccuracyMode::EdgeOverlap,
            ..EvalOptions::default()
        },
        ..PipelineConfig::default()
    };
    let b = run_pipeline(TABLE, Some(GOLD), &cfg).unwrap();
    assert!(close(b.candidates()[0].report().acc.unwrap(), 5.0 / 6.0));
    assert!(close(b.candidates()[1].report().acc.unwrap(), 2.0 / 3.0));
}

#[test]
fn merged_candidates() {
    let cfg = PipelineConfig {
        merge: true,
        ..PipelineConfig::default()
    };
    let b = run_pipeline(TABLE, Some(GOLD), &cfg).unwrap();
    let unmerged = run_pipeline(TABLE, Some(GOLD), &PipelineConfig::default()).unwrap();
    let added = [["AD", "CE"], ["AD", "DE"]];
    for (i, c) in b.candidates().iter().enumerate() {
        let (_, steps) = merge_traced(
            unmerged.candidates()[i].graph(),
            b.table(),
            b.g0(),
            MergeOrder::Descending,
        );
        let names: Vec<String> = steps
            .iter()
            .map(|s| {
                format!(
                    "{}{}",
                    b.g0().label(s.candidate.edge.lo()),
                    b.g0().label(s.candidate.edge.hi())
                )
            })
            .collect();
        assert_eq!(names, added[i]);

        let r = c.report();
        assert_eq!(r.size, Weight::from_count(11));
        assert_eq!(r.n_edges, 7);
        assert_eq!(r.recall, 1.0);
        assert!(r.unconnected_forms.is_empty());
        assert_eq!(r.possible_forms, Some(30));
        assert_eq!(r.precision_status, PrecisionStatus::Computed);
        assert!(close(r.precision.unwrap(), 3.0 / 10.0));
        assert!(close(r.avg_d, 7.0 / 3.0));
        assert!(close(r.div_d, 0.7453559924999299));
        assert!(close(r.acc.unwrap(), 14.0 / 15.0));
    }
}
