use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::builder::build_g0;
use crate::error::{MetricError, PipelineError, Stage};
use crate::eval::{accuracy, degree_stats, evaluate, pearson, AccuracyMode, EvalOptions};
use crate::model::{FormFunctionTable, GoldStandard};
use crate::mst::{enumerate_mst, select_top_m, CandidateSet, DEFAULT_M};

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub m: usize,
    /// Runs per K; the median time is reported.
    pub repeats: usize,
    pub eval: EvalOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            m: DEFAULT_M,
            repeats: 3,
            eval: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub time_s: f64,
    /// Div_D of the top-ranked candidate.
    pub div_d: f64,
    /// Accuracy of the top-ranked candidate, when a gold map is given.
    pub acc: Option<f64>,
    pub candidates: usize,
    pub truncated: bool,
}

/// One K of a sweep and how it went.
pub type SweepOutcome = (usize, Result<SweepRow, PipelineError>);

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("k grid must be non-empty and sorted ascending")]
    UnsortedGrid,
    #[error(transparent)]
    Build(PipelineError),
    #[error("k={k}: {source}")]
    Run { k: usize, source: PipelineError },
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Runs enumeration, selection and evaluation for every K, keeping each
/// K's outcome separately.
pub fn k_sweep_each(
    table: &FormFunctionTable,
    k_grid: &[usize],
    gold: Option<&GoldStandard>,
    opts: &SweepOptions,
) -> Result<Vec<SweepOutcome>, SweepError> {
    if k_grid.is_empty() || k_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(SweepError::UnsortedGrid);
    }
    let g0 = build_g0(table).map_err(|e| SweepError::Build(PipelineError::new(Stage::Build, e)))?;
    let repeats = opts.repeats.max(1);
    let rows = k_grid
        .iter()
        .map(|&k| {
            let run = || -> Result<SweepRow, PipelineError> {
                let mut times = Vec::with_capacity(repeats);
                let mut last = None;
                for _ in 0..repeats {
                    let start = Instant::now();
                    let cands = enumerate_mst(&g0, k).map_err(|e| PipelineError::new(Stage::Enumerate, e))?;
                    let top = select_top_m(&cands, opts.m);
                    let reports = top
                        .iter()
                        .map(|g| evaluate(g, table, gold, &opts.eval))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| PipelineError::new(Stage::Evaluate, e))?;
                    times.push(start.elapsed().as_secs_f64());
                    last = Some((cands.len(), cands.truncated, reports));
                }
                let (candidates, truncated, reports) = last.expect("at least one repeat");
                let best = reports.first();
                Ok(SweepRow {
                    k,
                    time_s: median(times),
                    div_d: best.map_or(f64::NAN, |r| r.div_d),
                    acc: best.and_then(|r| r.acc),
                    candidates,
                    truncated,
                })
            };
            (k, run())
        })
        .collect();
    Ok(rows)
}

/// Like [`k_sweep_each`] but fails on the first K that fails.
pub fn k_sweep(
    table: &FormFunctionTable,
    k_grid: &[usize],
    gold: Option<&GoldStandard>,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>, SweepError> {
    k_sweep_each(table, k_grid, gold, opts)?
        .into_iter()
        .map(|(k, r)| r.map_err(|source| SweepError::Run { k, source }))
        .collect()
}

/// CSV with columns `k,time_s,div_d,acc,candidates,truncated,error`. `acc`
/// is empty without a gold map; a failed K keeps only `k` and `error`.
pub fn sweep_csv(outcomes: &[SweepOutcome]) -> String {
    let mut out = String::from("k,time_s,div_d,acc,candidates,truncated,error\n");
    for (k, outcome) in outcomes {
        match outcome {
            Ok(r) => {
                let acc = r.acc.map(|a| a.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{},{:.6},{},{},{},{},",
                    r.k, r.time_s, r.div_d, acc, r.candidates, r.truncated
                )
                .unwrap();
            }
            Err(e) => {
                let msg = e.to_string().replace('"', "\"\"");
                writeln!(out, "{k},,,,,,\"{msg}\"").unwrap();
            }
        }
    }
    out
}

/// Pearson correlation between accuracy and Div_D over all candidates.
pub fn candidate_correlation(
    cands: &CandidateSet,
    gold: &GoldStandard,
    mode: AccuracyMode,
) -> Result<f64, MetricError> {
    let mut accs = Vec::with_capacity(cands.len());
    let mut divs = Vec::with_capacity(cands.len());
    for t in &cands.trees {
        accs.push(accuracy(t, gold, mode)?);
        divs.push(degree_stats(t).div_d);
    }
    pearson(&accs, &divs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::parse_table;

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn single_k_single_row() {
        let t = parse_table(b"language,form,A,B,C\nl,f1,1,1,0\nl,f2,0,1,1\n").unwrap();
        let rows = k_sweep_each(&t, &[1], None, &SweepOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].1.as_ref().unwrap().candidates, 1);
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("k,time_s,div_d,acc,candidates,truncated,error\n1,"));
        assert!(csv.ends_with(",1,false,\n"));
    }

    #[test]
    fn unsorted_grid_rejected() {
        let t = parse_table(b"language,form,A,B\nl,f1,1,1\n").unwrap();
        assert!(matches!(
            k_sweep(&t, &[10, 1], None, &SweepOptions::default()),
            Err(SweepError::UnsortedGrid)
        ));
    }
}
