//! End-to-end flow from a raw table to evaluated candidates, and the
//! editable session state built on top of it.

use std::fs;
use std::io;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::builder::build_g0;
use crate::error::{EditError, EvalError, PipelineError, Stage};
use crate::eval::{evaluate, refresh_precision, EvalOptions, MetricsReport};
use crate::formats::{graph_to_dot, graph_to_json, parse_gold, parse_table, write_table, GraphFormat};
use crate::merge::{form_components, merge_with_order, MergeOrder};
use crate::model::{ConceptualGraph, EdgeKey, FormFunctionTable, FunctionId, GoldStandard, Provenance, Weight};
use crate::mst::{enumerate_mst, select_top_m, DEFAULT_K, DEFAULT_M};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub k: usize,
    pub m: usize,
    pub merge: bool,
    pub merge_order: MergeOrder,
    pub eval: EvalOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: DEFAULT_K,
            m: DEFAULT_M,
            merge: false,
            merge_order: MergeOrder::Descending,
            eval: EvalOptions::default(),
        }
    }
}

/// A user edit on one candidate graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EditAction {
    /// Adds an absent edge; without a weight the co-occurrence weight is used.
    AddEdge {
        source: u32,
        target: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weight: Option<Weight>,
    },
    DeleteEdge {
        source: u32,
        target: u32,
    },
    SetWeight {
        source: u32,
        target: u32,
        weight: Weight,
    },
    /// Adds edges until every form is connected.
    MergeAll,
}

#[derive(Debug, Clone)]
enum Inverse {
    Remove(EdgeKey),
    Restore(EdgeKey, Weight),
    Reweight(EdgeKey, Weight),
    Snapshot(ConceptualGraph),
}

#[derive(Debug, Clone)]
struct HistoryEntry {
    action: EditAction,
    inverse: Inverse,
    provenance: Provenance,
}

/// One candidate under edit.
#[derive(Debug, Clone)]
pub struct CandidateState {
    initial: ConceptualGraph,
    graph: ConceptualGraph,
    report: MetricsReport,
    history: Vec<HistoryEntry>,
}

impl CandidateState {
    pub fn graph(&self) -> &ConceptualGraph {
        &self.graph
    }

    pub fn initial(&self) -> &ConceptualGraph {
        &self.initial
    }

    pub fn report(&self) -> &MetricsReport {
        &self.report
    }

    pub fn history(&self) -> impl Iterator<Item = &EditAction> {
        self.history.iter().map(|h| &h.action)
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }
}

/// Wall time per stage of [`run_pipeline`]. Never written to artifacts.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub parse: Duration,
    pub build: Duration,
    pub enumerate: Duration,
    pub merge: Duration,
    pub evaluate: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.parse + self.build + self.enumerate + self.merge + self.evaluate
    }
}

/// Everything a session needs: the table, the co-occurrence graph and the
/// selected candidates with their edit histories.
#[derive(Debug, Clone)]
pub struct SessionBundle {
    table: FormFunctionTable,
    g0: ConceptualGraph,
    gold: Option<GoldStandard>,
    candidates: Vec<CandidateState>,
    active: usize,
    config: PipelineConfig,
    enumerated: usize,
    truncated: bool,
    max_weight: Weight,
    timings: StageTimings,
}

/// Result of an undo request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UndoOutcome {
    Reverted(EditAction),
    NothingToUndo,
}

/// The subgraph a form induces in one candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormView {
    pub instance: usize,
    pub language: String,
    pub form: String,
    pub nodes: Vec<FunctionId>,
    pub edges: Vec<(FunctionId, FunctionId)>,
    pub connected: bool,
    pub components: Vec<Vec<FunctionId>>,
}

/// Parses the inputs and runs build, enumeration, optional merge and
/// evaluation.
pub fn run_pipeline(
    raw_table: &[u8],
    gold: Option<&[u8]>,
    config: &PipelineConfig,
) -> Result<SessionBundle, PipelineError> {
    let start = Instant::now();
    let table = parse_table(raw_table).map_err(|e| PipelineError::new(Stage::Parse, e))?;
    let gold = gold
        .map(|raw| parse_gold(raw, &table))
        .transpose()
        .map_err(|e| PipelineError::new(Stage::Gold, e))?;
    let parse = start.elapsed();
    let mut bundle = run_pipeline_on(table, gold, config)?;
    bundle.timings.parse = parse;
    Ok(bundle)
}

/// [`run_pipeline`] on an already parsed table.
pub fn run_pipeline_on(
    table: FormFunctionTable,
    gold: Option<GoldStandard>,
    config: &PipelineConfig,
) -> Result<SessionBundle, PipelineError> {
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let g0 = build_g0(&table).map_err(|e| PipelineError::new(Stage::Build, e))?;
    timings.build = t.elapsed();

    let t = Instant::now();
    let cands = enumerate_mst(&g0, config.k).map_err(|e| PipelineError::new(Stage::Enumerate, e))?;
    let mut graphs = select_top_m(&cands, config.m);
    timings.enumerate = t.elapsed();

    if config.merge {
        let t = Instant::now();
        graphs = graphs
            .iter()
            .map(|g| merge_with_order(g, &table, &g0, config.merge_order))
            .collect();
        timings.merge = t.elapsed();
    }

    let t = Instant::now();
    let mut candidates = Vec::with_capacity(graphs.len());
    for g in graphs {
        let report =
            evaluate(&g, &table, gold.as_ref(), &config.eval).map_err(|e| PipelineError::new(Stage::Evaluate, e))?;
        candidates.push(CandidateState {
            initial: g.clone(),
            graph: g,
            report,
            history: Vec::new(),
        });
    }
    timings.evaluate = t.elapsed();

    Ok(SessionBundle {
        table,
        g0,
        gold,
        candidates,
        active: 0,
        config: *config,
        enumerated: cands.len(),
        truncated: cands.truncated,
        max_weight: cands.max_weight,
        timings,
    })
}

fn edge_label(g: &ConceptualGraph, key: EdgeKey) -> String {
    format!("{}-{}", g.label(key.lo()), g.label(key.hi()))
}

fn resolve_edge(g: &ConceptualGraph, source: u32, target: u32) -> Result<EdgeKey, EditError> {
    let n = g.node_count() as u32;
    for id in [source, target] {
        if id >= n {
            return Err(EditError::UnknownNode(id));
        }
    }
    EdgeKey::new(FunctionId(source), FunctionId(target)).ok_or(EditError::SelfLoop)
}

/// Applies `action` to `graph` in place and returns how to revert it.
/// On error the graph is untouched.
fn apply_action(
    graph: &mut ConceptualGraph,
    action: &EditAction,
    table: &FormFunctionTable,
    g0: &ConceptualGraph,
    order: MergeOrder,
) -> Result<Inverse, EditError> {
    let inverse = match *action {
        EditAction::AddEdge { source, target, weight } => {
            let key = resolve_edge(graph, source, target)?;
            if graph.contains(key) {
                return Err(EditError::EdgeExists(edge_label(graph, key)));
            }
            let w = weight.or_else(|| g0.weight(key)).unwrap_or_default();
            graph.insert_edge(key, w)?;
            Inverse::Remove(key)
        }
        EditAction::DeleteEdge { source, target } => {
            let key = resolve_edge(graph, source, target)?;
            let w = graph
                .remove_edge(key)
                .ok_or_else(|| EditError::NoSuchEdge(edge_label(graph, key)))?;
            Inverse::Restore(key, w)
        }
        EditAction::SetWeight { source, target, weight } => {
            let key = resolve_edge(graph, source, target)?;
            let old = graph
                .set_weight(key, weight)
                .ok_or_else(|| EditError::NoSuchEdge(edge_label(graph, key)))?;
            Inverse::Reweight(key, old)
        }
        EditAction::MergeAll => {
            let snapshot = graph.clone();
            *graph = merge_with_order(graph, table, g0, order);
            Inverse::Snapshot(snapshot)
        }
    };
    graph.set_provenance(match action {
        EditAction::MergeAll => Provenance::Merged,
        _ => Provenance::Edited,
    });
    Ok(inverse)
}

fn revert(graph: &mut ConceptualGraph, entry: HistoryEntry) {
    match entry.inverse {
        Inverse::Remove(key) => {
            graph.remove_edge(key);
        }
        Inverse::Restore(key, w) => {
            graph
                .insert_edge(key, w)
                .expect("restored edge was removed by the edit");
        }
        Inverse::Reweight(key, w) => {
            graph.set_weight(key, w);
        }
        Inverse::Snapshot(g) => *graph = g,
    }
    graph.set_provenance(entry.provenance);
}

impl SessionBundle {
    pub fn table(&self) -> &FormFunctionTable {
        &self.table
    }

    pub fn g0(&self) -> &ConceptualGraph {
        &self.g0
    }

    pub fn gold(&self) -> Option<&GoldStandard> {
        self.gold.as_ref()
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn candidates(&self) -> &[CandidateState] {
        &self.candidates
    }

    pub fn candidate(&self, index: usize) -> Result<&CandidateState, EditError> {
        self.candidates.get(index).ok_or(EditError::NoSuchCandidate(index))
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn set_active(&mut self, index: usize) -> Result<(), EditError> {
        self.candidate(index)?;
        self.active = index;
        Ok(())
    }

    /// Number of trees enumerated before selection.
    pub fn enumerated(&self) -> usize {
        self.enumerated
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn max_weight(&self) -> Weight {
        self.max_weight
    }

    pub fn timings(&self) -> &StageTimings {
        &self.timings
    }

    fn live_options(&self) -> EvalOptions {
        EvalOptions {
            defer_precision: true,
            ..self.config.eval
        }
    }

    /// Applies an edit to the active candidate.
    pub fn apply_edit(&mut self, action: EditAction) -> Result<&MetricsReport, EditError> {
        self.apply_edit_to(self.active, action)
    }

    /// Applies an edit to candidate `index` and refreshes its report with
    /// precision left pending. A rejected edit leaves the bundle unchanged.
    pub fn apply_edit_to(&mut self, index: usize, action: EditAction) -> Result<&MetricsReport, EditError> {
        self.candidate(index)?;
        let opts = self.live_options();
        let order = self.config.merge_order;
        let cand = &mut self.candidates[index];
        let mut graph = cand.graph.clone();
        let provenance = graph.provenance();
        let inverse = apply_action(&mut graph, &action, &self.table, &self.g0, order)?;
        let report = evaluate(&graph, &self.table, self.gold.as_ref(), &opts).map_err(EditError::from)?;
        cand.graph = graph;
        cand.report = report;
        cand.history.push(HistoryEntry {
            action,
            inverse,
            provenance,
        });
        Ok(&cand.report)
    }

    pub fn undo(&mut self) -> Result<UndoOutcome, EditError> {
        self.undo_on(self.active)
    }

    /// Reverts the last edit of candidate `index`.
    pub fn undo_on(&mut self, index: usize) -> Result<UndoOutcome, EditError> {
        self.candidate(index)?;
        let opts = self.live_options();
        let cand = &mut self.candidates[index];
        let Some(entry) = cand.history.pop() else {
            return Ok(UndoOutcome::NothingToUndo);
        };
        let action = entry.action.clone();
        revert(&mut cand.graph, entry);
        cand.report = evaluate(&cand.graph, &self.table, self.gold.as_ref(), &opts)?;
        Ok(UndoOutcome::Reverted(action))
    }

    /// Fills in a pending precision for candidate `index`.
    pub fn refresh_precision(&mut self, index: usize) -> Result<&MetricsReport, EditError> {
        self.candidate(index)?;
        let cap = self.config.eval.precision_cap;
        let cand = &mut self.candidates[index];
        refresh_precision(&mut cand.report, &cand.graph, &self.table, cap);
        Ok(&cand.report)
    }

    /// Rebuilds candidate `index` by replaying its history on the initial
    /// graph.
    pub fn replay(&self, index: usize) -> Result<ConceptualGraph, EditError> {
        let cand = self.candidate(index)?;
        let mut g = cand.initial.clone();
        for h in &cand.history {
            apply_action(&mut g, &h.action, &self.table, &self.g0, self.config.merge_order)?;
        }
        Ok(g)
    }

    /// The induced subgraph of table row `instance` in candidate `index`.
    pub fn form_view(&self, index: usize, instance: usize) -> Option<FormView> {
        let cand = self.candidates.get(index)?;
        let inst = self.table.instances().get(instance)?;
        let g = &cand.graph;
        let fs = &inst.functions;
        let mut edges = Vec::new();
        for (i, a) in fs.iter().enumerate() {
            for b in &fs[i + 1..] {
                if g.contains(EdgeKey::new(*a, *b).expect("distinct")) {
                    edges.push((*a, *b));
                }
            }
        }
        let components = form_components(&g.adjacency(), fs);
        Some(FormView {
            instance,
            language: inst.language.clone(),
            form: inst.form.clone(),
            nodes: fs.clone(),
            edges,
            connected: components.len() <= 1,
            components,
        })
    }

    /// Report with precision computed, for persistence.
    pub fn final_report(&self, index: usize) -> Result<MetricsReport, EditError> {
        let cand = self.candidate(index)?;
        let mut report = cand.report.clone();
        if report.precision_status == crate::eval::PrecisionStatus::Pending {
            refresh_precision(&mut report, &cand.graph, &self.table, self.config.eval.precision_cap);
        }
        Ok(report)
    }

    /// Writes `table.csv`, `g0.json` and per candidate `candidate_<i>.json`,
    /// `report_<i>.json` and `history_<i>.json`. DOT requests add
    /// `candidate_<i>.dot` files.
    pub fn write_bundle(&self, dir: &Path, format: GraphFormat) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("table.csv"), write_table(&self.table))?;
        fs::write(dir.join("g0.json"), graph_to_json(&self.g0))?;
        for (i, cand) in self.candidates.iter().enumerate() {
            fs::write(dir.join(format!("candidate_{i}.json")), graph_to_json(&cand.graph))?;
            if format == GraphFormat::Dot {
                fs::write(dir.join(format!("candidate_{i}.dot")), graph_to_dot(&cand.graph))?;
            }
            let report = self.final_report(i).expect("index in range");
            fs::write(dir.join(format!("report_{i}.json")), report.to_json())?;
            let history: Vec<&EditAction> = cand.history().collect();
            fs::write(
                dir.join(format!("history_{i}.json")),
                serde_json::to_string_pretty(&history).expect("actions serialize"),
            )?;
        }
        Ok(())
    }
}

impl From<EvalError> for EditError {
    fn from(e: EvalError) -> Self {
        EditError::Evaluation(e.to_string())
    }
}
