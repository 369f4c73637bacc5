//! Incremental connectivity enhancement: adds edges to a graph until every
//! form's function set induces a connected subgraph.

use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSets;
use crate::model::{
    Adjacency, ConceptualGraph, EdgeKey, FormFunctionTable, FormInstance, FunctionId, Provenance, Weight,
};

/// Connected components of the subgraph induced by `functions`, each
/// component sorted, components ordered by their smallest member.
pub fn form_components(adj: &Adjacency, functions: &[FunctionId]) -> Vec<Vec<FunctionId>> {
    let mut dsu = DisjointSets::new(functions.len());
    for i in 0..functions.len() {
        for j in i + 1..functions.len() {
            if adj.has(functions[i].index(), functions[j].index()) {
                dsu.union(i, j);
            }
        }
    }
    dsu.groups()
        .into_iter()
        .map(|grp| grp.into_iter().map(|i| functions[i]).collect())
        .collect()
}

/// Whether `functions` induce a connected subgraph. Empty and singleton
/// sets are connected.
pub fn is_form_connected(adj: &Adjacency, functions: &[FunctionId]) -> bool {
    if functions.len() <= 1 {
        return true;
    }
    let mut dsu = DisjointSets::new(functions.len());
    let mut merged = 0;
    for i in 0..functions.len() {
        for j in i + 1..functions.len() {
            if adj.has(functions[i].index(), functions[j].index()) && dsu.union(i, j) {
                merged += 1;
                if merged + 1 == functions.len() {
                    return true;
                }
            }
        }
    }
    false
}

/// Row indices of forms whose induced subgraph in `g` is disconnected.
pub fn unconnected_form_indices(g: &ConceptualGraph, table: &FormFunctionTable) -> Vec<usize> {
    let adj = g.adjacency();
    table
        .expressed_forms()
        .filter(|(_, f)| !is_form_connected(&adj, &f.functions))
        .map(|(i, _)| i)
        .collect()
}

pub fn unconnected_forms<'t>(g: &ConceptualGraph, table: &'t FormFunctionTable) -> Vec<&'t FormInstance> {
    unconnected_form_indices(g, table)
        .into_iter()
        .map(|i| &table.instances()[i])
        .collect()
}

/// Direction in which candidate edges are ranked by `count + weight`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeOrder {
    #[default]
    Descending,
    Ascending,
}

impl std::str::FromStr for MergeOrder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "desc" | "descending" => Ok(MergeOrder::Descending),
            "asc" | "ascending" => Ok(MergeOrder::Ascending),
            other => Err(format!("unknown merge order {other:?} (expected desc or asc)")),
        }
    }
}

/// An edge that would bridge components of at least one unconnected form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeCandidate {
    pub edge: EdgeKey,
    /// Number of unconnected forms the edge bridges.
    pub count: usize,
    /// Weight of the edge in the co-occurrence graph.
    pub weight: Weight,
}

impl MergeCandidate {
    fn score(&self) -> Weight {
        self.weight + Weight::from_count(self.count as u64)
    }
}

/// One edge addition made by [`merge_traced`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeStep {
    pub candidate: MergeCandidate,
    pub unconnected_before: usize,
    pub unconnected_after: usize,
}

/// A disconnected form with its induced components tracked incrementally.
struct OpenForm<'t> {
    functions: &'t [FunctionId],
    dsu: DisjointSets,
}

impl<'t> OpenForm<'t> {
    fn new(functions: &'t [FunctionId], adj: &Adjacency) -> Self {
        let mut dsu = DisjointSets::new(functions.len());
        for i in 0..functions.len() {
            for j in i + 1..functions.len() {
                if adj.has(functions[i].index(), functions[j].index()) {
                    dsu.union(i, j);
                }
            }
        }
        OpenForm { functions, dsu }
    }

    fn connected(&self) -> bool {
        self.dsu.set_count() <= 1
    }

    fn add_edge(&mut self, key: EdgeKey) {
        let (Ok(a), Ok(b)) = (
            self.functions.binary_search(&key.lo()),
            self.functions.binary_search(&key.hi()),
        ) else {
            return;
        };
        self.dsu.union(a, b);
    }

    fn bridges(&mut self, out: &mut Vec<EdgeKey>) {
        let roots: Vec<usize> = (0..self.functions.len()).map(|i| self.dsu.find(i)).collect();
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                if roots[i] != roots[j] {
                    out.push(EdgeKey::new(self.functions[i], self.functions[j]).expect("distinct functions"));
                }
            }
        }
    }
}

fn rank(open: &mut [OpenForm<'_>], g0: &ConceptualGraph, order: MergeOrder) -> Vec<MergeCandidate> {
    let mut pairs = Vec::new();
    for f in open.iter_mut() {
        f.bridges(&mut pairs);
    }
    pairs.sort_unstable();
    let mut scored: Vec<(Weight, MergeCandidate)> = pairs
        .chunk_by(|a, b| a == b)
        .map(|run| {
            let c = MergeCandidate {
                edge: run[0],
                count: run.len(),
                weight: g0.weight(run[0]).unwrap_or_default(),
            };
            (c.score(), c)
        })
        .collect();
    scored.sort_by(|(sx, x), (sy, y)| {
        let by_score = match order {
            MergeOrder::Descending => sy.cmp(sx),
            MergeOrder::Ascending => sx.cmp(sy),
        };
        by_score.then(x.edge.cmp(&y.edge))
    });
    scored.into_iter().map(|(_, c)| c).collect()
}

/// Aggregates bridging edges over the unconnected forms, ranked.
pub fn merge_candidates(
    adj: &Adjacency,
    table: &FormFunctionTable,
    unconnected: &[usize],
    g0: &ConceptualGraph,
    order: MergeOrder,
) -> Vec<MergeCandidate> {
    let mut open: Vec<OpenForm<'_>> = unconnected
        .iter()
        .map(|&i| OpenForm::new(&table.instances()[i].functions, adj))
        .collect();
    rank(&mut open, g0, order)
}

/// Adds edges (weighted from `g0`) until every expressed form is connected.
pub fn merge(g: &ConceptualGraph, table: &FormFunctionTable, g0: &ConceptualGraph) -> ConceptualGraph {
    merge_traced(g, table, g0, MergeOrder::Descending).0
}

pub fn merge_with_order(
    g: &ConceptualGraph,
    table: &FormFunctionTable,
    g0: &ConceptualGraph,
    order: MergeOrder,
) -> ConceptualGraph {
    merge_traced(g, table, g0, order).0
}

/// Like [`merge`], also returning every edge added in order.
///
/// Each round ranks the edges bridging the current unconnected forms and
/// adds them one by one until the number of unconnected forms drops; the
/// ranking is then rebuilt from scratch.
pub fn merge_traced(
    g: &ConceptualGraph,
    table: &FormFunctionTable,
    g0: &ConceptualGraph,
    order: MergeOrder,
) -> (ConceptualGraph, Vec<MergeStep>) {
    let mut out = g.clone();
    out.set_provenance(Provenance::Merged);
    let adj = out.adjacency();
    let mut open: Vec<OpenForm<'_>> = table
        .expressed_forms()
        .map(|(_, f)| OpenForm::new(&f.functions, &adj))
        .filter(|f| !f.connected())
        .collect();
    let mut steps = Vec::new();

    while !open.is_empty() {
        for cand in rank(&mut open, g0, order) {
            if out.contains(cand.edge) {
                continue;
            }
            out.insert_edge(cand.edge, cand.weight).expect("edge checked absent");
            let before = open.len();
            for f in open.iter_mut() {
                f.add_edge(cand.edge);
            }
            open.retain(|f| !f.connected());
            steps.push(MergeStep {
                candidate: cand,
                unconnected_before: before,
                unconnected_after: open.len(),
            });
            if open.len() < before {
                break;
            }
        }
    }
    (out, steps)
}
