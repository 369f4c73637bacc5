//! Maximum spanning tree enumeration and Div_D ranking.
//!
//! Every maximum spanning tree picks, at each weight level (heaviest
//! first), a spanning forest of the multigraph formed by that level's
//! edges once all heavier levels have been contracted. The contraction
//! after a level does not depend on which forest was picked, so the full
//! set of maximum spanning trees is the Cartesian product of the per-level
//! forest sets. Forests are enumerated by include/exclude branching over
//! the level's edges in canonical order; an exclusion is only explored
//! when the remaining edges can still complete a forest of full rank, so
//! every branch yields at least one tree.

use crate::dsu::DisjointSets;
use crate::error::MstError;
use crate::model::{ConceptualGraph, EdgeKey, Provenance, Weight};

pub const DEFAULT_K: usize = 10_000;
pub const DEFAULT_M: usize = 3;

/// Top-K maximum spanning trees of a graph, sorted by Div_D.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub trees: Vec<ConceptualGraph>,
    pub k_requested: usize,
    /// More than `k_requested` maximum spanning trees exist.
    pub truncated: bool,
    pub max_weight: Weight,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

fn spans(n: usize, edges: &[(EdgeKey, Weight)]) -> bool {
    let mut dsu = DisjointSets::new(n);
    for (k, _) in edges {
        let (a, b) = k.endpoints();
        dsu.union(a, b);
    }
    dsu.set_count() <= 1
}

/// Edges trees are drawn from: the positive-weight edges when they connect
/// every node, otherwise all edges.
fn edge_pool(g: &ConceptualGraph) -> Result<Vec<(EdgeKey, Weight)>, MstError> {
    let n = g.node_count();
    let positive: Vec<_> = g.edges().filter(|(_, w)| !w.is_zero()).collect();
    if spans(n, &positive) {
        return Ok(positive);
    }
    let all: Vec<_> = g.edges().collect();
    if spans(n, &all) {
        return Ok(all);
    }
    let mut dsu = DisjointSets::new(n);
    for (k, _) in &all {
        let (a, b) = k.endpoints();
        dsu.union(a, b);
    }
    let components = dsu
        .groups()
        .into_iter()
        .map(|grp| grp.into_iter().map(|v| g.labels()[v].clone()).collect())
        .collect();
    Err(MstError::Disconnected(components))
}

fn by_weight_desc(pool: &mut [(EdgeKey, Weight)]) {
    pool.sort_by(|(ka, wa), (kb, wb)| wb.cmp(wa).then(ka.cmp(kb)));
}

/// Total weight of a maximum spanning tree (Kruskal).
pub fn max_spanning_weight(g: &ConceptualGraph) -> Result<Weight, MstError> {
    let mut pool = edge_pool(g)?;
    by_weight_desc(&mut pool);
    let mut dsu = DisjointSets::new(g.node_count());
    Ok(pool
        .into_iter()
        .filter(|(k, _)| {
            let (a, b) = k.endpoints();
            dsu.union(a, b)
        })
        .map(|(_, w)| w)
        .sum())
}

/// Edge of a contracted level multigraph: endpoints are component
/// representatives, the key is the original edge.
type LevelEdge = (usize, usize, EdgeKey);

/// Spanning forests of one weight level.
type Levels = Vec<Vec<EdgeKey>>;

fn forest_rank(dsu: &DisjointSets, edges: &[LevelEdge]) -> usize {
    let mut d = dsu.clone();
    edges.iter().filter(|(a, b, _)| d.union(*a, *b)).count()
}

/// All maximal spanning forests of a multigraph, at most `limit` of them,
/// in include-first order over `edges`.
fn spanning_forests(n: usize, edges: &[LevelEdge], limit: usize) -> Vec<Vec<EdgeKey>> {
    let base = DisjointSets::new(n);
    let rank = forest_rank(&base, edges);
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(rank);
    extend_forest(edges, 0, rank, &base, &mut chosen, &mut out, limit);
    out
}

fn extend_forest(
    edges: &[LevelEdge],
    i: usize,
    rank: usize,
    dsu: &DisjointSets,
    chosen: &mut Vec<EdgeKey>,
    out: &mut Vec<Vec<EdgeKey>>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if chosen.len() == rank {
        out.push(chosen.clone());
        return;
    }
    let (a, b, key) = edges[i];
    let mut with = dsu.clone();
    if with.union(a, b) {
        chosen.push(key);
        extend_forest(edges, i + 1, rank, &with, chosen, out, limit);
        chosen.pop();
        // skipping edge i is only worth exploring if the rest still reach full rank
        if chosen.len() + forest_rank(dsu, &edges[i + 1..]) == rank {
            extend_forest(edges, i + 1, rank, dsu, chosen, out, limit);
        }
    } else {
        extend_forest(edges, i + 1, rank, dsu, chosen, out, limit);
    }
}

/// Per-level forest lists, heaviest level first. Each list holds at most
/// `limit` forests.
fn level_forests(g: &ConceptualGraph, limit: usize) -> Result<(Vec<Levels>, Weight), MstError> {
    let n = g.node_count();
    let mut pool = edge_pool(g)?;
    by_weight_desc(&mut pool);

    let mut contracted = DisjointSets::new(n);
    let mut levels = Vec::new();
    let mut total = Weight::zero();
    let mut start = 0;
    while start < pool.len() {
        let w = pool[start].1;
        let end = start + pool[start..].iter().take_while(|(_, x)| *x == w).count();
        let local: Vec<LevelEdge> = pool[start..end]
            .iter()
            .filter_map(|(k, _)| {
                let (a, b) = k.endpoints();
                let (ra, rb) = (contracted.find(a), contracted.find(b));
                (ra != rb).then_some((ra, rb, *k))
            })
            .collect();
        if !local.is_empty() {
            let forests = spanning_forests(n, &local, limit);
            total = total + forests[0].iter().map(|_| w).sum();
            levels.push(forests);
            for (a, b, _) in &local {
                contracted.union(*a, *b);
            }
        }
        start = end;
    }
    Ok((levels, total))
}

/// `n * sum(d^2) - (sum d)^2`, i.e. `n^2` times the degree variance.
fn spread_key(n: usize, edges: &[EdgeKey]) -> u128 {
    let mut deg = vec![0u128; n];
    for k in edges {
        let (a, b) = k.endpoints();
        deg[a] += 1;
        deg[b] += 1;
    }
    let sum: u128 = deg.iter().sum();
    let sq: u128 = deg.iter().map(|d| d * d).sum();
    n as u128 * sq - sum * sum
}

/// Enumerates up to `k` maximum spanning trees in a fixed order, then
/// sorts them by Div_D ascending, breaking ties by the canonical edge list.
pub fn enumerate_mst(g0: &ConceptualGraph, k: usize) -> Result<CandidateSet, MstError> {
    if k == 0 {
        return Err(MstError::ZeroK);
    }
    let n = g0.node_count();
    let (levels, max_weight) = level_forests(g0, k.saturating_add(1))?;

    let total = levels.iter().fold(1u128, |acc, l| acc.saturating_mul(l.len() as u128));
    let truncated = total > k as u128;
    let emit = total.min(k as u128) as usize;

    let mut trees: Vec<Vec<EdgeKey>> = Vec::with_capacity(emit);
    let mut odometer = vec![0usize; levels.len()];
    for _ in 0..emit {
        let mut edges: Vec<EdgeKey> = levels
            .iter()
            .zip(&odometer)
            .flat_map(|(l, &i)| l[i].iter().copied())
            .collect();
        edges.sort_unstable();
        trees.push(edges);
        for pos in (0..levels.len()).rev() {
            odometer[pos] += 1;
            if odometer[pos] < levels[pos].len() {
                break;
            }
            odometer[pos] = 0;
        }
    }

    let mut keyed: Vec<(u128, Vec<EdgeKey>)> = trees.into_iter().map(|t| (spread_key(n, &t), t)).collect();
    keyed.sort();

    let labels = g0.shared_labels();
    let trees = keyed
        .into_iter()
        .map(|(_, edges)| {
            let weighted = edges
                .into_iter()
                .map(|e| (e, g0.weight(e).expect("tree edges come from g0")));
            ConceptualGraph::from_edges(labels.clone(), weighted, Provenance::MstCandidate)
                .expect("enumerated edge sets are spanning trees")
        })
        .collect();

    Ok(CandidateSet {
        trees,
        k_requested: k,
        truncated,
        max_weight,
    })
}

/// The first `m` candidates in ranked order.
pub fn select_top_m(cands: &CandidateSet, m: usize) -> Vec<ConceptualGraph> {
    cands.trees.iter().take(m).cloned().collect()
}
