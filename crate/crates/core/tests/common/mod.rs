//! Random fixtures and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the library's algorithms.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semmap_core::{ConceptualGraph, EdgeKey, FormFunctionTable, FunctionId, GoldStandard, Provenance, Weight};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A 0/1 matrix with its CSV rendering.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<bool>>,
}

impl RawTable {
    pub fn random(rng: &mut impl Rng, functions: usize, rows: usize, sparsity: f64) -> Self {
        let labels = (0..functions).map(|i| format!("f{i:02}")).collect();
        let rows = (0..rows)
            .map(|_| (0..functions).map(|_| rng.random::<f64>() >= sparsity).collect())
            .collect();
        RawTable { labels, rows }
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("language,form");
        for l in &self.labels {
            s.push(',');
            s.push_str(l);
        }
        s.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            s.push_str(&format!("lang{},form{}", i / 2, i % 2));
            for &c in row {
                s.push_str(if c { ",1" } else { ",0" });
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(&self) -> FormFunctionTable {
        semmap_core::parse_table(self.csv().as_bytes()).expect("generated table parses")
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Function index sets of the rows.
    pub fn sets(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i).collect())
            .collect()
    }

    pub fn zero_fraction(&self) -> f64 {
        let zeros = self.rows.iter().flatten().filter(|c| !**c).count();
        zeros as f64 / (self.rows.len() * self.n()) as f64
    }
}

/// Co-occurrence counts by a double loop over rows and pairs.
pub fn cooccurrence(t: &RawTable) -> Vec<Vec<u64>> {
    let n = t.n();
    let mut w = vec![vec![0u64; n]; n];
    for row in &t.rows {
        for i in 0..n {
            for j in 0..n {
                if i != j && row[i] && row[j] {
                    w[i][j] += 1;
                }
            }
        }
    }
    w
}

/// Dense symmetric adjacency of a graph.
pub fn matrix(g: &ConceptualGraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut m = vec![vec![false; n]; n];
    for k in g.edge_keys() {
        let (a, b) = k.endpoints();
        m[a][b] = true;
        m[b][a] = true;
    }
    m
}

struct Uf(Vec<usize>);

impl Uf {
    fn new(n: usize) -> Self {
        Uf((0..n).collect())
    }
    fn root(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            x = self.0[x];
        }
        x
    }
    fn join(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.root(a), self.root(b));
        self.0[ra] = rb;
        ra != rb
    }
}

/// Whether `nodes` induces a connected subgraph, by union-find over the
/// induced edges.
pub fn induced_connected(m: &[Vec<bool>], nodes: &[usize]) -> bool {
    if nodes.len() <= 1 {
        return true;
    }
    let mut uf = Uf::new(m.len());
    let mut parts = nodes.len();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            if m[a][b] && uf.join(a, b) {
                parts -= 1;
            }
        }
    }
    parts == 1
}

pub fn recall_oracle(m: &[Vec<bool>], sets: &[Vec<usize>]) -> f64 {
    let expressed: Vec<_> = sets.iter().filter(|s| !s.is_empty()).collect();
    let ok = expressed.iter().filter(|s| induced_connected(m, s)).count();
    ok as f64 / expressed.len() as f64
}

/// Connected node subsets of size >= 2, by checking all 2^n subsets.
pub fn fhat_oracle(m: &[Vec<bool>]) -> u64 {
    let n = m.len();
    let mut count = 0;
    for mask in 0u64..(1 << n) {
        let nodes: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if nodes.len() >= 2 && induced_connected(m, &nodes) {
            count += 1;
        }
    }
    count
}

pub fn fprime_oracle(m: &[Vec<bool>], sets: &[Vec<usize>]) -> usize {
    sets.iter()
        .filter(|s| s.len() >= 2 && induced_connected(m, s))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Mean and population standard deviation of the degrees, in floating point.
pub fn degree_oracle(m: &[Vec<bool>]) -> (f64, f64) {
    let n = m.len() as f64;
    let deg: Vec<f64> = m.iter().map(|r| r.iter().filter(|x| **x).count() as f64).collect();
    let mean = deg.iter().sum::<f64>() / n;
    let var = deg.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Pair-by-pair agreement over i < j.
pub fn matrix_accuracy_oracle(a: &[Vec<bool>], b: &[Vec<bool>]) -> f64 {
    let n = a.len();
    let (mut same, mut total) = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            total += 1;
            if a[i][j] == b[i][j] {
                same += 1;
            }
        }
    }
    same as f64 / total as f64
}

pub fn overlap_accuracy_oracle(pred: &[Vec<bool>], gold: &[Vec<bool>]) -> f64 {
    let n = gold.len();
    let (mut hit, mut total) = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            if gold[i][j] {
                total += 1;
                if pred[i][j] {
                    hit += 1;
                }
            }
        }
    }
    hit as f64 / total as f64
}

/// Pearson correlation via the raw-sums formula.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// All maximum-weight spanning trees of a weighted graph given as an edge
/// list, found by checking every (n-1)-subset of edges.
pub fn brute_force_msts(n: usize, edges: &[(usize, usize, i64)]) -> (i64, BTreeSet<Vec<(usize, usize)>>) {
    let mut best = i64::MIN;
    let mut found = BTreeSet::new();
    if n <= 1 {
        found.insert(Vec::new());
        return (0, found);
    }
    let mut pick = Vec::with_capacity(n - 1);
    fn rec(
        n: usize,
        edges: &[(usize, usize, i64)],
        from: usize,
        pick: &mut Vec<usize>,
        best: &mut i64,
        found: &mut BTreeSet<Vec<(usize, usize)>>,
    ) {
        if pick.len() == n - 1 {
            let mut uf = Uf::new(n);
            if !pick.iter().all(|&i| uf.join(edges[i].0, edges[i].1)) {
                return;
            }
            let w: i64 = pick.iter().map(|&i| edges[i].2).sum();
            let mut tree: Vec<(usize, usize)> = pick.iter().map(|&i| (edges[i].0, edges[i].1)).collect();
            tree.sort();
            if w > *best {
                *best = w;
                found.clear();
            }
            if w == *best {
                found.insert(tree);
            }
            return;
        }
        for i in from..edges.len() {
            if edges.len() - i < n - 1 - pick.len() {
                break;
            }
            pick.push(i);
            rec(n, edges, i + 1, pick, best, found);
            pick.pop();
        }
    }
    rec(n, edges, 0, &mut pick, &mut best, &mut found);
    (best, found)
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i}")).collect()
}

pub fn key(a: usize, b: usize) -> EdgeKey {
    EdgeKey::new(FunctionId(a as u32), FunctionId(b as u32)).expect("distinct endpoints")
}

/// Graph with every pair present independently with probability `p` and
/// integer weights below `max_w`.
pub fn random_graph(rng: &mut impl Rng, labels: &[String], p: f64, max_w: u64) -> ConceptualGraph {
    let n = labels.len();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                edges.push((key(a, b), Weight::from_count(rng.random_range(0..max_w))));
            }
        }
    }
    ConceptualGraph::from_edges(labels.to_vec(), edges, Provenance::Edited).expect("valid graph")
}

/// Uniform-ish random spanning tree by random attachment over a shuffled
/// node order.
pub fn random_tree(rng: &mut impl Rng, labels: &[String]) -> ConceptualGraph {
    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let edges = (1..n).map(|i| {
        let parent = order[rng.random_range(0..i)];
        (key(parent, order[i]), Weight::from_count(1))
    });
    ConceptualGraph::from_edges(labels.to_vec(), edges, Provenance::MstCandidate).expect("valid tree")
}

pub fn gold_of(g: &ConceptualGraph) -> GoldStandard {
    GoldStandard::new(g.labels().to_vec(), g.edge_keys()).expect("valid gold")
}

/// Rows copied from a handful of random function sets, so that many
/// languages share a pattern and co-occurrence weights tie heavily.
pub fn templated_table(rng: &mut impl Rng, functions: usize, rows: usize, templates: usize, sparsity: f64) -> RawTable {
    let pats = RawTable::random(rng, functions, templates, sparsity);
    let rows = (0..rows)
        .map(|_| pats.rows[rng.random_range(0..templates)].clone())
        .collect();
    RawTable {
        labels: pats.labels,
        rows,
    }
}
