//! Domain types shared across the crate: function ids, edge keys, exact
//! weights, the form-function table and the conceptual graph.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::iter::Sum;
use std::ops::Add;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dsu::DisjointSets;
use crate::error::ModelError;

/// Dense 0-based index of a function column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionId(pub u32);

impl FunctionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for FunctionId {
    fn from(i: usize) -> Self {
        FunctionId(i as u32)
    }
}

/// Unordered pair of distinct functions, stored with `lo < hi`.
///
/// The derived ordering is the canonical edge order used for every
/// tie-break in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    lo: FunctionId,
    hi: FunctionId,
}

impl EdgeKey {
    /// Returns `None` for a self-loop.
    pub fn new(a: impl Into<FunctionId>, b: impl Into<FunctionId>) -> Option<Self> {
        let (a, b) = (a.into(), b.into());
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(EdgeKey { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Some(EdgeKey { lo: b, hi: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn lo(self) -> FunctionId {
        self.lo
    }

    pub fn hi(self) -> FunctionId {
        self.hi
    }

    pub fn endpoints(self) -> (usize, usize) {
        (self.lo.index(), self.hi.index())
    }

    pub fn touches(self, v: FunctionId) -> bool {
        self.lo == v || self.hi == v
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo.0, self.hi.0)
    }
}

/// Number of decimal places kept for weights entered as floating point.
const WEIGHT_SCALE: i128 = 1_000_000_000;

/// Non-negative exact edge weight.
///
/// Weights produced by counting are integers; weights set by hand are
/// rationals with a resolution of 1e-9 so that they survive a trip
/// through a JSON number unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight(Ratio<i128>);

impl Weight {
    pub fn zero() -> Self {
        Weight(Ratio::zero())
    }

    pub fn from_count(count: u64) -> Self {
        Weight(Ratio::from_integer(count as i128))
    }

    /// Exact rational weight `numer / denom`.
    pub fn from_ratio(numer: u64, denom: u64) -> Result<Self, ModelError> {
        if denom == 0 {
            return Err(ModelError::InvalidWeight(format!("{numer}/0")));
        }
        Ok(Weight(Ratio::new(numer as i128, denom as i128)))
    }

    /// Rounds to 1e-9 and rejects negative or non-finite input.
    pub fn from_f64(x: f64) -> Result<Self, ModelError> {
        if !(0.0..=9.0e15).contains(&x) {
            return Err(ModelError::InvalidWeight(x.to_string()));
        }
        if x.fract() == 0.0 {
            return Ok(Weight(Ratio::from_integer(x as i128)));
        }
        let scaled = (x * WEIGHT_SCALE as f64).round() as i128;
        Ok(Weight(Ratio::new(scaled, WEIGHT_SCALE)))
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_integer(self) -> bool {
        self.0.is_integer()
    }

    pub fn is_zero(self) -> bool {
        self.0.is_zero()
    }

    pub fn ratio(self) -> Ratio<i128> {
        self.0
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::zero()
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, rhs: Weight) -> Weight {
        if self.is_integer() && rhs.is_integer() {
            return Weight(Ratio::from_integer(self.0.numer() + rhs.0.numer()));
        }
        Weight(self.0 + rhs.0)
    }
}

impl Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::zero(), |a, b| a + b)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}", self.to_f64())
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_integer() {
            match u64::try_from(*self.0.numer()) {
                Ok(n) => s.serialize_u64(n),
                Err(_) => s.serialize_f64(self.to_f64()),
            }
        } else {
            s.serialize_f64(self.to_f64())
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = serde_json::Number::deserialize(d)?;
        if let Some(u) = n.as_u64() {
            return Ok(Weight::from_count(u));
        }
        let x = n
            .as_f64()
            .ok_or_else(|| serde::de::Error::custom("weight is not a number"))?;
        Weight::from_f64(x).map_err(serde::de::Error::custom)
    }
}

/// One row of the table: a form of some language and the functions it
/// expresses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormInstance {
    pub language: String,
    pub form: String,
    /// Sorted, duplicate-free.
    pub functions: Vec<FunctionId>,
}

impl FormInstance {
    pub fn new(language: impl Into<String>, form: impl Into<String>, mut functions: Vec<FunctionId>) -> Self {
        functions.sort_unstable();
        functions.dedup();
        FormInstance {
            language: language.into(),
            form: form.into(),
            functions,
        }
    }

    /// A row with no function set has no connectivity obligation.
    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn label(&self) -> String {
        format!("{}:{}", self.language, self.form)
    }
}

/// Binary form-function table.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFunctionTable {
    functions: Vec<String>,
    instances: Vec<FormInstance>,
    sparsity: f64,
}

/// Shape statistics of a table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableStats {
    pub languages: usize,
    pub forms: usize,
    pub functions: usize,
    pub sparsity: f64,
    /// Rows without any function (kept for sparsity, skipped by recall).
    pub empty_forms: usize,
}

impl FormFunctionTable {
    pub fn new(functions: Vec<String>, instances: Vec<FormInstance>) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        for label in &functions {
            if label.trim().is_empty() {
                return Err(ModelError::EmptyLabel);
            }
            if !seen.insert(label.as_str()) {
                return Err(ModelError::DuplicateFunction(label.clone()));
            }
        }
        if instances.is_empty() {
            return Err(ModelError::NoInstances);
        }
        let n = functions.len();
        let mut ones = 0usize;
        for inst in &instances {
            if let Some(bad) = inst.functions.iter().find(|f| f.index() >= n) {
                return Err(ModelError::UnknownFunction(bad.index()));
            }
            ones += inst.functions.len();
        }
        let cells = instances.len() * n;
        let sparsity = if cells == 0 {
            1.0
        } else {
            (cells - ones) as f64 / cells as f64
        };
        Ok(FormFunctionTable {
            functions,
            instances,
            sparsity,
        })
    }

    pub fn functions(&self) -> &[String] {
        &self.functions
    }

    pub fn function_count(&self) -> usize {
        self.functions.len()
    }

    pub fn instances(&self) -> &[FormInstance] {
        &self.instances
    }

    pub fn sparsity(&self) -> f64 {
        self.sparsity
    }

    pub fn function_id(&self, label: &str) -> Option<FunctionId> {
        self.functions.iter().position(|l| l == label).map(FunctionId::from)
    }

    /// Instances with a non-empty function set.
    pub fn expressed_forms(&self) -> impl Iterator<Item = (usize, &FormInstance)> {
        self.instances.iter().enumerate().filter(|(_, f)| !f.is_empty())
    }

    /// Number of rows expressing function `f`.
    pub fn column_sum(&self, f: FunctionId) -> usize {
        self.instances
            .iter()
            .filter(|i| i.functions.binary_search(&f).is_ok())
            .count()
    }

    pub fn stats(&self) -> TableStats {
        let languages: BTreeSet<&str> = self.instances.iter().map(|i| i.language.as_str()).collect();
        TableStats {
            languages: languages.len(),
            forms: self.instances.len(),
            functions: self.functions.len(),
            sparsity: self.sparsity,
            empty_forms: self.instances.iter().filter(|i| i.is_empty()).count(),
        }
    }
}

/// Where a graph came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "initial-g0")]
    InitialG0,
    #[serde(rename = "mst-candidate")]
    MstCandidate,
    #[serde(rename = "merged")]
    Merged,
    #[serde(rename = "edited")]
    Edited,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::InitialG0 => "initial-g0",
            Provenance::MstCandidate => "mst-candidate",
            Provenance::Merged => "merged",
            Provenance::Edited => "edited",
        })
    }
}

/// Weighted undirected graph over the functions of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptualGraph {
    labels: Arc<[String]>,
    edges: BTreeMap<EdgeKey, Weight>,
    provenance: Provenance,
}

impl ConceptualGraph {
    /// Graph with the given nodes and no edges.
    pub fn empty(labels: impl Into<Arc<[String]>>, provenance: Provenance) -> Self {
        ConceptualGraph {
            labels: labels.into(),
            edges: BTreeMap::new(),
            provenance,
        }
    }

    /// Builds a graph and checks every structural invariant, including the
    /// spanning-tree shape required of `mst-candidate` graphs.
    pub fn from_edges(
        labels: impl Into<Arc<[String]>>,
        edges: impl IntoIterator<Item = (EdgeKey, Weight)>,
        provenance: Provenance,
    ) -> Result<Self, ModelError> {
        let mut g = ConceptualGraph::empty(labels, provenance);
        for (key, w) in edges {
            g.insert_edge(key, w)?;
        }
        if provenance == Provenance::MstCandidate && !g.is_spanning_tree() {
            return Err(ModelError::NotATree);
        }
        Ok(g)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub(crate) fn shared_labels(&self) -> Arc<[String]> {
        Arc::clone(&self.labels)
    }

    pub fn label(&self, v: FunctionId) -> &str {
        &self.labels[v.index()]
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn set_provenance(&mut self, p: Provenance) {
        self.provenance = p;
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeKey, Weight)> + '_ {
        self.edges.iter().map(|(k, w)| (*k, *w))
    }

    pub fn edge_keys(&self) -> impl Iterator<Item = EdgeKey> + '_ {
        self.edges.keys().copied()
    }

    pub fn weight(&self, key: EdgeKey) -> Option<Weight> {
        self.edges.get(&key).copied()
    }

    pub fn contains(&self, key: EdgeKey) -> bool {
        self.edges.contains_key(&key)
    }

    fn check_key(&self, key: EdgeKey) -> Result<(), ModelError> {
        let n = self.node_count();
        if key.hi().index() >= n {
            return Err(ModelError::UnknownFunction(key.hi().index()));
        }
        Ok(())
    }

    /// Adds an absent edge.
    pub fn insert_edge(&mut self, key: EdgeKey, w: Weight) -> Result<(), ModelError> {
        self.check_key(key)?;
        if self.edges.contains_key(&key) {
            return Err(ModelError::DuplicateEdge(
                self.label(key.lo()).to_owned(),
                self.label(key.hi()).to_owned(),
            ));
        }
        self.edges.insert(key, w);
        Ok(())
    }

    pub fn remove_edge(&mut self, key: EdgeKey) -> Option<Weight> {
        self.edges.remove(&key)
    }

    /// Replaces the weight of an existing edge, returning the old one.
    pub fn set_weight(&mut self, key: EdgeKey, w: Weight) -> Option<Weight> {
        self.edges.get_mut(&key).map(|slot| std::mem::replace(slot, w))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.node_count()];
        for key in self.edges.keys() {
            let (a, b) = key.endpoints();
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Dense adjacency matrix.
    pub fn adjacency(&self) -> Adjacency {
        let mut adj = Adjacency::new(self.node_count());
        for key in self.edges.keys() {
            adj.set(*key, true);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n <= 1 {
            return true;
        }
        let mut dsu = DisjointSets::new(n);
        for key in self.edges.keys() {
            let (a, b) = key.endpoints();
            dsu.union(a, b);
        }
        dsu.set_count() == 1
    }

    pub fn is_acyclic(&self) -> bool {
        let mut dsu = DisjointSets::new(self.node_count());
        self.edges.keys().all(|k| {
            let (a, b) = k.endpoints();
            dsu.union(a, b)
        })
    }

    pub fn is_spanning_tree(&self) -> bool {
        self.edge_count() + 1 == self.node_count().max(1) && self.is_connected() && self.is_acyclic()
    }
}

/// Dense symmetric adjacency matrix.
#[derive(Debug, Clone)]
pub struct Adjacency {
    n: usize,
    cells: Vec<bool>,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        Adjacency {
            n,
            cells: vec![false; n * n],
        }
    }

    #[inline]
    pub fn has(&self, a: usize, b: usize) -> bool {
        self.cells[a * self.n + b]
    }

    pub fn set(&mut self, key: EdgeKey, present: bool) {
        let (a, b) = key.endpoints();
        self.cells[a * self.n + b] = present;
        self.cells[b * self.n + a] = present;
    }

    pub fn node_count(&self) -> usize {
        self.n
    }
}

/// Expert reference map: unweighted edges over a table's functions.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldStandard {
    labels: Arc<[String]>,
    edges: BTreeSet<EdgeKey>,
}

impl GoldStandard {
    pub fn new(labels: impl Into<Arc<[String]>>, edges: impl IntoIterator<Item = EdgeKey>) -> Result<Self, ModelError> {
        let labels = labels.into();
        let mut set = BTreeSet::new();
        for key in edges {
            if key.hi().index() >= labels.len() {
                return Err(ModelError::UnknownFunction(key.hi().index()));
            }
            set.insert(key);
        }
        Ok(GoldStandard { labels, edges: set })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &BTreeSet<EdgeKey> {
        &self.edges
    }

    pub fn contains(&self, key: EdgeKey) -> bool {
        self.edges.contains(&key)
    }

    /// The gold map as a unit-weight graph, for export.
    pub fn to_graph(&self) -> ConceptualGraph {
        let mut g = ConceptualGraph::empty(Arc::clone(&self.labels), Provenance::Edited);
        for key in &self.edges {
            g.edges.insert(*key, Weight::from_count(1));
        }
        g
    }
}
