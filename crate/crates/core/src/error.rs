use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("function label is empty")]
    EmptyLabel,
    #[error("duplicate function label {0:?}")]
    DuplicateFunction(String),
    #[error("table has no rows")]
    NoInstances,
    #[error("function index {0} is out of range")]
    UnknownFunction(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(String, String),
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
    #[error("an mst-candidate graph must be a spanning tree")]
    NotATree,
    #[error("invalid weight {0} (expected a finite non-negative number)")]
    InvalidWeight(String),
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error(
        "missing header: the first two columns must be the language and form columns, followed by function columns"
    )]
    MissingHeader,
    #[error("header declares no function columns after the language and form columns")]
    NoFunctionColumns,
    #[error("row {row}, column {column:?}: expected 0 or 1, found {value:?}")]
    Cell { row: usize, column: String, value: String },
    #[error("row {row}: expected {expected} cells, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum GraphFormatError {
    #[error("graph json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate node id {0}")]
    DuplicateNodeId(i64),
    #[error("edge refers to unknown node id {0}")]
    UnknownNodeId(i64),
    #[error("self-loop on {0:?} is not allowed")]
    SelfLoop(String),
    #[error("edge {0}-{1} has no weight")]
    MissingWeight(String, String),
    #[error("labels not found among the table's functions: {}", .0.join(", "))]
    Unresolved(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("at least 2 functions are needed to build a graph, table has {0}")]
    TooFewFunctions(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MstError {
    #[error("graph is disconnected; components: {}", fmt_components(.0))]
    Disconnected(Vec<Vec<String>>),
    #[error("k must be at least 1")]
    ZeroK,
}

fn fmt_components(c: &[Vec<String>]) -> String {
    c.iter()
        .map(|comp| format!("{{{}}}", comp.join(", ")))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("recall is undefined: no form expresses any function")]
    NoForms,
    #[error("exact precision supports at most {cap} nodes, graph has {nodes}")]
    OverCapacity { nodes: usize, cap: usize },
    #[error("precision is undefined: the graph has no connected node subset of size 2 or more")]
    NoPossibleForms,
    #[error("edge-overlap accuracy is undefined for an empty gold standard")]
    EmptyGold,
    #[error("gold standard has {gold} nodes but the graph has {graph}")]
    NodeMismatch { graph: usize, gold: usize },
    #[error("accuracy needs at least 2 nodes")]
    TooFewNodes,
    #[error("sample lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 2 samples")]
    TooFewSamples,
    #[error("correlation is undefined: zero variance")]
    ZeroVariance,
}

/// Every metric that failed, never a partial report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("evaluation failed: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct EvalError(pub Vec<MetricError>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("unknown node {0}")]
    UnknownNode(u32),
    #[error("self-loops cannot be added")]
    SelfLoop,
    #[error("edge {0} already exists")]
    EdgeExists(String),
    #[error("edge {0} does not exist")]
    NoSuchEdge(String),
    #[error("no candidate {0}")]
    NoSuchCandidate(usize),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Stage of the end-to-end flow an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Parse,
    Gold,
    Build,
    Enumerate,
    Merge,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Parse => "parse",
            Stage::Gold => "gold",
            Stage::Build => "build",
            Stage::Enumerate => "enumerate",
            Stage::Merge => "merge",
            Stage::Evaluate => "evaluate",
        })
    }
}

#[derive(Debug, Error)]
#[error("[{stage}] {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl PipelineError {
    pub fn new(stage: Stage, source: impl std::error::Error + Send + Sync + 'static) -> Self {
        PipelineError {
            stage,
            source: Box::new(source),
        }
    }
}
