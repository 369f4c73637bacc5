//! Semantic map construction: co-occurrence graphs from form-function
//! tables, maximum spanning tree candidates, connectivity merging and
//! evaluation metrics.

pub mod builder;
pub mod dsu;
pub mod error;
pub mod eval;
pub mod formats;
pub mod merge;
pub mod model;
pub mod mst;
pub mod pipeline;

pub use builder::build_g0;
pub use error::{
    BuildError, EditError, EvalError, GraphFormatError, MetricError, ModelError, MstError, PipelineError, Stage,
    TableError,
};
pub use eval::{evaluate, AccuracyMode, EvalOptions, MetricsReport, PrecisionStatus};
pub use formats::{parse_gold, parse_graph, parse_table, GraphFormat};
pub use merge::{merge, MergeOrder};
pub use model::{
    ConceptualGraph, EdgeKey, FormFunctionTable, FormInstance, FunctionId, GoldStandard, Provenance, Weight,
};
pub use mst::{enumerate_mst, select_top_m, CandidateSet};
pub use pipeline::{run_pipeline, run_pipeline_on, EditAction, PipelineConfig, SessionBundle, UndoOutcome};
