//! Template matching over RDF graphs with selectively applied
//! neighborhood-signature pruning.
//!
//! The crate is organised along the query pipeline:
//!
//! * [`graph`] parses N-Triples into an immutable [`RdfGraph`].
//! * [`idmap`] assigns lexicographic label IDs so that every prefix keyword
//!   resolves to one contiguous [`IdInterval`].
//! * [`ni`] builds the neighborhood-interval index (full and vertex-cover
//!   variants) used both for candidate pruning and for connectivity checks.
//! * [`query`] holds the template model and its JSON file format.
//! * [`matcher`] evaluates templates: unary candidates, neighborhood checks,
//!   D-tree decomposition and joins, connection edges.
//! * [`planner`] gathers dataset statistics and decides per query whether
//!   the neighborhood check is worth running.
//! * [`metrics`] profiles a dataset (coherence, relationship specialty,
//!   literal diversity).
//! * [`workload`] generates random templates from a graph, and [`synth`]
//!   generates synthetic graphs for benchmarking.

#[cfg(test)]
mod fixtures;
pub mod graph;
pub mod idmap;
pub mod matcher;
pub mod metrics;
pub mod ni;
pub mod planner;
pub mod query;
pub mod synth;
pub mod workload;

pub use graph::{ClassReport, EdgeKind, NodeId, NodeKind, PredId, RdfGraph, Triple};
pub use idmap::{IdInterval, IdMap};
pub use matcher::{Engine, ExecOptions, MatchOutput, MatchResult, MatchStats};
pub use ni::{IndexVariant, NiIndex};
pub use planner::{DatasetStats, Mode, PlanDecision, Thresholds};
pub use query::QueryTemplate;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid query template: {0}")]
    Query(String),
    #[error("query generation failed: {0}")]
    Generate(String),
    #[error("invalid snapshot: {0}")]
    Snapshot(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("intermediate result exceeds the limit of {0} rows")]
    RowLimit(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
