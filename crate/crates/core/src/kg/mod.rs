//! In-memory triple store and query executor.
//!
//! The graph is immutable once loaded; [`execute`] only reads it, so one
//! graph can serve any number of concurrent evaluations.

mod exec;
mod graph;

pub use exec::{
    eval_filter, execute, execute_with_diagnostics, match_pattern, order_cmp, row_key, AnswerSet, Binding, ExecError,
    FilterDiagnostic, FilterError,
};
pub use graph::{load_graph, GraphError, KnowledgeGraph, QualifierViolation, Triple, Value};
