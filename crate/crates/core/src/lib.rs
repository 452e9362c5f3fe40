//! Example-driven, multi-class transformation engine for table columns.
//!
//! Given a source column, a target column, and a handful of matched example
//! pairs, the pipeline classifies the transformation (`String`, `Numbers`,
//! `Algorithmic`, or `General`), synthesizes an interpretable transformation
//! program — a fitted numeric formula, a program in the sandboxed
//! transformation language, or a per-value lookup plan — applies it to every
//! source row, and joins the predictions against the target column under
//! exact, edit-distance, or numeric-distance matching.
//!
//! Model-backed stages go through [`gateway::Gateway`], which supports live
//! HTTP, record, and replay modes so every pipeline run can be reproduced
//! offline from recorded fixtures.

pub mod classify;
pub mod csv;
pub mod fit;
pub mod gateway;
pub mod general;
pub mod join;
pub mod lang;
pub mod pipeline;
pub mod prompts;
pub mod synth;
pub mod table;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use classify::{ClassDecision, DecisionSource};
pub use fit::{FitResult, ModelFamily};
pub use gateway::{BackendConfig, BackendMode, Completion, Gateway, PromptRequest, PurposeTag};
pub use join::{JoinReport, MatchMode, RowOutcome};
pub use lang::{EvalLimits, TransformProgram};
pub use pipeline::{BenchmarkSummary, RunConfig, TableArtifact};
pub use synth::{RelationshipTag, SynthesisOutcome};
pub use table::{CellValue, ExamplePair, ExampleSet, TransformClass};
