//! The high-low engine: scale ladder, pruning, square functions, the
//! constructive-interference sets and the low/high lemma checks.

pub mod classify;
pub mod ladder;
pub mod lemmas;
pub mod level_set;
pub mod pipeline;
pub mod prune;
pub mod spectral;
pub mod square;

pub use classify::{classify, OmegaDecomposition};
pub use ladder::{build_ladder, PruningParams, ScaleLadder};
pub use pipeline::{highlow_pipeline, PipelineParams, PipelineReport, ReportRow};
