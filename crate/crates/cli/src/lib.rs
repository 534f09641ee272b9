//! Command-line pipeline: scene generation, rendering, annotation,
//! validation and statistics over a dataset directory.

pub mod backend;
pub mod error;
pub mod pipeline;
pub mod stats;
pub mod validate;

pub use backend::BackendKind;
pub use error::{PipelineError, Result};
pub use pipeline::{cmd_annotate, cmd_gen_scenes, cmd_render, cmd_run, PipelineRun};
pub use stats::cmd_stats;
pub use validate::cmd_validate;
