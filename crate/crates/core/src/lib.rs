//! Visual tracking by nuclear-norm matrix completion.
//!
//! A target is described by a small set of templates that span a
//! low-dimensional appearance subspace. For each candidate region only a
//! subset of pixels is treated as observed; the rest are recovered by
//! completing the matrix `[templates, candidate]` under a nuclear-norm
//! objective. Candidates that really are the target are predicted well,
//! everything else is not, and the candidate with the smallest estimation
//! error wins.

pub mod appearance;
pub mod cli;
pub mod completion;
pub mod error;
pub mod eval;
pub mod io;
pub mod mask;
pub mod render;
pub mod run;
pub mod synth;
pub mod templates;
pub mod tracker;

pub use appearance::{AppearanceVector, MotionState, Patch};
pub use completion::{complete, nuclear_norm, svt, CompletionProblem, CompletionResult, SolverParams};
pub use error::{Error, Result};
pub use eval::{BBox, EvalReport};
pub use mask::{ObservationMask, PixelWeights};
pub use synth::{generate_synthetic, SyntheticSpec};
pub use templates::{TemplatePolicy, TemplateSet};
pub use tracker::{run_tracker, FrameResult, FrameSource, Tracker, TrackerConfig};
