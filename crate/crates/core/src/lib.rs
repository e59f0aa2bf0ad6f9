//! Compare a learner's recorded sign with a reference template.
//!
//! An attempt is a stream of 20-joint skeleton frames, optionally with a
//! stream of finger-angle observations. Comparison runs in two phases:
//! dynamic time warping scores the movement ([`alignment`]) and a particle
//! swarm search checks the handshape at the template's keyframes
//! ([`handshape`]). The two scores are combined into an accuracy percentage
//! and gated against a threshold ([`scoring`]). Failed attempts get one of
//! five kinds of feedback ([`feedback`]), and a lesson strings attempts
//! together in a deterministic practice loop ([`session`]).
//!
//! ```
//! use signcoach_core::pipeline::{attempt_pipeline, PipelineConfig};
//! use signcoach_core::samples::{sample_library, sample_template};
//!
//! let template = sample_template("hello").unwrap();
//! let result = attempt_pipeline(
//!     &template,
//!     template.sequence.as_sequence(),
//!     &template.hands,
//!     80.0,
//!     &sample_library(),
//!     &PipelineConfig::default(),
//! )
//! .unwrap();
//! assert_eq!(result.accuracy, 100.0);
//! assert!(result.passed);
//! ```

pub mod alignment;
pub mod driver;
pub mod feedback;
pub mod format;
pub mod hand;
pub mod handshape;
pub mod joint;
pub mod pipeline;
pub mod samples;
pub mod scoring;
pub mod session;
pub mod skeleton;
pub mod space;
pub mod swarm;
pub mod synth;
pub mod template;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/skeletons.md")]
    mod skeletons {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
    #[doc = include_str!("../../../book/src/handshapes.md")]
    mod handshapes {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/feedback.md")]
    mod feedback {}
    #[doc = include_str!("../../../book/src/synth.md")]
    mod synth {}
    #[doc = include_str!("../../../book/src/sessions.md")]
    mod sessions {}
    #[doc = include_str!("../../../book/src/service.md")]
    mod service {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
