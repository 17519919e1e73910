//! Label-to-span information extraction.
//!
//! Every IE query is a label plus a sentence, answered with the spans the
//! label refers to. The crate covers building such data from LLM answers
//! ([`synth`]), the prefix+BIO encoding ([`codec`]), casting IE tasks into
//! queries ([`tasks`]), taggers and training ([`harness`]) and scoring
//! ([`eval`]). Numeric code is generic over [`Scalar`] (`f32` or `f64`).

pub mod codec;
pub mod error;
pub mod eval;
pub mod harness;
pub mod num;
pub mod span;
pub mod synth;
pub mod synthetic;
pub mod tasks;
pub mod text;

pub use error::{Error, Result};
pub use num::Scalar;
pub use span::TokenRange;

pub type TagDistributionF32 = codec::TagDistribution<f32>;
pub type TagDistributionF64 = codec::TagDistribution<f64>;
pub type ScoredSpanF32 = codec::ScoredSpan<f32>;
pub type ScoredSpanF64 = codec::ScoredSpan<f64>;
pub type ToyTaggerF32 = harness::ToyTagger<f32>;
pub type ToyTaggerF64 = harness::ToyTagger<f64>;
pub type EvalReportF32 = eval::EvalReport<f32>;
pub type EvalReportF64 = eval::EvalReport<f64>;
