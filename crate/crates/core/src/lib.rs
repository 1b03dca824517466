//! Building blocks for cascaded and end-to-end speech translation pipelines:
//! audio segmentation, bitext corpus filtering, subword vocabularies, n-gram
//! language models, ensemble beam decoding, knowledge distillation data
//! preparation, and translation/recognition scoring.
//!
//! All operations are deterministic: identical inputs produce byte-identical
//! outputs, independent of hash-map iteration order or platform.

pub mod audio;
pub mod filter;
pub mod langid;
pub mod metrics;
pub mod ngram;
pub mod search;
pub mod segio;
pub mod segments;
pub mod seqkd;
pub mod subword;
pub mod vad;

pub use audio::AudioBuffer;
pub use segments::{MergeParams, Segment, SegmentList};
