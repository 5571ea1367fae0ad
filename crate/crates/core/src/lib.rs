//! Backtranslation data augmentation for paraphrase identification corpora.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! - [`langfam`]: cluster languages by family and pick one intermediary
//!   language per family, ranked by native speakers.
//! - [`corpus`]: load MRPC / TPC / Quora files, downsample, split, and
//!   serialize to the JSON-lines interchange format.
//! - [`translate`]: the translation backend contract with caching, retry,
//!   rate limiting and a deterministic offline mock.
//! - [`augment`]: round-trip the paraphrase side through each intermediary
//!   language and drop exact matches.
//! - [`harness`] and [`metrics`]: run the model × dataset × condition grid
//!   through trainer adapters and analyse per-cell gains.

pub mod augment;
pub mod cli;
pub mod corpus;
pub mod fsutil;
pub mod harness;
pub mod langfam;
pub mod metrics;
pub mod rng;
pub mod translate;
