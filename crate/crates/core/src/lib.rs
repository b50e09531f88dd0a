//! Builds repository-level pretraining data from raw source trees.
//!
//! Stages, in order: rule-based filtering ([`filter`]), dependency ordering
//! and concatenation ([`deps`]), repository-level near-deduplication
//! ([`dedup`]), benchmark decontamination ([`decontam`]) and FIM plus
//! fixed-length packing ([`sample`]). [`pipeline`] runs them with
//! checkpoints; [`stats`] renders the per-language summary.

pub mod config;
pub mod corpus;
pub mod decontam;
pub mod dedup;
pub mod deps;
pub mod error;
pub mod filter;
pub mod io;
pub mod language;
pub mod pipeline;
pub mod sample;
pub mod stats;

pub use corpus::{compute_file_stats, FileStats, SourceFile};
pub use error::{Error, Result};
pub use language::{detect_language, ExtensionMap, LanguageId};
