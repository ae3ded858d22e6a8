//! Multi-label legal-area document classification.
//!
//! The crate covers the whole experiment: corpus ingestion and label-space
//! truncation ([`corpus`]), stratified splitting ([`split`]), two baselines
//! ([`baseline`]), LSA + linear SVM ([`lsa`]), word-embedding classifiers
//! ([`embed`]), metrics ([`eval`]) and the benchmark driver ([`experiment`]).

pub mod baseline;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod lsa;
pub mod scores;
pub mod sparse;
pub mod split;
pub mod text;

pub use error::{Error, Result};
