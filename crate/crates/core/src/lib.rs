//! Correlation clustering of embedding spaces.
//!
//! Embeddings become a complete graph whose edge costs are calibrated log-odds
//! of min-max scaled cosine similarity; the graph is partitioned by solving the
//! minimum cost multicut problem with greedy additive edge contraction and
//! Kernighan-Lin refinement. Clusterings are compared with the variation of
//! information and its two conditional entropies.

pub mod calibrate;
pub mod cli;
pub mod embedspace;
pub mod error;
pub mod graphbuild;
pub mod metrics;
pub mod multicut;
pub mod synth;
pub mod tables;
pub mod triangle;

pub use error::{Error, Result};
