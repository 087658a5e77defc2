//! Graph contrastive learning with low-rank regularization (GCL-LRR).
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: attributed graph bundles, normalized adjacency, synthetic
//!   stochastic block models, label/attribute corruption and node splits.
//! - [`spectral`]: gram matrices, the symmetric eigensolver contract,
//!   truncated nuclear norm (value and gradient), kernel complexity,
//!   the LR-Attention transform and eigen-projection analysis.
//! - [`encoder`]: two-layer GCN encoder trained with node-level InfoNCE,
//!   prototype contrast and the truncated nuclear norm penalty.
//! - [`classifier`]: linear transductive classifiers on frozen embeddings.
//! - [`bound`]: the transductive test-loss bound and its components.
//! - [`harness`]: experiment orchestration used by the command-line tool.

pub mod bound;
pub mod classifier;
pub mod encoder;
mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod spectral;

pub use error::{Error, Result};
