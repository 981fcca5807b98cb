//! Prototypical graph convolutional embeddings for zero-shot node classification.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every numeric piece of the
//! pipeline:
//!
//! * [`graph`]: datasets, the symmetric GCN propagation matrix and zero-shot splits.
//! * [`linalg`], [`svd`], [`nn`]: dense/sparse kernels, randomized truncated SVD,
//!   Xavier init, PReLU and Adam.
//! * [`model`]: class prototypes, the two-layer GCN trained against prototypes with a
//!   mean squared error, embedding extraction and nearest-prototype decoding.
//! * [`expansion`]: seen-class self-training and cluster-based pseudo-class expansion,
//!   including k-means++ and silhouette model selection.
//! * [`eval`]: the one-vs-rest linear SVM probe, F1 scores and risk diagnostics.
//! * [`pipeline`]: the end-to-end variant runs for one seed and their aggregation.
//!
//! File formats, caching and the command line live in the `zge` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod eval;
pub mod expansion;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod rng;
pub mod svd;

pub use error::{Error, Result};
pub use graph::{Dataset, PropagationMatrix, SplitSpec};
pub use linalg::{CsrMatrix, Matrix};
