//! Supervised dictionary learning with graph regularization.
//!
//! Signals are coded sparsely over a learned dictionary, and a linear
//! classifier on the codes is learned jointly. Graph Laplacians over the
//! training samples and over the features regularize the codes and the
//! atoms, and can themselves be learned. The guide in `book/` walks through
//! each part with runnable examples.

pub mod classification;
pub mod cli;
pub mod coding;
pub mod data;
pub mod error;
pub mod graph_learning;
pub mod graphs;
pub mod learning;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/sparse-coding.md")]
    mod sparse_coding {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
