//! Multi-level graph embedding.
//!
//! A graph is repeatedly coarsened by hybrid matching, a base embedder runs
//! on the coarsest graph only, and a graph-convolution refiner trained on that
//! coarsest graph carries the embeddings back down to the original nodes.

pub mod base;
pub mod cli;
pub mod coarsen;
pub mod error;
pub mod eval;
pub mod graph;
pub mod matrix;
pub mod operator;
pub mod pipeline;
pub mod refine;
pub mod rng;

pub use error::{MileError, Result};
pub use graph::{Edge, Graph};
pub use matrix::{EmbeddingMatrix, Matrix};
