//! Base embedders applied to the coarsest graph.
//!
//! Two built-in methods are provided (random-walk skip-gram and a spectral
//! factorization) plus a bridge that loads embeddings computed elsewhere.

pub mod sgns;
pub mod spectral;
pub mod walk;

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{MileError, Result};
use crate::graph::Graph;
use crate::matrix::{read_embedding, EmbeddingMatrix};
use crate::rng;

pub use sgns::{sgns_train, SgnsParams};
pub use spectral::spectral_embed;
pub use walk::{generate_walks, RandomWalker};

#[derive(Clone, Debug, PartialEq)]
pub enum BaseMethod {
    RandomWalkSkipGram,
    Spectral,
    /// Embedding file in the `<rows> <dim>` text format.
    External(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaseEmbedderConfig {
    pub method: BaseMethod,
    pub dim: usize,
    pub seed: u64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub epochs_sgns: usize,
    /// Worker threads for walks and skip-gram; 1 keeps runs bit-reproducible.
    pub threads: usize,
}

impl Default for BaseEmbedderConfig {
    fn default() -> Self {
        BaseEmbedderConfig {
            method: BaseMethod::RandomWalkSkipGram,
            dim: 128,
            seed: 0,
            walk_length: 80,
            walks_per_node: 10,
            window: 10,
            negatives: 5,
            initial_lr: 0.025,
            epochs_sgns: 1,
            threads: 1,
        }
    }
}

impl BaseEmbedderConfig {
    pub fn spectral(dim: usize) -> Self {
        BaseEmbedderConfig {
            method: BaseMethod::Spectral,
            dim,
            ..Default::default()
        }
    }

    pub fn skip_gram(dim: usize) -> Self {
        BaseEmbedderConfig {
            dim,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(MileError::Config("embedding dimension must be >= 1".into()));
        }
        if self.method == BaseMethod::RandomWalkSkipGram && self.walk_length == 0 {
            return Err(MileError::Config("walk length must be >= 1".into()));
        }
        if !(self.initial_lr > 0.0) {
            return Err(MileError::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Work done by one base embedding call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BaseWork {
    /// Nodes visited across all generated walks.
    pub walk_steps: u64,
    /// Skip-gram (center, context) updates.
    pub sgns_pairs: u64,
    /// Order of the matrix handed to the eigensolver.
    pub eigen_dim: usize,
}

pub fn base_embed(g: &Graph, cfg: &BaseEmbedderConfig) -> Result<EmbeddingMatrix> {
    base_embed_with_work(g, cfg).map(|(e, _)| e)
}

pub fn base_embed_with_work(
    g: &Graph,
    cfg: &BaseEmbedderConfig,
) -> Result<(EmbeddingMatrix, BaseWork)> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(MileError::Dimension("cannot embed an empty graph".into()));
    }
    let mut work = BaseWork::default();
    let emb = match &cfg.method {
        BaseMethod::RandomWalkSkipGram => {
            let walk_seed = rng::mix64(cfg.seed ^ 0x7761_6c6b);
            let walks = if cfg.threads > 1 {
                walk::generate_walks_parallel(
                    g,
                    cfg.walks_per_node,
                    cfg.walk_length,
                    walk_seed,
                    cfg.threads,
                )
            } else {
                generate_walks(
                    g,
                    cfg.walks_per_node,
                    cfg.walk_length,
                    &mut rng::seeded(walk_seed),
                )
            };
            work.walk_steps = walks.iter().map(|w| w.len() as u64).sum();
            let params = SgnsParams {
                dim: cfg.dim,
                window: cfg.window,
                negatives: cfg.negatives,
                initial_lr: cfg.initial_lr,
                epochs: cfg.epochs_sgns,
                seed: cfg.seed,
                threads: cfg.threads,
            };
            let (emb, pairs) = sgns_train(g.node_count(), &walks, &params);
            work.sgns_pairs = pairs;
            emb
        }
        BaseMethod::Spectral => {
            work.eigen_dim = g.node_count();
            spectral_embed(g, cfg.dim, cfg.seed)?
        }
        BaseMethod::External(path) => {
            let file = File::open(path).map_err(|e| MileError::io(path, e))?;
            let emb = read_embedding(BufReader::new(file)).map_err(|e| e.with_path(path))?;
            if emb.rows() != g.node_count() || emb.dim() != cfg.dim {
                return Err(MileError::Format {
                    path: Some(path.clone()),
                    line: 1,
                    msg: format!(
                        "embedding is {}x{}, expected {}x{}",
                        emb.rows(),
                        emb.dim(),
                        g.node_count(),
                        cfg.dim
                    ),
                });
            }
            emb
        }
    };
    debug_assert!(emb.is_finite());
    Ok((emb, work))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::matrix::{write_embedding, Matrix};

    fn small() -> Graph {
        Graph::from_edge_list(
            &[Edge::unit(0, 1), Edge::unit(1, 2), Edge::unit(2, 3)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn external_passes_file_through() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.emb");
        let m = Matrix::from_fn(4, 3, |r, c| r as f64 * 0.5 - c as f64);
        write_embedding(&m, File::create(&path).unwrap()).unwrap();
        let cfg = BaseEmbedderConfig {
            method: BaseMethod::External(path.clone()),
            dim: 3,
            ..Default::default()
        };
        assert_eq!(base_embed(&small(), &cfg).unwrap(), m);

        let wrong_dim = BaseEmbedderConfig {
            dim: 2,
            ..cfg.clone()
        };
        assert!(matches!(
            base_embed(&small(), &wrong_dim),
            Err(MileError::Format { .. })
        ));
        let g5 = Graph::empty(5);
        assert!(matches!(
            base_embed(&g5, &cfg),
            Err(MileError::Format { .. })
        ));
        let missing = BaseEmbedderConfig {
            method: BaseMethod::External(dir.path().join("nope.emb")),
            ..cfg
        };
        assert!(base_embed(&small(), &missing).is_err());
    }

    #[test]
    fn shapes_and_work_counters() {
        let g = small();
        let mut cfg = BaseEmbedderConfig::skip_gram(4);
        cfg.walk_length = 5;
        cfg.walks_per_node = 2;
        let (e, w) = base_embed_with_work(&g, &cfg).unwrap();
        assert_eq!((e.rows(), e.dim()), (4, 4));
        assert!(e.is_finite());
        assert_eq!(w.walk_steps, 4 * 2 * 5);
        assert!(w.sgns_pairs > 0);
        assert_eq!(base_embed(&g, &cfg).unwrap(), e);

        let (e, w) = base_embed_with_work(&g, &BaseEmbedderConfig::spectral(3)).unwrap();
        assert_eq!((e.rows(), e.dim()), (4, 3));
        assert_eq!(w.eigen_dim, 4);

        assert!(base_embed(&g, &BaseEmbedderConfig::spectral(5)).is_err());
    }
}
