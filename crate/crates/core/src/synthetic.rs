//! Synthetic attributed graphs: stochastic block model structure with
//! Gaussian class-centered features, for fixtures and selector benchmarks.

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::linalg::{DenseMatrix, Scalar};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SbmConfig {
    pub blocks: usize,
    pub nodes_per_block: usize,
    /// Edge probability inside a block.
    pub p_in: f64,
    /// Edge probability across blocks.
    pub p_out: f64,
    pub feature_dim: usize,
    /// Standard deviation of the Gaussian block centers.
    pub center_scale: f64,
    /// Standard deviation of per-node feature noise around the block center.
    pub noise: f64,
}

impl SbmConfig {
    pub fn num_nodes(&self) -> usize {
        self.blocks * self.nodes_per_block
    }
}

/// Samples an SBM graph with Gaussian features. Labels are block ids. Draw
/// order is fixed (centers, then features, then edges) so seeds are portable
/// across configurations that share a prefix.
pub fn sbm_gaussian<S: Scalar, R: Rng>(cfg: &SbmConfig, rng: &mut R) -> Result<AttributedGraph<S>> {
    if cfg.blocks == 0 || cfg.nodes_per_block == 0 || cfg.feature_dim == 0 {
        return Err(Error::Invalid(
            "sbm requires blocks, nodes_per_block, feature_dim >= 1".into(),
        ));
    }
    for (name, p) in [("p_in", cfg.p_in), ("p_out", cfg.p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Invalid(format!("{name} = {p} outside [0, 1]")));
        }
    }
    let m = cfg.num_nodes();
    let normal = |rng: &mut R| -> f64 { StandardNormal.sample(rng) };

    let mut centers = vec![0.0f64; cfg.blocks * cfg.feature_dim];
    for c in centers.iter_mut() {
        *c = cfg.center_scale * normal(rng);
    }
    let block_of = |i: usize| i / cfg.nodes_per_block;
    let features = {
        let mut data = Vec::with_capacity(m * cfg.feature_dim);
        for i in 0..m {
            let base = block_of(i) * cfg.feature_dim;
            for j in 0..cfg.feature_dim {
                data.push(S::from_f64(centers[base + j] + cfg.noise * normal(rng)));
            }
        }
        DenseMatrix::from_flat(m, cfg.feature_dim, data)
    };
    let mut edges = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let p = if block_of(i) == block_of(j) {
                cfg.p_in
            } else {
                cfg.p_out
            };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let labels: Vec<usize> = (0..m).map(block_of).collect();
    AttributedGraph::new(&edges, features, Some(labels), cfg.blocks)
}
