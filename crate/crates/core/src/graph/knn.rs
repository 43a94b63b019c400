//! Cosine kNN graph construction over feature rows. Selection runs in f64
//! regardless of the graph's scalar type so edge sets do not depend on
//! training precision.

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::linalg::{DenseMatrix, RowDots, Scalar};
use std::cmp::Ordering;

/// Directed kNN pairs (i, j): for each row i the k most cosine-similar other
/// rows. Zero-norm rows score similarity 0 against everything; ties break
/// toward the lower index.
pub fn knn_edges(features: &DenseMatrix<f64>, k: usize) -> Result<Vec<(usize, usize)>> {
    let m = features.rows();
    if k == 0 || k >= m {
        return Err(Error::Invalid(format!(
            "knn k = {k} must satisfy 1 <= k < {m} nodes"
        )));
    }
    let dots = RowDots::new(features.clone());
    let mut self_dot = vec![0.0f64; m];
    let mut buf = vec![0.0f64; m];
    for i in 0..m {
        dots.dots_from(i, &mut buf);
        self_dot[i] = buf[i];
    }
    let norms: Vec<f64> = self_dot.iter().map(|&d| d.sqrt()).collect();

    let mut edges = Vec::with_capacity(m * k);
    let mut candidates: Vec<usize> = Vec::with_capacity(m - 1);
    for i in 0..m {
        dots.dots_from(i, &mut buf);
        let sims: Vec<f64> = (0..m)
            .map(|j| {
                if norms[i] == 0.0 || norms[j] == 0.0 {
                    0.0
                } else {
                    buf[j] / (norms[i] * norms[j])
                }
            })
            .collect();
        candidates.clear();
        candidates.extend((0..m).filter(|&j| j != i));
        let by_sim_desc_then_index = |a: &usize, b: &usize| -> Ordering {
            sims[*b]
                .partial_cmp(&sims[*a])
                .expect("cosine similarities are finite")
                .then(a.cmp(b))
        };
        candidates.select_nth_unstable_by(k - 1, by_sim_desc_then_index);
        for &j in &candidates[..k] {
            edges.push((i, j));
        }
    }
    Ok(edges)
}

/// Symmetrized cosine kNN graph over the rows of `features`, which become
/// the node features of the result. No labels are attached.
pub fn build_knn_graph<S: Scalar>(
    features: &DenseMatrix<S>,
    k: usize,
) -> Result<AttributedGraph<S>> {
    let edges = knn_edges(&features.to_f64_matrix(), k)?;
    AttributedGraph::new(&edges, features.clone(), None, 0)
}
