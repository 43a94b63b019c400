//! Attributed graphs: undirected simple structure plus per-node features and
//! optional labels, with the degree-normalized adjacency operator and the
//! feature-shuffling corruption used by the contrastive objective.

mod dataset;
mod knn;

pub use dataset::{load_dataset, load_dataset_graph_free, read_meta, save_dataset, Meta};
pub use knn::{build_knn_graph, knn_edges};

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;

/// Undirected simple graph with node features and optional labels.
/// Immutable after construction; adjacency lists are sorted ascending and
/// contain no self-loops or duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributedGraph<S> {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    features: DenseMatrix<S>,
    labels: Option<Vec<usize>>,
    num_classes: usize,
}

impl<S: Scalar> AttributedGraph<S> {
    /// Builds from an edge list over `features.rows()` nodes. Either edge
    /// orientation is accepted; duplicates collapse and self-loops are
    /// dropped. Labels, when present, must cover every node and stay below
    /// `num_classes`.
    pub fn new(
        edges: &[(usize, usize)],
        features: DenseMatrix<S>,
        labels: Option<Vec<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        let m = features.rows();
        if let Some(ref l) = labels {
            if l.len() != m {
                return Err(Error::Invalid(format!(
                    "{} labels for {m} nodes",
                    l.len()
                )));
            }
            if num_classes == 0 {
                return Err(Error::Invalid("labels present but num_classes = 0".into()));
            }
            if let Some(&bad) = l.iter().find(|&&y| y >= num_classes) {
                return Err(Error::Invalid(format!(
                    "label {bad} out of range for {num_classes} classes"
                )));
            }
        }
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); m];
        for &(a, b) in edges {
            if a >= m || b >= m {
                return Err(Error::Invalid(format!(
                    "edge ({a},{b}) out of range for {m} nodes"
                )));
            }
            if a == b {
                continue;
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        let mut indptr = Vec::with_capacity(m + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for mut list in neighbors {
            list.sort_unstable();
            list.dedup();
            indices.extend_from_slice(&list);
            indptr.push(indices.len());
        }
        Ok(AttributedGraph {
            indptr,
            indices,
            features,
            labels,
            num_classes,
        })
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    #[inline]
    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_edges(&self) -> usize {
        self.indices.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    /// Degree without self-loops.
    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    #[inline]
    pub fn features(&self) -> &DenseMatrix<S> {
        &self.features
    }

    #[inline]
    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Each undirected edge once, as (lower, higher) pairs in ascending order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for i in 0..self.num_nodes() {
            for &j in self.neighbors(i) {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Same features/labels on a different edge set.
    pub fn rewire(&self, edges: &[(usize, usize)]) -> Result<Self> {
        AttributedGraph::new(edges, self.features.clone(), self.labels.clone(), self.num_classes)
    }

    /// Precision change through f64; structure and labels carry over.
    pub fn convert<T: Scalar>(&self) -> AttributedGraph<T> {
        AttributedGraph {
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            features: self.features.convert(),
            labels: self.labels.clone(),
            num_classes: self.num_classes,
        }
    }

    /// Same structure and labels with the feature matrix replaced.
    pub fn with_features(&self, features: DenseMatrix<S>) -> Self {
        assert_eq!(features.rows(), self.num_nodes());
        AttributedGraph {
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            features,
            labels: self.labels.clone(),
            num_classes: self.num_classes,
        }
    }
}

/// Degree-normalized adjacency with self-loops: entries of A + I scaled by
/// 1/sqrt(d_i d_j) where d counts the self-loop. The degree product is formed
/// in integers before the square root, so entries are symmetric to exact
/// equality and simple cases come out exact.
pub fn normalize_adjacency<S: Scalar>(g: &AttributedGraph<S>) -> CsrMatrix<S> {
    let m = g.num_nodes();
    let entry = |i: usize, j: usize| {
        let product = (g.degree(i) + 1) * (g.degree(j) + 1);
        S::ONE / S::from_f64(product as f64).sqrt()
    };
    let mut entries = Vec::with_capacity(g.indices.len() + m);
    for i in 0..m {
        entries.push((i, i, entry(i, i)));
        for &j in g.neighbors(i) {
            entries.push((i, j, entry(i, j)));
        }
    }
    CsrMatrix::from_entries(m, m, &entries)
}

/// Uniformly random permutation of 0..m.
pub fn random_permutation<R: Rng>(m: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    perm
}

/// Corruption for the contrastive objective: identical adjacency, feature
/// rows shuffled by a uniformly random permutation.
pub fn corrupt<S: Scalar, R: Rng>(g: &AttributedGraph<S>, rng: &mut R) -> AttributedGraph<S> {
    let perm = random_permutation(g.num_nodes(), rng);
    g.with_features(g.features().permuted_rows(&perm))
}
