//! Compressed sparse row matrix with sorted column indices.
//!
//! Sorted columns give a deterministic accumulation order in sparse-dense
//! products, which the bitwise-reproducibility contract of training relies
//! on.

use super::dense::DenseMatrix;
use super::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<S> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> CsrMatrix<S> {
    /// Builds from (row, col, value) triples; duplicate coordinates are
    /// merged by summation, and explicit zeros are kept as given.
    pub fn from_entries(rows: usize, cols: usize, entries: &[(usize, usize, S)]) -> Self {
        let mut sorted: Vec<(usize, usize, S)> = entries.to_vec();
        for &(r, c, _) in &sorted {
            assert!(r < rows && c < cols, "entry ({r},{c}) outside {rows}x{cols}");
        }
        sorted.sort_by_key(|e| (e.0, e.1));

        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<S> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    /// CSR view of a dense matrix, skipping exact zeros.
    pub fn from_dense(d: &DenseMatrix<S>) -> Self {
        let mut indptr = Vec::with_capacity(d.rows() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..d.rows() {
            for (j, &v) in d.row(i).iter().enumerate() {
                if v != S::ZERO {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            rows: d.rows(),
            cols: d.cols(),
            indptr,
            indices,
            values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Column indices and values of row i, columns ascending.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[S]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    /// Stored value at (i, j), or zero.
    pub fn get(&self, i: usize, j: usize) -> S {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => S::ZERO,
        }
    }

    /// `self · d` with d dense; per output element the accumulation runs over
    /// ascending column index.
    pub fn matmul_dense(&self, d: &DenseMatrix<S>) -> DenseMatrix<S> {
        assert_eq!(
            self.cols,
            d.rows(),
            "matmul_dense: {}x{} times {}x{}",
            self.rows,
            self.cols,
            d.rows(),
            d.cols()
        );
        let w = d.cols();
        let mut out = DenseMatrix::zeros(self.rows, w);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let out_row = out.row_mut(i);
            for (&c, &v) in cols.iter().zip(vals) {
                for (o, &b) in out_row.iter_mut().zip(d.row(c)) {
                    *o += v * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · d` without materializing the transpose; accumulation over
    /// ascending row index of `self`.
    pub fn transpose_matmul_dense(&self, d: &DenseMatrix<S>) -> DenseMatrix<S> {
        assert_eq!(
            self.rows,
            d.rows(),
            "transpose_matmul_dense: {}x{} transposed times {}x{}",
            self.rows,
            self.cols,
            d.rows(),
            d.cols()
        );
        let mut out = DenseMatrix::zeros(self.cols, d.cols());
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let d_row = d.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let out_row = out.row_mut(c);
                for (o, &b) in out_row.iter_mut().zip(d_row) {
                    *o += v * b;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix<S> {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(i, c, v);
            }
        }
        out
    }
}

/// Sparse-dense product; alias for [`CsrMatrix::matmul_dense`].
pub fn spmm<S: Scalar>(s: &CsrMatrix<S>, d: &DenseMatrix<S>) -> DenseMatrix<S> {
    s.matmul_dense(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn duplicate_entries_merge_by_sum() {
        let m = CsrMatrix::from_entries(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 4.0)]);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 1), 4.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn identity_pattern_leaves_dense_unchanged() {
        let eye = CsrMatrix::from_entries(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let d = DenseMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        assert_eq!(spmm(&eye, &d), d);
    }

    #[test]
    fn averaging_case() {
        let half = CsrMatrix::from_entries(2, 2, &[(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)]);
        let d = DenseMatrix::from_rows(vec![vec![2.0], vec![4.0]]);
        let out = spmm(&half, &d);
        assert_eq!(out.as_slice(), &[3.0, 3.0]);
    }

    #[test]
    fn spmm_matches_dense_reference_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = rng.random_range(1..=50);
            let n = rng.random_range(1..=8);
            let dense = DenseMatrix::from_fn(m, m, |_, _| {
                if rng.random::<f64>() < 0.3 {
                    rng.random::<f64>() * 2.0 - 1.0
                } else {
                    0.0
                }
            });
            let sparse = CsrMatrix::from_dense(&dense);
            let d = DenseMatrix::from_fn(m, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let got = spmm(&sparse, &d);
            let want = dense.matmul(&d);
            assert!(got.max_abs_diff(&want) < 1e-12);
        }
    }

    #[test]
    fn transpose_matmul_matches_dense_transpose() {
        let dense = DenseMatrix::from_rows(vec![vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]]);
        let sparse = CsrMatrix::from_dense(&dense);
        let d = DenseMatrix::from_rows(vec![vec![1.0, 1.0], vec![2.0, 0.5]]);
        let got = sparse.transpose_matmul_dense(&d);
        let want = dense.transpose().matmul(&d);
        assert!(got.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn row_iteration_is_sorted() {
        let m = CsrMatrix::from_entries(1, 5, &[(0, 4, 1.0), (0, 1, 2.0), (0, 3, 3.0)]);
        let (cols, _) = m.row(0);
        assert_eq!(cols, &[1, 3, 4]);
    }
}
