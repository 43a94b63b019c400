//! Row-major dense matrix with the handful of products the models need.
//!
//! Accumulation orders are fixed (ascending inner index) so results are
//! bitwise reproducible run to run.

use super::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> DenseMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![S::ZERO; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: S) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "from_flat: {} values for a {rows}x{cols} matrix",
            data.len()
        );
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), c, "from_rows: row {i} has ragged length");
            data.extend(row);
        }
        DenseMatrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
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
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.data
    }

    /// `self · other`; inner loops run j fastest, k ascending for each (i,j).
    pub fn matmul(&self, other: &DenseMatrix<S>) -> DenseMatrix<S> {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other` without materializing the transpose; accumulation over
    /// ascending row index of `self`.
    pub fn transpose_matmul(&self, other: &DenseMatrix<S>) -> DenseMatrix<S> {
        assert_eq!(
            self.rows, other.rows,
            "transpose_matmul: {}x{} transposed times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let b_row = other.row(i);
            for (k, &a) in a_row.iter().enumerate() {
                let out_row = &mut out.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix<S> {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> DenseMatrix<S> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale_inplace(&mut self, c: S) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn add_scaled_inplace(&mut self, other: &DenseMatrix<S>, c: S) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (v, &o) in self.data.iter_mut().zip(&other.data) {
            *v += c * o;
        }
    }

    /// Mean of the rows, as a length-`cols` vector.
    pub fn mean_row(&self) -> Vec<S> {
        assert!(self.rows > 0, "mean_row of empty matrix");
        let inv = S::ONE / S::from_f64(self.rows as f64);
        let mut mu = vec![S::ZERO; self.cols];
        for i in 0..self.rows {
            for (m, &v) in mu.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        for m in &mut mu {
            *m *= inv;
        }
        mu
    }

    /// Gathers rows so that output row i equals input row `perm[i]`.
    pub fn permuted_rows(&self, perm: &[usize]) -> DenseMatrix<S> {
        assert_eq!(perm.len(), self.rows, "permuted_rows: permutation length");
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Precision change through f64; exact when widening.
    pub fn convert<T: Scalar>(&self) -> DenseMatrix<T> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| T::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn to_f64_matrix(&self) -> DenseMatrix<f64> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.to_f64()).collect(),
        }
    }

    /// Largest absolute elementwise difference, in f64.
    pub fn max_abs_diff(&self, other: &DenseMatrix<S>) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a.to_f64() - b.to_f64()).abs())
            .fold(0.0, f64::max)
    }
}
