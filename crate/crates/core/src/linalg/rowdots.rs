//! Dot products of one matrix row against all rows, organized column-major so
//! sparse rows (bag-of-words features, two-hot encodings) cost only the
//! touched columns.

use super::dense::DenseMatrix;

/// Column-major index over the nonzero entries of an f64 matrix.
pub struct RowDots {
    rows: usize,
    // per column: (row, value) pairs, rows ascending
    columns: Vec<Vec<(usize, f64)>>,
    row_data: DenseMatrix<f64>,
}

impl RowDots {
    pub fn new(x: DenseMatrix<f64>) -> Self {
        let mut columns = vec![Vec::new(); x.cols()];
        for i in 0..x.rows() {
            for (j, &v) in x.row(i).iter().enumerate() {
                if v != 0.0 {
                    columns[j].push((i, v));
                }
            }
        }
        RowDots {
            rows: x.rows(),
            columns,
            row_data: x,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.row_data.row(i)
    }

    /// Fills `out[j] = <row i, row j>` for every j (including j = i).
    /// Accumulation runs over ascending column index, then ascending row.
    pub fn dots_from(&self, i: usize, out: &mut [f64]) {
        assert_eq!(out.len(), self.rows);
        out.fill(0.0);
        for (j, &v) in self.row_data.row(i).iter().enumerate() {
            if v != 0.0 {
                for &(r, w) in &self.columns[j] {
                    out[r] += v * w;
                }
            }
        }
    }
}
