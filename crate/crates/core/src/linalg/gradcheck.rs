//! Central finite-difference validation of hand-derived gradients.
//!
//! Runs in f64 only: float32 rounding would drown the differences this is
//! meant to expose.

use super::dense::DenseMatrix;

#[derive(Clone, Debug)]
pub struct BlockCheck {
    pub name: String,
    pub max_rel_err: f64,
    /// (row, col) of the worst entry, with its analytic and numeric values.
    pub worst_entry: (usize, usize),
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
    pub epsilon: f64,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_rel_err).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err() < tol
    }
}

/// Compares `analytic_grads` against central differences of `loss_fn` around
/// `params`. Per element the perturbation is `epsilon * max(1, |p|)` and the
/// relative error is `|a - n| / max(1, |a|, |n|)`.
///
/// `loss_fn` must be deterministic in `params` (fix any randomness outside).
pub fn grad_check<L>(
    loss_fn: L,
    analytic_grads: &[DenseMatrix<f64>],
    params: &[DenseMatrix<f64>],
    names: &[&str],
    epsilon: f64,
) -> GradCheckReport
where
    L: Fn(&[DenseMatrix<f64>]) -> f64,
{
    assert_eq!(params.len(), analytic_grads.len());
    assert_eq!(params.len(), names.len());
    assert!(epsilon > 0.0);

    let mut work: Vec<DenseMatrix<f64>> = params.to_vec();
    let mut blocks = Vec::with_capacity(params.len());

    for b in 0..params.len() {
        let (rows, cols) = (params[b].rows(), params[b].cols());
        let mut worst = BlockCheck {
            name: names[b].to_string(),
            max_rel_err: 0.0,
            worst_entry: (0, 0),
            analytic: analytic_grads[b].get(0, 0),
            numeric: f64::NAN,
        };
        for i in 0..rows {
            for j in 0..cols {
                let p0 = work[b].get(i, j);
                let h = epsilon * p0.abs().max(1.0);
                work[b].set(i, j, p0 + h);
                let up = loss_fn(&work);
                work[b].set(i, j, p0 - h);
                let down = loss_fn(&work);
                work[b].set(i, j, p0);
                let numeric = (up - down) / (2.0 * h);
                let analytic = analytic_grads[b].get(i, j);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0);
                if rel >= worst.max_rel_err {
                    worst.max_rel_err = rel;
                    worst.worst_entry = (i, j);
                    worst.analytic = analytic;
                    worst.numeric = numeric;
                }
            }
        }
        blocks.push(worst);
    }

    GradCheckReport { blocks, epsilon }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_loss_checks_to_high_precision() {
        // L = 0.5 * sum(p^2), dL/dp = p
        let params = vec![DenseMatrix::from_rows(vec![vec![0.3, -1.7], vec![2.5, 0.0]])];
        let grads = vec![params[0].clone()];
        let report = grad_check(
            |ps| 0.5 * ps[0].as_slice().iter().map(|v| v * v).sum::<f64>(),
            &grads,
            &params,
            &["p"],
            1e-5,
        );
        assert!(report.max_rel_err() < 1e-9, "rel err {}", report.max_rel_err());
        assert!(report.passes(1e-9));
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        let params = vec![DenseMatrix::from_flat(1, 1, vec![1.0])];
        let grads = vec![DenseMatrix::from_flat(1, 1, vec![1.5])]; // true grad is 1.0
        let report = grad_check(|ps| ps[0].get(0, 0), &grads, &params, &["p"], 1e-5);
        assert!(report.max_rel_err() > 0.3);
        assert!(!report.passes(1e-4));
        assert_eq!(report.blocks[0].worst_entry, (0, 0));
    }
}
