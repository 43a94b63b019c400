//! Adaptive-moment optimizer over named parameter blocks.

use super::dense::DenseMatrix;
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

struct Moments<S> {
    m: Vec<S>,
    v: Vec<S>,
}

/// Optimizer state: first/second moment accumulators per block plus the step
/// counter. Block order and shapes must stay identical across calls.
pub struct Adam<S> {
    cfg: AdamConfig,
    step: u64,
    moments: Vec<Moments<S>>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(cfg: AdamConfig) -> Self {
        Adam {
            cfg,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update over `(name, param, grad)` blocks.
    #[allow(clippy::needless_range_loop)]
    pub fn step(&mut self, blocks: &mut [(&'static str, &mut DenseMatrix<S>, &DenseMatrix<S>)]) -> Result<()> {
        if self.moments.is_empty() {
            self.moments = blocks
                .iter()
                .map(|(_, p, _)| Moments {
                    m: vec![S::ZERO; p.as_slice().len()],
                    v: vec![S::ZERO; p.as_slice().len()],
                })
                .collect();
        }
        assert_eq!(self.moments.len(), blocks.len(), "adam: block count changed");

        self.step += 1;
        let t = self.step as i32;
        let b1 = S::from_f64(self.cfg.beta1);
        let b2 = S::from_f64(self.cfg.beta2);
        let one = S::ONE;
        // bias corrections computed in f64 for stability, identical per step
        let corr1 = S::from_f64(1.0 / (1.0 - self.cfg.beta1.powi(t)));
        let corr2 = S::from_f64(1.0 / (1.0 - self.cfg.beta2.powi(t)));
        let lr = S::from_f64(self.cfg.lr);
        let eps = S::from_f64(self.cfg.eps);

        for ((name, param, grad), mom) in blocks.iter_mut().zip(&mut self.moments) {
            assert_eq!(
                param.as_slice().len(),
                mom.m.len(),
                "adam: shape of block {name} changed"
            );
            assert_eq!(
                param.as_slice().len(),
                grad.as_slice().len(),
                "adam: gradient shape mismatch for block {name}"
            );
            if !grad.all_finite() {
                return Err(Error::NonFinite(format!("gradient for block {name}")));
            }
            let p = param.as_mut_slice();
            for i in 0..p.len() {
                let g = grad.as_slice()[i];
                mom.m[i] = b1 * mom.m[i] + (one - b1) * g;
                mom.v[i] = b2 * mom.v[i] + (one - b2) * g * g;
                let mhat = mom.m[i] * corr1;
                let vhat = mom.v[i] * corr2;
                p[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
