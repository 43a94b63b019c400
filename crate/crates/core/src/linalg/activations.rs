//! Elementwise activations and their derivatives.

use super::dense::DenseMatrix;
use super::scalar::Scalar;

/// Fixed self-normalizing constants.
pub const SELU_ALPHA: f64 = 1.6732632423543772;
pub const SELU_SCALE: f64 = 1.0507009873554805;

#[inline]
pub fn selu<S: Scalar>(x: S) -> S {
    let scale = S::from_f64(SELU_SCALE);
    if x > S::ZERO {
        scale * x
    } else {
        scale * S::from_f64(SELU_ALPHA) * (x.exp() - S::ONE)
    }
}

/// d selu / dx at pre-activation x.
#[inline]
pub fn selu_grad<S: Scalar>(x: S) -> S {
    let scale = S::from_f64(SELU_SCALE);
    if x > S::ZERO {
        scale
    } else {
        scale * S::from_f64(SELU_ALPHA) * x.exp()
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::ZERO {
        S::ONE / (S::ONE + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::ONE + e)
    }
}

#[inline]
pub fn prelu<S: Scalar>(x: S, slope: S) -> S {
    if x > S::ZERO {
        x
    } else {
        slope * x
    }
}

/// d prelu / dx at pre-activation x.
#[inline]
pub fn prelu_grad_x<S: Scalar>(x: S, slope: S) -> S {
    if x > S::ZERO {
        S::ONE
    } else {
        slope
    }
}

/// d prelu / d slope at pre-activation x.
#[inline]
pub fn prelu_grad_slope<S: Scalar>(x: S) -> S {
    if x > S::ZERO {
        S::ZERO
    } else {
        x
    }
}

pub fn selu_matrix<S: Scalar>(x: &DenseMatrix<S>) -> DenseMatrix<S> {
    x.map(selu)
}

pub fn sigmoid_matrix<S: Scalar>(x: &DenseMatrix<S>) -> DenseMatrix<S> {
    x.map(sigmoid)
}

/// prelu with one learnable slope per column.
pub fn prelu_matrix<S: Scalar>(x: &DenseMatrix<S>, slopes: &[S]) -> DenseMatrix<S> {
    assert_eq!(x.cols(), slopes.len(), "prelu_matrix: one slope per column");
    DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| prelu(x.get(i, j), slopes[j]))
}
