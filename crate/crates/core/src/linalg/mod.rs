//! Numeric substrate: dense/sparse matrices, activations, the optimizer, and
//! the finite-difference gradient validator.

mod activations;
mod adam;
mod dense;
mod gradcheck;
mod rowdots;
mod scalar;
mod sparse;

pub use activations::{
    prelu, prelu_grad_slope, prelu_grad_x, prelu_matrix, selu, selu_grad, selu_matrix, sigmoid,
    sigmoid_matrix, SELU_ALPHA, SELU_SCALE,
};
pub use adam::{Adam, AdamConfig};
pub use dense::DenseMatrix;
pub use gradcheck::{grad_check, BlockCheck, GradCheckReport};
pub use rowdots::RowDots;
pub use scalar::{dist_sq, dot, norm2, Scalar};
pub use sparse::{spmm, CsrMatrix};
