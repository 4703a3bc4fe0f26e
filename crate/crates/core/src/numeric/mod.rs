//! Dense matrices, elementwise nonlinearities and the seeded random stream.

mod matrix;
mod rng;

pub(crate) use matrix::{gemm_nn, gemm_nt, gemm_tn, softmax_in_place};
pub use matrix::{relu, sigmoid, softmax_row, Activation, RealMatrix};
pub use rng::{Distribution, RngStream};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },
    #[error("expected a non-empty row vector, got {rows}x{cols}")]
    NotRowVector { rows: usize, cols: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

impl NumericError {
    pub(crate) fn shape(op: &'static str, lhs: &RealMatrix, rhs: &RealMatrix) -> Self {
        NumericError::ShapeMismatch {
            op,
            lhs: lhs.shape(),
            rhs: rhs.shape(),
        }
    }
}
