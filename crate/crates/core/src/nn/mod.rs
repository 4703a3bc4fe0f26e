//! Trainable layers, backpropagation through time, loss and optimizer.

mod adam;
mod affine;
mod cell;
mod loss;
mod stack;

pub use adam::{adam_step, clip_global_norm, AdamState, TrainConfig, BETA1, BETA2, EPSILON};
pub use affine::AffineParams;
pub use cell::{
    backward_direction, gru_step, lstm_step, run_direction, CellParams, DirectionTrace,
    GruCellParams, LstmCellParams, Variant,
};
pub use loss::{batch_cross_entropy, softmax_cross_entropy};
pub use stack::{RecurrentStack, StackTrace};

use thiserror::Error;

use crate::numeric::{NumericError, RealMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("internal error: {0}")]
    TraceMismatch(String),
    #[error("label {label} out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },
    #[error("invalid training config: {0}")]
    Config(String),
}

/// Ordered view over every trainable tensor of a parameter container.
///
/// Gradients use the same container type, so the orderings line up.
pub trait ParamTensors {
    fn tensors(&self) -> Vec<&RealMatrix>;
    fn tensors_mut(&mut self) -> Vec<&mut RealMatrix>;

    fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}
