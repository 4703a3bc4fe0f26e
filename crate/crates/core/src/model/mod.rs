//! The full classifier: per-timestep input perceptron, recurrent module and
//! softmax output layer. Naming, initialization, training, prediction and
//! weight files.

mod classifier;
mod spec;
mod train;
mod weights;

pub use classifier::{argmax, pack_time_major, BatchTrace, ClassifierParams};
pub use spec::{Direction, ModelSpec, HIDDEN_DIMS, LAYER_COUNTS};
pub use train::{train, train_with_history, TrainOutcome};
pub use weights::{load_weights, parse_weights, save_weights, weights_to_string, FORMAT_VERSION};

use thiserror::Error;

use crate::data::DataError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid model name: {0}")]
    Name(String),
    #[error("invalid model spec: {0}")]
    Spec(String),
    #[error("weight file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
}
