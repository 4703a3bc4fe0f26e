//! Confusion matrices, multiclass MCC and the leave-one-animal-out driver.

mod cv;
mod metrics;
mod report;

pub use cv::{
    effective_threads, run_loao_cv, run_loao_cv_with, CVReport, FoldLearner, FoldResult, RnnLearner,
    THREADS_ENV,
};
pub use metrics::{confusion, mcc, ConfusionMatrix};
pub use report::{render_report, render_timings, write_report};

use thiserror::Error;

use crate::data::DataError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
