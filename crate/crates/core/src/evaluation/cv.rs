use std::time::Instant;

use rayon::prelude::*;

use super::{confusion, mcc, ConfusionMatrix, EvalError};
use crate::data::{loao_folds, Dataset, Fold, Segment, Standardizer};
use crate::model::{train, ModelSpec};
use crate::nn::TrainConfig;

/// Environment variable capping fold-level parallelism.
pub const THREADS_ENV: &str = "HERDRNN_THREADS";

/// Segments per batched forward pass during prediction.
const PREDICT_CHUNK: usize = 64;

/// Trains on one fold's (standardized) training animals and predicts the
/// held-out animal.
pub trait FoldLearner: Sync {
    fn name(&self) -> String;

    fn fit_predict(&self, train: &Dataset, test: &Dataset, seed: u64) -> Result<Vec<usize>, EvalError>;
}

/// The recurrent classifier trained with [`train`].
#[derive(Clone, Debug)]
pub struct RnnLearner {
    pub spec: ModelSpec,
    pub cfg: TrainConfig,
}

impl FoldLearner for RnnLearner {
    fn name(&self) -> String {
        self.spec.name()
    }

    fn fit_predict(&self, train_set: &Dataset, test: &Dataset, seed: u64) -> Result<Vec<usize>, EvalError> {
        let cfg = TrainConfig {
            seed,
            ..self.cfg.clone()
        };
        let params = train(self.spec, train_set, &cfg)?;
        let segs: Vec<&Segment> = test.segments.iter().map(|s| &s.segment).collect();
        Ok(params.predict_many(&segs, PREDICT_CHUNK)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub index: usize,
    pub test_id: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub mcc: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CVReport {
    pub model: String,
    pub class_names: Vec<String>,
    /// JSON echo of the configuration the folds were trained with.
    pub config: String,
    pub folds: Vec<FoldResult>,
    pub pooled: ConfusionMatrix,
    pub pooled_mcc: f64,
}

impl CVReport {
    pub fn mean_fold_mcc(&self) -> f64 {
        self.folds.iter().map(|f| f.mcc).sum::<f64>() / self.folds.len() as f64
    }
}

/// Worker count: the request, capped by `HERDRNN_THREADS` when set, and by
/// the number of folds.
pub fn effective_threads(requested: usize, folds: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(usize::MAX);
    requested.min(cap).min(folds).max(1)
}

fn run_fold(dataset: &Dataset, fold: &Fold, learner: &dyn FoldLearner, base_seed: u64) -> Result<FoldResult, EvalError> {
    let start = Instant::now();
    let raw_train = fold.train_set(dataset);
    let raw_test = fold.test_set(dataset);
    let stats = Standardizer::fit(&raw_train);
    let train_set = stats.apply(&raw_train);
    let test = stats.apply(&raw_test);
    let seed = base_seed ^ fold.index as u64;
    let preds = learner.fit_predict(&train_set, &test, seed)?;
    let cm = confusion(&test.labels(), &preds, dataset.num_classes())?;
    Ok(FoldResult {
        index: fold.index,
        test_id: fold.test_id.clone(),
        seed,
        n_train: train_set.len(),
        n_test: test.len(),
        mcc: mcc(&cm),
        confusion: cm,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Leave-one-animal-out driver for any learner. Fold `i` is trained with
/// seed `base_seed ^ i`, so the report does not depend on `parallel_folds`.
pub fn run_loao_cv_with(
    dataset: &Dataset,
    learner: &dyn FoldLearner,
    base_seed: u64,
    config_echo: String,
    parallel_folds: usize,
) -> Result<CVReport, EvalError> {
    dataset.validate()?;
    let folds = loao_folds(dataset)?;
    let threads = effective_threads(parallel_folds, folds.len());
    let results: Vec<Result<FoldResult, EvalError>> = if threads <= 1 {
        folds.iter().map(|f| run_fold(dataset, f, learner, base_seed)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| EvalError::Usage(format!("thread pool: {e}")))?;
        pool.install(|| {
            folds
                .par_iter()
                .map(|f| run_fold(dataset, f, learner, base_seed))
                .collect()
        })
    };
    let folds = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut pooled = ConfusionMatrix::new(dataset.num_classes());
    for f in &folds {
        pooled.merge(&f.confusion);
    }
    Ok(CVReport {
        model: learner.name(),
        class_names: dataset.class_names.clone(),
        config: config_echo,
        pooled_mcc: mcc(&pooled),
        pooled,
        folds,
    })
}

pub fn run_loao_cv(
    dataset: &Dataset,
    spec: ModelSpec,
    cfg: &TrainConfig,
    parallel_folds: usize,
) -> Result<CVReport, EvalError> {
    cfg.validate().map_err(crate::model::ModelError::from)?;
    if spec.num_classes != dataset.num_classes() {
        return Err(EvalError::Usage(format!(
            "model has {} classes, dataset has {}",
            spec.num_classes,
            dataset.num_classes()
        )));
    }
    let echo = serde_json::to_string(cfg).map_err(|e| EvalError::Usage(e.to_string()))?;
    let learner = RnnLearner {
        spec,
        cfg: cfg.clone(),
    };
    run_loao_cv_with(dataset, &learner, cfg.seed, echo, parallel_folds)
}
