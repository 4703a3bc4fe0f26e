use super::{ClassifierParams, ModelError, ModelSpec};
use crate::data::Dataset;
use crate::nn::{adam_step, clip_global_norm, AdamState, TrainConfig};
use crate::numeric::{RealMatrix, RngStream};

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ClassifierParams,
    /// Minibatch loss of every step, measured before that step's update.
    pub losses: Vec<f64>,
}

/// Minibatch Adam on softmax cross-entropy.
///
/// One stream seeded with `cfg.seed` drives initialization and then the
/// batch draws (uniform, with replacement).
pub fn train(spec: ModelSpec, dataset: &Dataset, cfg: &TrainConfig) -> Result<ClassifierParams, ModelError> {
    Ok(train_with_history(spec, dataset, cfg)?.params)
}

pub fn train_with_history(
    spec: ModelSpec,
    dataset: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    cfg.validate()?;
    spec.validate()?;
    if dataset.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if dataset.num_classes() != spec.num_classes {
        return Err(ModelError::Spec(format!(
            "model has {} classes, dataset has {}",
            spec.num_classes,
            dataset.num_classes()
        )));
    }
    dataset.validate()?;

    let mut rng = RngStream::new(cfg.seed);
    let mut params = ClassifierParams::init_with(spec, &mut rng);
    let mut state = AdamState::new(&params);
    let mut losses = Vec::with_capacity(cfg.iterations);
    let n = dataset.len();
    for _ in 0..cfg.iterations {
        let picks: Vec<usize> = (0..cfg.batch_size).map(|_| rng.below(n)).collect();
        let seqs: Vec<&RealMatrix> = picks
            .iter()
            .map(|&i| dataset.segments[i].segment.samples())
            .collect();
        let labels: Vec<usize> = picks.iter().map(|&i| dataset.segments[i].label).collect();
        let (loss, mut grads) = params.loss_and_grad(&seqs, &labels)?;
        if let Some(max) = cfg.clip_norm {
            clip_global_norm(&mut grads, max);
        }
        adam_step(&mut params, &grads, &mut state, cfg);
        losses.push(loss);
    }
    Ok(TrainOutcome { params, losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, LabeledSegment, Segment, SEGMENT_LEN, AXES};

    fn tiny(n: usize) -> Dataset {
        let segments = (0..n)
            .map(|i| LabeledSegment {
                segment: Segment::new(RealMatrix::filled(SEGMENT_LEN, AXES, if i % 2 == 0 { -1.0 } else { 1.0 })).unwrap(),
                label: i % 2,
                animal_id: "A01".into(),
            })
            .collect();
        Dataset::new(vec!["a".into(), "b".into()], segments, 50.0).unwrap()
    }

    #[test]
    fn zero_iterations_returns_init() {
        let spec = ModelSpec::parse_name("uni-GRU-1-32", 2).unwrap();
        let cfg = TrainConfig {
            iterations: 0,
            seed: 3,
            ..TrainConfig::default()
        };
        let p = train(spec, &tiny(4), &cfg).unwrap();
        assert_eq!(p, ClassifierParams::init(spec, 3));
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let spec = ModelSpec::parse_name("uni-GRU-1-32", 2).unwrap();
        let err = train(spec, &tiny(0), &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, ModelError::EmptyDataset));
    }

    #[test]
    fn class_count_must_agree() {
        let spec = ModelSpec::parse_name("uni-GRU-1-32", 3).unwrap();
        assert!(matches!(train(spec, &tiny(4), &TrainConfig::default()), Err(ModelError::Spec(_))));
    }

    #[test]
    fn deterministic() {
        let spec = ModelSpec::parse_name("uni-LSTM-1-32", 2).unwrap();
        let cfg = TrainConfig {
            iterations: 3,
            batch_size: 2,
            seed: 1,
            ..TrainConfig::default()
        };
        let a = train_with_history(spec, &tiny(6), &cfg).unwrap();
        let b = train_with_history(spec, &tiny(6), &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.losses, b.losses);
        assert_eq!(a.losses.len(), 3);
    }
}
