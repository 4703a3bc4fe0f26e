use super::{Dataset, LabeledSegment, Segment, AXES};

const STD_FLOOR: f64 = 1e-8;

/// Per-axis mean and (population) standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisStats {
    pub mean: [f64; AXES],
    pub std: [f64; AXES],
}

/// Per-axis z-score transform fitted on one dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Standardizer {
    pub stats: AxisStats,
}

impl Standardizer {
    /// Fits on every sample of every segment. `train` must be non-empty.
    pub fn fit(train: &Dataset) -> Self {
        assert!(!train.is_empty(), "standardizer fitted on an empty dataset");
        let mut sum = [0.0; AXES];
        let mut count = 0usize;
        for s in &train.segments {
            let m = s.segment.samples();
            for r in 0..m.rows() {
                for (a, v) in m.row(r).iter().enumerate() {
                    sum[a] += v;
                }
            }
            count += m.rows();
        }
        let n = count as f64;
        let mean = sum.map(|s| s / n);
        let mut sq = [0.0; AXES];
        for s in &train.segments {
            let m = s.segment.samples();
            for r in 0..m.rows() {
                for (a, v) in m.row(r).iter().enumerate() {
                    sq[a] += (v - mean[a]).powi(2);
                }
            }
        }
        let std = sq.map(|q| (q / n).sqrt().max(STD_FLOOR));
        Self {
            stats: AxisStats { mean, std },
        }
    }

    pub fn apply_segment(&self, segment: &Segment) -> Segment {
        let mut m = segment.samples().clone();
        for r in 0..m.rows() {
            for (a, v) in m.row_mut(r).iter_mut().enumerate() {
                // floored axes are constant up to rounding in the mean
                *v = if self.stats.std[a] <= STD_FLOOR {
                    0.0
                } else {
                    (*v - self.stats.mean[a]) / self.stats.std[a]
                };
            }
        }
        Segment::new(m).expect("shape preserved")
    }

    pub fn apply(&self, dataset: &Dataset) -> Dataset {
        Dataset {
            class_names: dataset.class_names.clone(),
            sample_rate_hz: dataset.sample_rate_hz,
            segments: dataset
                .segments
                .iter()
                .map(|s| LabeledSegment {
                    segment: self.apply_segment(&s.segment),
                    label: s.label,
                    animal_id: s.animal_id.clone(),
                })
                .collect(),
        }
    }
}

/// Z-scores `apply_to` with statistics computed on `train` only.
pub fn standardize(train: &Dataset, apply_to: &Dataset) -> Dataset {
    Standardizer::fit(train).apply(apply_to)
}
