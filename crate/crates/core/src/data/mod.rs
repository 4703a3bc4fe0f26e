//! Segments, datasets, CSV I/O, leave-one-animal-out folds, standardization
//! and the synthetic accelerometry generator.

mod csv;
mod folds;
mod standardize;
mod synth;

pub use self::csv::{load_csv, parse_csv, save_csv, write_csv};
pub use folds::{loao_folds, Fold};
pub use standardize::{standardize, AxisStats, Standardizer};
pub use synth::{
    animal_id, class_profile, synth_dataset, ClassProfile, SynthSpec, ARM18_COUNTS,
    MAX_SYNTH_CLASSES,
};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::numeric::RealMatrix;

/// Samples per segment.
pub const SEGMENT_LEN: usize = 256;
/// Accelerometer axes per sample.
pub const AXES: usize = 3;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("invalid synthetic spec: {0}")]
    Synth(String),
}

/// One window of `SEGMENT_LEN × AXES` accelerometer readings (g units).
#[derive(Clone, Debug, PartialEq)]
pub struct Segment(RealMatrix);

impl Segment {
    pub fn new(samples: RealMatrix) -> Result<Self, DataError> {
        if samples.shape() != (SEGMENT_LEN, AXES) {
            return Err(DataError::Invalid(format!(
                "segment must be {SEGMENT_LEN}x{AXES}, got {}x{}",
                samples.rows(),
                samples.cols()
            )));
        }
        if !samples.is_finite() {
            return Err(DataError::Invalid("segment contains non-finite values".into()));
        }
        Ok(Self(samples))
    }

    pub fn samples(&self) -> &RealMatrix {
        &self.0
    }

    pub fn into_samples(self) -> RealMatrix {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSegment {
    pub segment: Segment,
    pub label: usize,
    pub animal_id: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub class_names: Vec<String>,
    pub segments: Vec<LabeledSegment>,
    pub sample_rate_hz: f64,
}

impl Dataset {
    pub fn new(
        class_names: Vec<String>,
        segments: Vec<LabeledSegment>,
        sample_rate_hz: f64,
    ) -> Result<Self, DataError> {
        let ds = Self {
            class_names,
            segments,
            sample_rate_hz,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.class_names.len() < 2 {
            return Err(DataError::Invalid(format!(
                "need at least 2 classes, got {}",
                self.class_names.len()
            )));
        }
        if let Some(s) = self.segments.iter().find(|s| s.label >= self.num_classes()) {
            return Err(DataError::Invalid(format!(
                "label {} out of range for {} classes (animal {})",
                s.label,
                self.num_classes(),
                s.animal_id
            )));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Distinct animal ids in sorted order.
    pub fn animal_ids(&self) -> Vec<String> {
        self.segments
            .iter()
            .map(|s| s.animal_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_classes()];
        for s in &self.segments {
            h[s.label] += 1;
        }
        h
    }

    /// Same metadata, segments filtered by `keep`.
    pub fn filter(&self, keep: impl Fn(&LabeledSegment) -> bool) -> Dataset {
        Dataset {
            class_names: self.class_names.clone(),
            segments: self.segments.iter().filter(|s| keep(s)).cloned().collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.label).collect()
    }
}
