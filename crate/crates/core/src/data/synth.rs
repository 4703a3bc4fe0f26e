//! Synthetic triaxial accelerometry.
//!
//! A sample of class `k` at time `t` on axis `a` is
//!
//! ```text
//! g_k[a] + A_k[a] · sin(2π f_k t / 256 + φ) + b_animal[a] + ε
//! ```
//!
//! with `φ ~ U(0, 2π)` drawn per segment, `b_animal ~ N(0, animal_bias_sigma)`
//! drawn once per animal and axis (tag orientation varies between animals),
//! and `ε ~ N(0, noise_sigma)` i.i.d. The per-class triples `(g_k, A_k, f_k)`
//! are listed in [`PROFILES`].
//!
//! Draw order, all from one [`RngStream`] seeded with `spec.seed`:
//! label shuffle, then every animal's bias (animal-major, axis-minor), then for
//! each segment in output order its phase followed by `256 × 3` noise values
//! (time-major, axis-minor).

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, LabeledSegment, Segment, AXES, SEGMENT_LEN};
use crate::numeric::{RealMatrix, RngStream};

/// Class counts of a four-class collar-tag dataset
/// (grazing, ruminating, resting, other).
pub const ARM18_COUNTS: [usize; 4] = [7109, 2482, 2909, 735];

pub const MAX_SYNTH_CLASSES: usize = 8;

const SYNTH_RATE_HZ: f64 = 50.0;

/// Gravity direction `g` (g units), per-axis oscillation amplitude `A`, and
/// oscillation frequency in cycles per 256-sample window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassProfile {
    pub name: &'static str,
    pub gravity: [f64; AXES],
    pub amplitude: [f64; AXES],
    pub cycles: f64,
}

const PROFILES: [ClassProfile; MAX_SYNTH_CLASSES] = [
    ClassProfile {
        name: "grazing",
        gravity: [0.25, -0.35, -0.90],
        amplitude: [0.30, 0.25, 0.20],
        cycles: 18.0,
    },
    ClassProfile {
        name: "ruminating",
        gravity: [0.95, 0.00, 0.30],
        amplitude: [0.06, 0.10, 0.04],
        cycles: 8.0,
    },
    ClassProfile {
        name: "resting",
        gravity: [0.70, 0.60, 0.38],
        amplitude: [0.02, 0.02, 0.02],
        cycles: 2.0,
    },
    ClassProfile {
        name: "other",
        gravity: [0.30, -0.90, 0.30],
        amplitude: [0.35, 0.35, 0.35],
        cycles: 30.0,
    },
    ClassProfile {
        name: "walking",
        gravity: [0.85, -0.30, -0.43],
        amplitude: [0.40, 0.20, 0.30],
        cycles: 10.0,
    },
    ClassProfile {
        name: "drinking",
        gravity: [-0.20, -0.30, -0.93],
        amplitude: [0.10, 0.05, 0.15],
        cycles: 5.0,
    },
    ClassProfile {
        name: "grooming",
        gravity: [0.10, 0.70, -0.70],
        amplitude: [0.25, 0.30, 0.10],
        cycles: 14.0,
    },
    ClassProfile {
        name: "standing",
        gravity: [0.55, 0.10, 0.83],
        amplitude: [0.04, 0.04, 0.04],
        cycles: 4.0,
    },
];

pub fn class_profile(k: usize) -> Option<&'static ClassProfile> {
    PROFILES.get(k)
}

impl ClassProfile {
    /// Renders one segment. With `noise_sigma == 0` the stream is still
    /// advanced, so output is a pure function of the arguments only in the
    /// noiseless case.
    pub fn render(
        &self,
        phase: f64,
        bias: [f64; AXES],
        noise_sigma: f64,
        rng: &mut RngStream,
    ) -> Segment {
        let mut m = RealMatrix::zeros(SEGMENT_LEN, AXES);
        let w = 2.0 * std::f64::consts::PI * self.cycles / SEGMENT_LEN as f64;
        for t in 0..SEGMENT_LEN {
            let s = (w * t as f64 + phase).sin();
            for a in 0..AXES {
                let v = self.gravity[a] + self.amplitude[a] * s + bias[a]
                    + rng.gaussian(0.0, noise_sigma);
                m.set(t, a, v);
            }
        }
        Segment::new(m).expect("finite by construction")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n_animals: usize,
    pub segments_per_animal: usize,
    /// One entry per class; determines the class count.
    pub class_proportions: Vec<f64>,
    pub noise_sigma: f64,
    pub animal_bias_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let total: usize = ARM18_COUNTS.iter().sum();
        Self {
            n_animals: 6,
            segments_per_animal: 200,
            class_proportions: ARM18_COUNTS
                .iter()
                .map(|&c| c as f64 / total as f64)
                .collect(),
            noise_sigma: 0.1,
            animal_bias_sigma: 0.05,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn num_classes(&self) -> usize {
        self.class_proportions.len()
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::Synth(m));
        if self.n_animals < 2 {
            return bad(format!("need at least 2 animals, got {}", self.n_animals));
        }
        if self.segments_per_animal == 0 {
            return bad("segments_per_animal must be positive".into());
        }
        let c = self.num_classes();
        if !(2..=MAX_SYNTH_CLASSES).contains(&c) {
            return bad(format!("class count must be in 2..={MAX_SYNTH_CLASSES}, got {c}"));
        }
        if self.class_proportions.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad("proportions must be finite and nonnegative".into());
        }
        let sum: f64 = self.class_proportions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("proportions sum to {sum}, expected 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be >= 0".into());
        }
        if !(self.animal_bias_sigma >= 0.0 && self.animal_bias_sigma.is_finite()) {
            return bad("animal_bias_sigma must be >= 0".into());
        }
        Ok(())
    }

    /// Largest-remainder apportionment of the total segment count; ties go to
    /// the lower class index.
    pub fn class_counts(&self) -> Vec<usize> {
        let total = self.n_animals * self.segments_per_animal;
        let quotas: Vec<f64> = self
            .class_proportions
            .iter()
            .map(|p| p * total as f64)
            .collect();
        let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &k in order.iter().take(total.saturating_sub(assigned)) {
            counts[k] += 1;
        }
        counts
    }
}

pub fn animal_id(index: usize) -> String {
    format!("A{:02}", index + 1)
}

pub fn synth_dataset(spec: &SynthSpec) -> Result<Dataset, DataError> {
    spec.validate()?;
    let mut rng = RngStream::new(spec.seed);

    let mut labels: Vec<usize> = spec
        .class_counts()
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat(k).take(n))
        .collect();
    rng.shuffle(&mut labels);

    let biases: Vec<[f64; AXES]> = (0..spec.n_animals)
        .map(|_| {
            let mut b = [0.0; AXES];
            for v in &mut b {
                *v = rng.gaussian(0.0, spec.animal_bias_sigma);
            }
            b
        })
        .collect();

    let mut segments = Vec::with_capacity(labels.len());
    for (i, &label) in labels.iter().enumerate() {
        let animal = i / spec.segments_per_animal;
        let phase = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
        let segment = PROFILES[label].render(phase, biases[animal], spec.noise_sigma, &mut rng);
        segments.push(LabeledSegment {
            segment,
            label,
            animal_id: animal_id(animal),
        });
    }

    Dataset::new(
        PROFILES[..spec.num_classes()]
            .iter()
            .map(|p| p.name.to_owned())
            .collect(),
        segments,
        SYNTH_RATE_HZ,
    )
}
