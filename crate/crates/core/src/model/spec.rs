use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::data::{AXES, SEGMENT_LEN};
use crate::nn::Variant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Uni,
    Bi,
}

impl Direction {
    pub fn count(self) -> usize {
        match self {
            Direction::Uni => 1,
            Direction::Bi => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Uni => "uni",
            Direction::Bi => "bi",
        }
    }
}

pub const HIDDEN_DIMS: [usize; 3] = [32, 64, 128];
pub const LAYER_COUNTS: [usize; 2] = [1, 2];

const NAME_GRAMMAR: &str = "(uni|bi)-(LSTM|GRU)-(1|2)-(32|64|128)";

/// Structural hyper-parameters of one classifier.
///
/// Input is always `256 × 3`; `num_classes` is taken from the data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    pub direction: Direction,
    pub variant: Variant,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
}

impl ModelSpec {
    pub fn new(
        direction: Direction,
        variant: Variant,
        num_layers: usize,
        hidden_dim: usize,
        num_classes: usize,
    ) -> Result<Self, ModelError> {
        let spec = Self {
            direction,
            variant,
            num_layers,
            hidden_dim,
            num_classes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !LAYER_COUNTS.contains(&self.num_layers) {
            return Err(ModelError::Spec(format!(
                "num_layers must be 1 or 2, got {}",
                self.num_layers
            )));
        }
        if !HIDDEN_DIMS.contains(&self.hidden_dim) {
            return Err(ModelError::Spec(format!(
                "hidden_dim must be 32, 64 or 128, got {}",
                self.hidden_dim
            )));
        }
        if self.num_classes < 2 {
            return Err(ModelError::Spec(format!(
                "num_classes must be at least 2, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }

    pub const fn seq_len(&self) -> usize {
        SEGMENT_LEN
    }

    pub const fn input_dim(&self) -> usize {
        AXES
    }

    pub fn directions(&self) -> usize {
        self.direction.count()
    }

    /// Parses names like `uni-GRU-1-64`.
    pub fn parse_name(name: &str, num_classes: usize) -> Result<Self, ModelError> {
        let bad = || ModelError::Name(format!("`{name}` does not match {NAME_GRAMMAR}"));
        let parts: Vec<&str> = name.split('-').collect();
        let [dir, var, layers, hidden] = parts[..] else {
            return Err(bad());
        };
        let direction = match dir {
            "uni" => Direction::Uni,
            "bi" => Direction::Bi,
            _ => return Err(bad()),
        };
        let variant = match var {
            "LSTM" => Variant::Lstm,
            "GRU" => Variant::Gru,
            _ => return Err(bad()),
        };
        let num_layers = match layers {
            "1" => 1,
            "2" => 2,
            _ => return Err(bad()),
        };
        let hidden_dim = match hidden {
            "32" => 32,
            "64" => 64,
            "128" => 128,
            _ => return Err(bad()),
        };
        Self::new(direction, variant, num_layers, hidden_dim, num_classes)
    }

    pub fn name(&self) -> String {
        format!(
            "{}-{}-{}-{}",
            self.direction.as_str(),
            self.variant.as_str(),
            self.num_layers,
            self.hidden_dim
        )
    }

    /// The 24 grid models: LSTM block then GRU block, each bi before uni,
    /// 2 layers before 1, widths descending.
    pub fn grid(num_classes: usize) -> Vec<ModelSpec> {
        let mut out = Vec::with_capacity(24);
        for variant in [Variant::Lstm, Variant::Gru] {
            for direction in [Direction::Bi, Direction::Uni] {
                for num_layers in [2, 1] {
                    for hidden_dim in [128, 64, 32] {
                        out.push(ModelSpec {
                            direction,
                            variant,
                            num_layers,
                            hidden_dim,
                            num_classes,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Bare name parse for contexts where the class count is not known yet;
/// the result carries 4 classes.
impl FromStr for ModelSpec {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelSpec::parse_name(s, 4)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Serialized form inside weight files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SpecRecord {
    pub direction: Direction,
    pub variant: String,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub seq_len: usize,
    pub input_dim: usize,
}

impl From<&ModelSpec> for SpecRecord {
    fn from(s: &ModelSpec) -> Self {
        Self {
            direction: s.direction,
            variant: s.variant.as_str().to_owned(),
            num_layers: s.num_layers,
            hidden_dim: s.hidden_dim,
            num_classes: s.num_classes,
            seq_len: s.seq_len(),
            input_dim: s.input_dim(),
        }
    }
}

impl TryFrom<SpecRecord> for ModelSpec {
    type Error = ModelError;

    fn try_from(r: SpecRecord) -> Result<Self, Self::Error> {
        let variant = match r.variant.as_str() {
            "LSTM" => Variant::Lstm,
            "GRU" => Variant::Gru,
            other => return Err(ModelError::Format(format!("unknown variant `{other}`"))),
        };
        if r.seq_len != SEGMENT_LEN || r.input_dim != AXES {
            return Err(ModelError::Format(format!(
                "unsupported input shape {}x{}",
                r.seq_len, r.input_dim
            )));
        }
        ModelSpec::new(r.direction, variant, r.num_layers, r.hidden_dim, r.num_classes)
            .map_err(|e| ModelError::Format(e.to_string()))
    }
}
