use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ComplexityError;

/// Output length of a convolution: same padding keeps `L`, valid gives `L−K+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthConvention {
    #[default]
    Padded,
    Valid,
}

impl LengthConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            LengthConvention::Padded => "padded",
            LengthConvention::Valid => "valid",
        }
    }
}

impl FromStr for LengthConvention {
    type Err = ComplexityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "padded" => Ok(LengthConvention::Padded),
            "valid" => Ok(LengthConvention::Valid),
            other => Err(ComplexityError::Usage(format!(
                "conv convention must be padded or valid, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for LengthConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 1-D convolution with bias.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvLayerSpec {
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl ConvLayerSpec {
    /// Errors when `K > L` or any field is zero.
    pub fn output_len(&self, seq_len: usize, conv: LengthConvention) -> Result<usize, ComplexityError> {
        if self.kernel == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(ComplexityError::Usage(format!("degenerate conv layer {self:?}")));
        }
        if self.kernel > seq_len {
            return Err(ComplexityError::Usage(format!(
                "kernel {} longer than sequence {}",
                self.kernel, seq_len
            )));
        }
        Ok(match conv {
            LengthConvention::Padded => seq_len,
            LengthConvention::Valid => seq_len - self.kernel + 1,
        })
    }

    pub fn params(&self) -> u64 {
        (self.kernel * self.in_channels * self.out_channels + self.out_channels) as u64
    }
}

/// `K · C_in · L_out · C_out`.
pub fn mults_conv(spec: &ConvLayerSpec, seq_len: usize, conv: LengthConvention) -> Result<u64, ComplexityError> {
    let l_out = spec.output_len(seq_len, conv)?;
    Ok((spec.kernel * spec.in_channels * l_out * spec.out_channels) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConvArchKind {
    Fcn,
    ResNet,
}

impl ConvArchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConvArchKind::Fcn => "FCN",
            ConvArchKind::ResNet => "ResNet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "FCN" => Some(ConvArchKind::Fcn),
            "ResNet" => Some(ConvArchKind::ResNet),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArchLayer {
    Conv {
        label: String,
        spec: ConvLayerSpec,
    },
    /// Scale and shift per channel; no multiplications counted.
    BatchNorm { label: String, channels: usize },
}

/// Convolutional reference classifier: layers in order, then global average
/// pooling and a linear layer to the classes.
///
/// Every conv is costed against the window length `L`; under the valid
/// convention its output is `L−K+1` long.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvArch {
    pub kind: ConvArchKind,
    pub layers: Vec<ArchLayer>,
    pub pooled_channels: usize,
}

fn conv(label: String, kernel: usize, in_channels: usize, out_channels: usize) -> ArchLayer {
    ArchLayer::Conv {
        label,
        spec: ConvLayerSpec {
            kernel,
            in_channels,
            out_channels,
        },
    }
}

fn bn(label: String, channels: usize) -> ArchLayer {
    ArchLayer::BatchNorm { label, channels }
}

impl ConvArch {
    /// Three conv blocks (128, k8), (256, k5), (128, k3), each with batch-norm.
    pub fn fcn(input_channels: usize) -> Self {
        let mut layers = Vec::new();
        let mut c_in = input_channels;
        for (i, (c_out, k)) in [(128, 8), (256, 5), (128, 3)].into_iter().enumerate() {
            layers.push(conv(format!("conv{}", i + 1), k, c_in, c_out));
            layers.push(bn(format!("bn{}", i + 1), c_out));
            c_in = c_out;
        }
        Self {
            kind: ConvArchKind::Fcn,
            layers,
            pooled_channels: 128,
        }
    }

    /// Three residual blocks of widths 64, 128, 128 with kernels 8, 5, 3 and a
    /// 1×1 conv + batch-norm shortcut on every block.
    pub fn resnet(input_channels: usize) -> Self {
        let mut layers = Vec::new();
        let mut c_in = input_channels;
        for (b, width) in [64, 128, 128].into_iter().enumerate() {
            let mut c = c_in;
            for (j, k) in [8, 5, 3].into_iter().enumerate() {
                layers.push(conv(format!("block{}.conv{}", b + 1, j + 1), k, c, width));
                layers.push(bn(format!("block{}.bn{}", b + 1, j + 1), width));
                c = width;
            }
            layers.push(conv(format!("block{}.shortcut", b + 1), 1, c_in, width));
            layers.push(bn(format!("block{}.shortcut_bn", b + 1), width));
            c_in = width;
        }
        Self {
            kind: ConvArchKind::ResNet,
            layers,
            pooled_channels: 128,
        }
    }

    pub fn of_kind(kind: ConvArchKind, input_channels: usize) -> Self {
        match kind {
            ConvArchKind::Fcn => Self::fcn(input_channels),
            ConvArchKind::ResNet => Self::resnet(input_channels),
        }
    }
}
