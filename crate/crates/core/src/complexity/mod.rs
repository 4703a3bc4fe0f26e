//! Multiplication, parameter and memory accounting for the recurrent grid and
//! the convolutional reference models.
//!
//! Multiplications are those of one inference pass over one sample. Softmax,
//! exponentials and additions are not counted.

mod conv;
mod render;

pub use conv::{mults_conv, ArchLayer, ConvArch, ConvArchKind, ConvLayerSpec, LengthConvention};
pub use render::{render_breakdown_markdown, render_csv, render_markdown, CSV_HEADER};

use thiserror::Error;

use crate::data::AXES;
use crate::model::{ModelError, ModelSpec};
use crate::nn::Variant;

#[derive(Debug, Error)]
pub enum ComplexityError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Bytes per stored scalar (float32, as on the deployment target).
pub const BYTES_PER_SCALAR: u64 = 4;
/// Display unit for memory: mebibytes.
pub const BYTES_PER_MB: u64 = 1 << 20;

/// `D_in · D_out · L`
pub fn mults_perceptron(d_in: usize, d_out: usize, seq_len: usize) -> u64 {
    (d_in * d_out * seq_len) as u64
}

/// `(8·D_h² + 3·D_h)·L`, one direction of one layer, input width taken as `D_h`.
pub fn mults_lstm(hidden: usize, seq_len: usize) -> u64 {
    ((8 * hidden * hidden + 3 * hidden) * seq_len) as u64
}

/// `(6·D_h² + 3·D_h)·L`
pub fn mults_gru(hidden: usize, seq_len: usize) -> u64 {
    ((6 * hidden * hidden + 3 * hidden) * seq_len) as u64
}

pub fn mults_cell(variant: Variant, hidden: usize, seq_len: usize) -> u64 {
    match variant {
        Variant::Lstm => mults_lstm(hidden, seq_len),
        Variant::Gru => mults_gru(hidden, seq_len),
    }
}

/// Same count with the actual input width of the layer.
pub fn mults_cell_with_input(variant: Variant, input_dim: usize, hidden: usize, seq_len: usize) -> u64 {
    let g = variant.gates();
    ((g * hidden * (input_dim + hidden) + 3 * hidden) * seq_len) as u64
}

/// Input-to-hidden and hidden-to-hidden weights plus both bias vectors.
pub fn cell_params(variant: Variant, input_dim: usize, hidden: usize) -> u64 {
    let g = variant.gates();
    (g * hidden * (input_dim + hidden) + 2 * g * hidden) as u64
}

/// Something whose complexity can be analyzed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Rnn(ModelSpec),
    Conv(ConvArchKind),
}

impl Target {
    /// A grid name, `FCN` or `ResNet`.
    pub fn parse(name: &str, num_classes: usize) -> Result<Self, ComplexityError> {
        if let Some(kind) = ConvArchKind::parse(name) {
            return Ok(Target::Conv(kind));
        }
        ModelSpec::parse_name(name, num_classes)
            .map(Target::Rnn)
            .map_err(|e| ComplexityError::Usage(format!("{e} (or FCN, ResNet)")))
    }

    pub fn name(&self) -> String {
        match self {
            Target::Rnn(s) => s.name(),
            Target::Conv(k) => k.as_str().to_owned(),
        }
    }

    /// Table order: the 24 recurrent models, then FCN and ResNet.
    pub fn all(num_classes: usize) -> Vec<Target> {
        let mut v: Vec<Target> = ModelSpec::grid(num_classes).into_iter().map(Target::Rnn).collect();
        v.push(Target::Conv(ConvArchKind::Fcn));
        v.push(Target::Conv(ConvArchKind::ResNet));
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerCost {
    pub name: String,
    pub mult_ops: u64,
    /// Recurrent layers only differ from `mult_ops`: counted with the true
    /// input width (`dirs·D_h` for upper layers) instead of `D_h`.
    pub mult_ops_true_input: u64,
    pub params: u64,
    /// Output elements of this layer for one sample.
    pub activations: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityReport {
    pub model: String,
    pub seq_len: usize,
    pub num_classes: usize,
    pub convention: Option<LengthConvention>,
    pub mult_ops: u64,
    pub mult_ops_true_input: u64,
    pub params: u64,
    pub memory_bytes: u64,
    pub layers: Vec<LayerCost>,
}

fn round_div(n: u64, d: u64) -> u64 {
    (n + d / 2) / d
}

fn tenths(t: u64) -> String {
    format!("{}.{}", t / 10, t % 10)
}

impl ComplexityReport {
    fn assemble(
        model: String,
        seq_len: usize,
        num_classes: usize,
        convention: Option<LengthConvention>,
        input_elems: u64,
        layers: Vec<LayerCost>,
    ) -> Self {
        let mult_ops = layers.iter().map(|l| l.mult_ops).sum();
        let mult_ops_true_input = layers.iter().map(|l| l.mult_ops_true_input).sum();
        let params = layers.iter().map(|l| l.params).sum();
        let acts: u64 = layers.iter().map(|l| l.activations).sum();
        Self {
            model,
            seq_len,
            num_classes,
            convention,
            mult_ops,
            mult_ops_true_input,
            params,
            memory_bytes: memory_bytes(params, acts, input_elems),
            layers,
        }
    }

    /// Operations in tenths of a million, rounded half up.
    pub fn ops_tenths_m(&self) -> u64 {
        round_div(self.mult_ops, 100_000)
    }

    pub fn params_tenths_k(&self) -> u64 {
        round_div(self.params, 100)
    }

    pub fn memory_tenths_mb(&self) -> u64 {
        round_div(self.memory_bytes * 10, BYTES_PER_MB)
    }

    pub fn ops_display(&self) -> String {
        tenths(self.ops_tenths_m())
    }

    pub fn params_display(&self) -> String {
        tenths(self.params_tenths_k())
    }

    pub fn memory_display(&self) -> String {
        tenths(self.memory_tenths_mb())
    }

    pub fn memory_mb(&self) -> f64 {
        self.memory_bytes as f64 / BYTES_PER_MB as f64
    }

    pub fn activations(&self) -> u64 {
        self.layers.iter().map(|l| l.activations).sum()
    }
}

/// `4 · (P + 2·A + I)`: parameters, activations kept for the backward pass
/// (factor 2), and the input window.
pub fn memory_bytes(params: u64, activations: u64, input_elems: u64) -> u64 {
    BYTES_PER_SCALAR * (params + 2 * activations + input_elems)
}

pub fn count_params(spec: &ModelSpec) -> u64 {
    rnn_layers(spec, spec.seq_len()).iter().map(|l| l.params).sum()
}

pub fn count_conv_params(arch: &ConvArch, num_classes: usize) -> u64 {
    let body: u64 = arch
        .layers
        .iter()
        .map(|l| match l {
            ArchLayer::Conv { spec, .. } => spec.params(),
            ArchLayer::BatchNorm { channels, .. } => 2 * *channels as u64,
        })
        .sum();
    body + (arch.pooled_channels * num_classes + num_classes) as u64
}

pub fn estimate_memory(spec: &ModelSpec, seq_len: usize) -> u64 {
    analyze_rnn(spec, seq_len).memory_bytes
}

fn rnn_layers(spec: &ModelSpec, seq_len: usize) -> Vec<LayerCost> {
    let h = spec.hidden_dim;
    let dirs = spec.directions();
    let c = spec.num_classes;
    let l = seq_len;
    let d_x = spec.input_dim();
    let mut out = vec![LayerCost {
        name: "input".into(),
        mult_ops: mults_perceptron(d_x, h, l),
        mult_ops_true_input: mults_perceptron(d_x, h, l),
        params: (d_x * h + h) as u64,
        activations: (l * h) as u64,
    }];
    for layer in 0..spec.num_layers {
        let d_in = if layer == 0 { h } else { dirs * h };
        for d in 0..dirs {
            out.push(LayerCost {
                name: format!("rnn.l{layer}.{}", if d == 0 { "fwd" } else { "bwd" }),
                mult_ops: mults_cell(spec.variant, h, l),
                mult_ops_true_input: mults_cell_with_input(spec.variant, d_in, h, l),
                params: cell_params(spec.variant, d_in, h),
                activations: (l * h) as u64,
            });
        }
    }
    out.push(LayerCost {
        name: "output".into(),
        mult_ops: mults_perceptron(dirs * h, c, 1),
        mult_ops_true_input: mults_perceptron(dirs * h, c, 1),
        params: (dirs * h * c + c) as u64,
        activations: c as u64,
    });
    out
}

pub fn analyze_rnn(spec: &ModelSpec, seq_len: usize) -> ComplexityReport {
    ComplexityReport::assemble(
        spec.name(),
        seq_len,
        spec.num_classes,
        None,
        (seq_len * spec.input_dim()) as u64,
        rnn_layers(spec, seq_len),
    )
}

fn conv_layers(
    arch: &ConvArch,
    seq_len: usize,
    num_classes: usize,
    convention: LengthConvention,
) -> Result<Vec<LayerCost>, ComplexityError> {
    let mut out = Vec::new();
    let mut len = seq_len;
    for layer in &arch.layers {
        match layer {
            ArchLayer::Conv { label, spec } => {
                len = spec.output_len(seq_len, convention)?;
                let ops = mults_conv(spec, seq_len, convention)?;
                out.push(LayerCost {
                    name: label.clone(),
                    mult_ops: ops,
                    mult_ops_true_input: ops,
                    params: spec.params(),
                    activations: (len * spec.out_channels) as u64,
                });
            }
            ArchLayer::BatchNorm { label, channels } => out.push(LayerCost {
                name: label.clone(),
                mult_ops: 0,
                mult_ops_true_input: 0,
                params: 2 * *channels as u64,
                activations: (len * channels) as u64,
            }),
        }
    }
    out.push(LayerCost {
        name: "pool".into(),
        mult_ops: 0,
        mult_ops_true_input: 0,
        params: 0,
        activations: arch.pooled_channels as u64,
    });
    let linear = mults_perceptron(arch.pooled_channels, num_classes, 1);
    out.push(LayerCost {
        name: "output".into(),
        mult_ops: linear,
        mult_ops_true_input: linear,
        params: (arch.pooled_channels * num_classes + num_classes) as u64,
        activations: num_classes as u64,
    });
    Ok(out)
}

pub fn analyze_conv(
    arch: &ConvArch,
    seq_len: usize,
    num_classes: usize,
    convention: LengthConvention,
) -> Result<ComplexityReport, ComplexityError> {
    Ok(ComplexityReport::assemble(
        arch.kind.as_str().to_owned(),
        seq_len,
        num_classes,
        Some(convention),
        (seq_len * AXES) as u64,
        conv_layers(arch, seq_len, num_classes, convention)?,
    ))
}

pub fn analyze(
    target: &Target,
    seq_len: usize,
    num_classes: usize,
    convention: LengthConvention,
) -> Result<ComplexityReport, ComplexityError> {
    if seq_len == 0 {
        return Err(ComplexityError::Usage("seq_len must be positive".into()));
    }
    if num_classes < 2 {
        return Err(ComplexityError::Usage("need at least 2 classes".into()));
    }
    match target {
        Target::Rnn(spec) => {
            let spec = ModelSpec { num_classes, ..*spec };
            Ok(analyze_rnn(&spec, seq_len))
        }
        Target::Conv(kind) => analyze_conv(&ConvArch::of_kind(*kind, AXES), seq_len, num_classes, convention),
    }
}

pub fn analyze_name(
    name: &str,
    seq_len: usize,
    num_classes: usize,
    convention: LengthConvention,
) -> Result<ComplexityReport, ComplexityError> {
    analyze(&Target::parse(name, num_classes)?, seq_len, num_classes, convention)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassifierParams;
    use crate::nn::ParamTensors;

    fn report(name: &str) -> ComplexityReport {
        analyze_name(name, 256, 4, LengthConvention::Padded).unwrap()
    }

    #[test]
    fn formula_at_unit_scale() {
        assert_eq!(mults_perceptron(1, 1, 1), 1);
        assert_eq!(mults_perceptron(3, 64, 256), 49_152);
        assert_eq!(mults_perceptron(64, 4, 1), 256);
        assert_eq!(mults_lstm(1, 1), 11);
        assert_eq!(mults_gru(1, 1), 9);
        assert_eq!(mults_lstm(64, 256), 8_437_760);
        assert_eq!(mults_lstm(32, 256), 2_121_728);
        assert_eq!(mults_gru(64, 256), 6_340_608);
    }

    #[test]
    fn full_model_totals() {
        assert_eq!(report("uni-LSTM-1-64").mult_ops, 8_487_168);
        assert_eq!(report("uni-LSTM-1-32").mult_ops, 2_146_432);
        assert_eq!(report("uni-GRU-1-64").mult_ops, 6_390_016);
        assert_eq!(report("bi-GRU-2-128").ops_display(), "101.2");
        assert_eq!(report("bi-LSTM-2-128").ops_display(), "134.7");
        assert_eq!(report("uni-GRU-1-32").ops_display(), "1.6");
        assert_eq!(report("uni-GRU-1-32").params_display(), "6.6");
    }

    #[test]
    fn parameter_goldens() {
        assert_eq!(report("bi-LSTM-2-128").params, 660_996);
        assert_eq!(report("bi-LSTM-2-128").params_display(), "661.0");
        assert_eq!(report("uni-GRU-2-64").params, 50_436);
        assert_eq!(report("uni-GRU-1-64").params, 25_476);
        assert_eq!(report("bi-GRU-2-64").params, 125_188);
    }

    #[test]
    fn params_match_model_tensors() {
        for c in [3, 4] {
            for spec in ModelSpec::grid(c) {
                let p = ClassifierParams::zeros(spec);
                assert_eq!(count_params(&spec), p.num_scalars() as u64, "{spec}");
            }
        }
    }

    #[test]
    fn memory_formula() {
        let r = report("uni-GRU-1-64");
        assert_eq!(r.activations(), 64 * 256 * 2 + 4);
        assert_eq!(r.memory_bytes, 4 * (25_476 + 2 * 32_772 + 768));
        assert_eq!(r.memory_display(), "0.4");
    }

    #[test]
    fn conv_references() {
        let fcn = report("FCN");
        assert_eq!(fcn.mult_ops, 67_895_808);
        assert_eq!(fcn.params, 267_268);
        assert_eq!(fcn.ops_display(), "67.9");
        let valid = analyze_name("FCN", 256, 4, LengthConvention::Valid).unwrap();
        assert_eq!(valid.mult_ops, 67_022_336);
        assert_eq!(valid.ops_display(), "67.0");
        let res = report("ResNet");
        assert_eq!(res.ops_display(), "132.6");
        assert_eq!(res.params, 522_180);
        assert_eq!(count_conv_params(&ConvArch::resnet(3), 4), 522_180);
        assert_eq!(count_conv_params(&ConvArch::fcn(3), 4), 267_268);
    }

    #[test]
    fn upper_layer_true_width() {
        let r = report("bi-LSTM-2-32");
        let l1 = r.layers.iter().find(|l| l.name == "rnn.l1.fwd").unwrap();
        assert_eq!(l1.mult_ops, mults_lstm(32, 256));
        assert_eq!(l1.mult_ops_true_input, ((4 * 32 * 96 + 96) * 256) as u64);
        let l0 = r.layers.iter().find(|l| l.name == "rnn.l0.bwd").unwrap();
        assert_eq!(l0.mult_ops, l0.mult_ops_true_input);
    }

    #[test]
    fn bad_names() {
        assert!(matches!(Target::parse("uni-RNN-3-64", 4), Err(ComplexityError::Usage(_))));
        assert!(Target::parse("fcn", 4).is_err());
        assert_eq!(Target::all(4).len(), 26);
    }
}
