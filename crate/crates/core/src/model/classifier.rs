use super::{ModelError, ModelSpec};
use crate::data::Segment;
use crate::nn::{batch_cross_entropy, AffineParams, NnError, ParamTensors, RecurrentStack, StackTrace};
use crate::numeric::{softmax_in_place, RealMatrix, RngStream};

/// Every trainable tensor of one classifier. Gradients use the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    pub spec: ModelSpec,
    /// `3 → D_h`, ReLU, applied at every timestep.
    pub input_layer: AffineParams,
    pub recurrent: RecurrentStack,
    /// `dirs·D_h → C`, applied once to the encoding.
    pub output_layer: AffineParams,
}

/// Forward record of a batch, consumed by [`ClassifierParams::backward`].
#[derive(Clone, Debug)]
pub struct BatchTrace {
    pub seq_len: usize,
    pub batch: usize,
    inputs: RealMatrix,
    hidden_in: RealMatrix,
    stack: StackTrace,
    encoding: RealMatrix,
}

/// Stacks `B` sequences (`L × D` each) into time-major `(L·B) × D`, row `t·B + b`.
pub fn pack_time_major(seqs: &[&RealMatrix]) -> Result<RealMatrix, NnError> {
    let first = seqs
        .first()
        .ok_or_else(|| NnError::Dimension("empty batch".into()))?;
    let (l, d) = first.shape();
    if let Some(bad) = seqs.iter().find(|s| s.shape() != (l, d)) {
        return Err(NnError::Dimension(format!(
            "batch mixes {}x{} and {}x{} sequences",
            l,
            d,
            bad.rows(),
            bad.cols()
        )));
    }
    let b = seqs.len();
    let mut out = RealMatrix::zeros(l * b, d);
    for (j, s) in seqs.iter().enumerate() {
        for t in 0..l {
            out.row_mut(t * b + j).copy_from_slice(s.row(t));
        }
    }
    Ok(out)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl ClassifierParams {
    pub fn zeros(spec: ModelSpec) -> Self {
        let h = spec.hidden_dim;
        let dirs = spec.directions();
        Self {
            spec,
            input_layer: AffineParams::zeros(spec.input_dim(), h),
            recurrent: RecurrentStack::zeros(spec.variant, dirs, spec.num_layers, h, h),
            output_layer: AffineParams::zeros(dirs * h, spec.num_classes),
        }
    }

    /// Seeded initialization: input layer, then the recurrent stack, then
    /// the output layer, all from one stream.
    pub fn init(spec: ModelSpec, seed: u64) -> Self {
        Self::init_with(spec, &mut RngStream::new(seed))
    }

    pub fn init_with(spec: ModelSpec, rng: &mut RngStream) -> Self {
        let h = spec.hidden_dim;
        let dirs = spec.directions();
        let input_layer = AffineParams::init_uniform(spec.input_dim(), h, rng);
        let recurrent = RecurrentStack::init_uniform(spec.variant, dirs, spec.num_layers, h, h, rng);
        let output_layer = AffineParams::init_uniform(dirs * h, spec.num_classes, rng);
        Self {
            spec,
            input_layer,
            recurrent,
            output_layer,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.spec)
    }

    pub fn num_params(&self) -> usize {
        self.num_scalars()
    }

    /// Tensor names in file order, aligned with [`ParamTensors::tensors`].
    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["input.weight".to_owned(), "input.bias".to_owned()];
        for l in 0..self.spec.num_layers {
            for d in 0..self.spec.directions() {
                let dir = if d == 0 { "fwd" } else { "bwd" };
                for t in ["w_ih", "w_hh", "b_ih", "b_hh"] {
                    names.push(format!("rnn.l{l}.{dir}.{t}"));
                }
            }
        }
        names.push("output.weight".to_owned());
        names.push("output.bias".to_owned());
        names
    }

    /// Logits for a batch of equal-length `L × 3` sequences, with the trace
    /// needed for backpropagation.
    pub fn logits_batch(&self, seqs: &[&RealMatrix]) -> Result<(RealMatrix, BatchTrace), ModelError> {
        let inputs = pack_time_major(seqs)?;
        if inputs.cols() != self.spec.input_dim() {
            return Err(NnError::Dimension(format!(
                "sequences have {} features, model expects {}",
                inputs.cols(),
                self.spec.input_dim()
            ))
            .into());
        }
        let (seq_len, batch) = (seqs[0].rows(), seqs.len());
        let hidden_in = self.input_layer.forward(&inputs)?.map(|v| v.max(0.0));
        let (encoding, stack) = self.recurrent.forward(&hidden_in, seq_len, batch)?;
        let logits = self.output_layer.forward(&encoding)?;
        Ok((
            logits,
            BatchTrace {
                seq_len,
                batch,
                inputs,
                hidden_in,
                stack,
                encoding,
            },
        ))
    }

    /// Gradient of the loss given `d_logits = dL/d logits` (`B × C`).
    pub fn backward(&self, trace: &BatchTrace, d_logits: &RealMatrix) -> Result<ClassifierParams, ModelError> {
        let mut g = self.zeros_like();
        let d_enc = self.output_layer.backward(&trace.encoding, d_logits, &mut g.output_layer)?;
        let mut d_hidden = self.recurrent.backward(&trace.stack, &d_enc, &mut g.recurrent)?;
        for (d, &a) in d_hidden.as_mut_slice().iter_mut().zip(trace.hidden_in.as_slice()) {
            if a <= 0.0 {
                *d = 0.0;
            }
        }
        self.input_layer.backward(&trace.inputs, &d_hidden, &mut g.input_layer)?;
        Ok(g)
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(
        &self,
        seqs: &[&RealMatrix],
        labels: &[usize],
    ) -> Result<(f64, ClassifierParams), ModelError> {
        let (logits, trace) = self.logits_batch(seqs)?;
        let (loss, d_logits) = batch_cross_entropy(&logits, labels)?;
        Ok((loss, self.backward(&trace, &d_logits)?))
    }

    pub fn loss(&self, seqs: &[&RealMatrix], labels: &[usize]) -> Result<f64, ModelError> {
        let (logits, _) = self.logits_batch(seqs)?;
        Ok(batch_cross_entropy(&logits, labels)?.0)
    }

    /// Class probabilities (`1 × C`) for any `L × 3` sequence.
    pub fn forward_sequence(&self, seq: &RealMatrix) -> Result<RealMatrix, ModelError> {
        let (mut logits, _) = self.logits_batch(&[seq])?;
        softmax_in_place(logits.as_mut_slice());
        Ok(logits)
    }

    pub fn forward(&self, segment: &Segment) -> Result<RealMatrix, ModelError> {
        self.forward_sequence(segment.samples())
    }

    pub fn predict(&self, segment: &Segment) -> Result<usize, ModelError> {
        Ok(argmax(self.forward(segment)?.as_slice()))
    }

    /// Predictions for many segments, evaluated in chunks of `chunk`.
    /// Rows are processed independently, so the result equals per-segment
    /// [`predict`](Self::predict).
    pub fn predict_many(&self, segments: &[&Segment], chunk: usize) -> Result<Vec<usize>, ModelError> {
        let mut out = Vec::with_capacity(segments.len());
        for block in segments.chunks(chunk.max(1)) {
            let seqs: Vec<&RealMatrix> = block.iter().map(|s| s.samples()).collect();
            let (mut logits, _) = self.logits_batch(&seqs)?;
            for r in 0..logits.rows() {
                let row = logits.row_mut(r);
                softmax_in_place(row);
                out.push(argmax(row));
            }
        }
        Ok(out)
    }
}

impl ParamTensors for ClassifierParams {
    fn tensors(&self) -> Vec<&RealMatrix> {
        let mut v = self.input_layer.tensors();
        v.extend(self.recurrent.tensors());
        v.extend(self.output_layer.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut RealMatrix> {
        let mut v = self.input_layer.tensors_mut();
        v.extend(self.recurrent.tensors_mut());
        v.extend(self.output_layer.tensors_mut());
        v
    }
}
