use super::cell::{backward_direction, run_direction, CellParams, DirectionTrace, Variant};
use super::{NnError, ParamTensors};
use crate::numeric::{RealMatrix, RngStream};

/// Stacked uni- or bidirectional recurrent module.
///
/// `layers[l][d]` is direction `d` (0 forward, 1 backward) of layer `l`.
/// Layer 0 reads `input_dim` features; deeper layers read the per-timestep
/// outputs of the layer below, concatenated over directions.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentStack {
    pub variant: Variant,
    pub directions: usize,
    pub layers: Vec<Vec<CellParams>>,
}

#[derive(Clone, Debug)]
pub struct StackTrace {
    pub seq_len: usize,
    pub batch: usize,
    layers: Vec<Vec<DirectionTrace>>,
}

impl StackTrace {
    /// Per-timestep outputs of layer `l`, concatenated over directions.
    pub fn layer_outputs(&self, l: usize) -> RealMatrix {
        concat_directions(&self.layers[l])
    }
}

fn concat_directions(dirs: &[DirectionTrace]) -> RealMatrix {
    match dirs {
        [one] => one.outputs.clone(),
        [fwd, bwd] => fwd.outputs.hconcat(&bwd.outputs).expect("same row count"),
        _ => unreachable!("1 or 2 directions"),
    }
}

impl RecurrentStack {
    fn build(
        variant: Variant,
        directions: usize,
        num_layers: usize,
        input_dim: usize,
        hidden: usize,
        mut make: impl FnMut(usize) -> CellParams,
    ) -> Self {
        assert!(directions == 1 || directions == 2, "directions must be 1 or 2");
        assert!(num_layers >= 1, "at least one layer");
        let layers = (0..num_layers)
            .map(|l| {
                let d_in = if l == 0 { input_dim } else { directions * hidden };
                (0..directions).map(|_| make(d_in)).collect()
            })
            .collect();
        Self {
            variant,
            directions,
            layers,
        }
    }

    pub fn zeros(variant: Variant, directions: usize, num_layers: usize, input_dim: usize, hidden: usize) -> Self {
        Self::build(variant, directions, num_layers, input_dim, hidden, |d_in| {
            CellParams::zeros(variant, d_in, hidden)
        })
    }

    /// Layer-major, direction-minor draw order.
    pub fn init_uniform(
        variant: Variant,
        directions: usize,
        num_layers: usize,
        input_dim: usize,
        hidden: usize,
        rng: &mut RngStream,
    ) -> Self {
        Self::build(variant, directions, num_layers, input_dim, hidden, |d_in| {
            CellParams::init_uniform(variant, d_in, hidden, rng)
        })
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    pub fn hidden(&self) -> usize {
        self.layers[0][0].hidden()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0][0].input_dim()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn encoding_dim(&self) -> usize {
        self.directions * self.hidden()
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Runs a time-major batch (`(L·B) × D`) and returns the `B × dirs·H`
    /// encoding with its trace.
    ///
    /// The encoding is the top layer's final forward state, concatenated with
    /// the backward direction's final state (its output at `t = 0`) when
    /// bidirectional.
    pub fn forward(
        &self,
        inputs: &RealMatrix,
        seq_len: usize,
        batch: usize,
    ) -> Result<(RealMatrix, StackTrace), NnError> {
        if inputs.cols() != self.input_dim() {
            return Err(NnError::Dimension(format!(
                "recurrent input has {} features, stack expects {}",
                inputs.cols(),
                self.input_dim()
            )));
        }
        let mut traces: Vec<Vec<DirectionTrace>> = Vec::with_capacity(self.layers.len());
        for (l, cells) in self.layers.iter().enumerate() {
            let layer_in = if l == 0 {
                inputs.clone()
            } else {
                concat_directions(&traces[l - 1])
            };
            let dirs = cells
                .iter()
                .enumerate()
                .map(|(d, p)| run_direction(p, &layer_in, seq_len, batch, d == 1))
                .collect::<Result<Vec<_>, _>>()?;
            traces.push(dirs);
        }
        let top = traces.last().expect("non-empty stack");
        let last = seq_len - 1;
        let fwd = top[0].outputs.row_block(last * batch, (last + 1) * batch);
        let encoding = if self.directions == 2 {
            let bwd = top[1].outputs.row_block(0, batch);
            fwd.hconcat(&bwd)?
        } else {
            fwd
        };
        Ok((
            encoding,
            StackTrace {
                seq_len,
                batch,
                layers: traces,
            },
        ))
    }

    /// Single sequence (`L × D`) to its `1 × dirs·H` encoding.
    pub fn run_sequence(&self, inputs: &RealMatrix) -> Result<RealMatrix, NnError> {
        Ok(self.forward(inputs, inputs.rows(), 1)?.0)
    }

    /// Backpropagates `d_encoding` (`B × dirs·H`); parameter gradients are
    /// accumulated into `grad`, and `dL/d inputs` is returned.
    pub fn backward(
        &self,
        trace: &StackTrace,
        d_encoding: &RealMatrix,
        grad: &mut RecurrentStack,
    ) -> Result<RealMatrix, NnError> {
        let (l_len, b) = (trace.seq_len, trace.batch);
        let h = self.hidden();
        if trace.layers.len() != self.layers.len()
            || trace.layers.iter().any(|d| d.len() != self.directions)
            || grad.layers.len() != self.layers.len()
            || d_encoding.shape() != (b, self.encoding_dim())
        {
            return Err(NnError::TraceMismatch(
                "stack trace does not match parameters".into(),
            ));
        }

        // gradient w.r.t. each direction's per-timestep outputs of the current layer
        let mut d_out: Vec<RealMatrix> = vec![RealMatrix::zeros(l_len * b, h); self.directions];
        let last = l_len - 1;
        for s in 0..b {
            d_out[0].row_mut(last * b + s).copy_from_slice(&d_encoding.row(s)[..h]);
            if self.directions == 2 {
                d_out[1].row_mut(s).copy_from_slice(&d_encoding.row(s)[h..]);
            }
        }

        for l in (0..self.layers.len()).rev() {
            let mut d_in: Option<RealMatrix> = None;
            for d in 0..self.directions {
                let dx = backward_direction(
                    &self.layers[l][d],
                    &trace.layers[l][d],
                    &d_out[d],
                    &mut grad.layers[l][d],
                )?;
                match d_in.as_mut() {
                    Some(acc) => acc.add_assign(&dx)?,
                    None => d_in = Some(dx),
                }
            }
            let d_in = d_in.expect("at least one direction");
            if l == 0 {
                return Ok(d_in);
            }
            d_out = if self.directions == 2 {
                vec![d_in.columns(0, h), d_in.columns(h, 2 * h)]
            } else {
                vec![d_in]
            };
        }
        unreachable!("loop returns at layer 0")
    }
}

impl ParamTensors for RecurrentStack {
    fn tensors(&self) -> Vec<&RealMatrix> {
        self.layers.iter().flatten().flat_map(|c| c.tensors()).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut RealMatrix> {
        self.layers
            .iter_mut()
            .flatten()
            .flat_map(|c| c.tensors_mut())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::cell::{gru_step, lstm_step};

    #[test]
    fn length_one_is_a_single_step() {
        let mut rng = RngStream::new(1);
        let x = rng.uniform_matrix(1, 3, -1.0, 1.0).unwrap();
        let gru = RecurrentStack::init_uniform(Variant::Gru, 1, 1, 3, 5, &mut rng);
        let enc = gru.run_sequence(&x).unwrap();
        let step = gru_step(&gru.layers[0][0], &x, &RealMatrix::zeros(1, 5)).unwrap();
        assert_eq!(enc, step);
        let lstm = RecurrentStack::init_uniform(Variant::Lstm, 1, 1, 3, 5, &mut rng);
        let z = RealMatrix::zeros(1, 5);
        let (h, _) = lstm_step(&lstm.layers[0][0], &x, &z, &z).unwrap();
        assert_eq!(lstm.run_sequence(&x).unwrap(), h);
    }

    #[test]
    fn palindrome_with_mirrored_weights() {
        let mut rng = RngStream::new(2);
        let mut stack = RecurrentStack::init_uniform(Variant::Lstm, 2, 1, 3, 4, &mut rng);
        stack.layers[0][1] = stack.layers[0][0].clone();
        let half = rng.uniform_matrix(4, 3, -1.0, 1.0).unwrap();
        let mut pal = RealMatrix::zeros(8, 3);
        for t in 0..4 {
            pal.row_mut(t).copy_from_slice(half.row(t));
            pal.row_mut(7 - t).copy_from_slice(half.row(t));
        }
        let enc = stack.run_sequence(&pal).unwrap();
        assert_eq!(enc.columns(0, 4), enc.columns(4, 8));
    }

    #[test]
    fn two_layers_compose() {
        let mut rng = RngStream::new(3);
        let stack = RecurrentStack::init_uniform(Variant::Gru, 1, 2, 3, 6, &mut rng);
        let x = rng.uniform_matrix(20, 3, -1.0, 1.0).unwrap();
        let enc = stack.run_sequence(&x).unwrap();

        let first = RecurrentStack {
            variant: Variant::Gru,
            directions: 1,
            layers: vec![stack.layers[0].clone()],
        };
        let second = RecurrentStack {
            variant: Variant::Gru,
            directions: 1,
            layers: vec![stack.layers[1].clone()],
        };
        let (_, tr) = first.forward(&x, 20, 1).unwrap();
        let manual = second.run_sequence(&tr.layer_outputs(0)).unwrap();
        for (a, b) in enc.as_slice().iter().zip(manual.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn layer_two_input_width() {
        let s = RecurrentStack::zeros(Variant::Lstm, 2, 2, 32, 32);
        assert_eq!(s.layers[0][0].input_dim(), 32);
        assert_eq!(s.layers[1][1].input_dim(), 64);
        assert_eq!(s.encoding_dim(), 64);
    }

    #[test]
    fn zero_upstream_gradient() {
        let mut rng = RngStream::new(4);
        let s = RecurrentStack::init_uniform(Variant::Lstm, 2, 2, 3, 4, &mut rng);
        let x = rng.uniform_matrix(10, 3, -1.0, 1.0).unwrap();
        let (enc, tr) = s.forward(&x, 5, 2).unwrap();
        let mut g = s.zeros_like();
        let dx = s.backward(&tr, &RealMatrix::zeros(enc.rows(), enc.cols()), &mut g).unwrap();
        assert!(g.tensors().iter().all(|t| t.as_slice().iter().all(|&v| v == 0.0)));
        assert!(dx.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_rejects_foreign_trace() {
        let mut rng = RngStream::new(5);
        let one = RecurrentStack::init_uniform(Variant::Gru, 1, 1, 3, 4, &mut rng);
        let two = RecurrentStack::init_uniform(Variant::Gru, 1, 2, 3, 4, &mut rng);
        let x = rng.uniform_matrix(4, 3, -1.0, 1.0).unwrap();
        let (enc, tr) = one.forward(&x, 4, 1).unwrap();
        let mut g = two.zeros_like();
        assert!(matches!(
            two.backward(&tr, &enc, &mut g),
            Err(NnError::TraceMismatch(_))
        ));
    }
}
