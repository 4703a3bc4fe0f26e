//! Gated recurrent cells and single-direction sequence runs with BPTT.
//!
//! Weight blocks are stacked row-wise: LSTM `(i, f, g, o)`, GRU `(r, z, n)`.
//! Each cell carries two bias vectors, `b_ih` and `b_hh`.
//!
//! Sequence batches are time-major row blocks: row `t · B + b` of an
//! `(L·B) × D` matrix is timestep `t` of sample `b`.

use super::{NnError, ParamTensors};
use crate::numeric::{gemm_nn, gemm_nt, gemm_tn, sigmoid, RealMatrix, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Lstm,
    Gru,
}

impl Variant {
    /// Gate blocks per cell.
    pub fn gates(self) -> usize {
        match self {
            Variant::Lstm => 4,
            Variant::Gru => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Lstm => "LSTM",
            Variant::Gru => "GRU",
        }
    }
}

/// Parameters of one LSTM or GRU cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellParams {
    pub variant: Variant,
    /// `gates·H × D_in`
    pub w_ih: RealMatrix,
    /// `gates·H × H`
    pub w_hh: RealMatrix,
    /// `1 × gates·H`
    pub b_ih: RealMatrix,
    /// `1 × gates·H`
    pub b_hh: RealMatrix,
}

/// LSTM cell, gate order `(i, f, g, o)`.
pub type LstmCellParams = CellParams;
/// GRU cell, gate order `(r, z, n)`.
pub type GruCellParams = CellParams;

impl CellParams {
    pub fn zeros(variant: Variant, input_dim: usize, hidden: usize) -> Self {
        let gh = variant.gates() * hidden;
        Self {
            variant,
            w_ih: RealMatrix::zeros(gh, input_dim),
            w_hh: RealMatrix::zeros(gh, hidden),
            b_ih: RealMatrix::zeros(1, gh),
            b_hh: RealMatrix::zeros(1, gh),
        }
    }

    /// Every entry uniform in `±1/√hidden`, drawn in the order
    /// `w_ih, w_hh, b_ih, b_hh` (row-major).
    pub fn init_uniform(variant: Variant, input_dim: usize, hidden: usize, rng: &mut RngStream) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut p = Self::zeros(variant, input_dim, hidden);
        for t in p.tensors_mut() {
            for v in t.as_mut_slice() {
                *v = rng.uniform(-bound, bound);
            }
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.cols()
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn check(&self) -> Result<(), NnError> {
        let h = self.hidden();
        let gh = self.variant.gates() * h;
        if self.w_ih.rows() != gh
            || self.w_hh.shape() != (gh, h)
            || self.b_ih.shape() != (1, gh)
            || self.b_hh.shape() != (1, gh)
        {
            return Err(NnError::Dimension(format!(
                "inconsistent {} cell blocks for hidden size {h}",
                self.variant.as_str()
            )));
        }
        Ok(())
    }
}

impl ParamTensors for CellParams {
    fn tensors(&self) -> Vec<&RealMatrix> {
        vec![&self.w_ih, &self.w_hh, &self.b_ih, &self.b_hh]
    }

    fn tensors_mut(&mut self) -> Vec<&mut RealMatrix> {
        vec![&mut self.w_ih, &mut self.w_hh, &mut self.b_ih, &mut self.b_hh]
    }
}

fn expect_shape(what: &str, m: &RealMatrix, rows: usize, cols: usize) -> Result<(), NnError> {
    if m.shape() != (rows, cols) {
        return Err(NnError::Dimension(format!(
            "{what}: expected {rows}x{cols}, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// `x · Wᵀ + b` for every row of `x`, written into `out`.
fn project(x: &[f64], rows: usize, w: &RealMatrix, b: &RealMatrix, out: &mut [f64]) {
    let n = w.rows();
    for r in 0..rows {
        out[r * n..(r + 1) * n].copy_from_slice(b.as_slice());
    }
    gemm_nt(x, rows, w.cols(), w.as_slice(), n, out);
}

/// One LSTM step on a batch: `x` is `B × D_in`, states are `B × H`.
pub fn lstm_step(
    p: &CellParams,
    x: &RealMatrix,
    h_prev: &RealMatrix,
    c_prev: &RealMatrix,
) -> Result<(RealMatrix, RealMatrix), NnError> {
    if p.variant != Variant::Lstm {
        return Err(NnError::Dimension("lstm_step called with GRU parameters".into()));
    }
    p.check()?;
    let (b, h) = (x.rows(), p.hidden());
    expect_shape("x_t", x, b, p.input_dim())?;
    expect_shape("h_prev", h_prev, b, h)?;
    expect_shape("c_prev", c_prev, b, h)?;
    let mut gi = vec![0.0; b * 4 * h];
    project(x.as_slice(), b, &p.w_ih, &p.b_ih, &mut gi);
    let mut gates = vec![0.0; b * 4 * h];
    let mut hh = RealMatrix::zeros(b, h);
    let mut cc = RealMatrix::zeros(b, h);
    lstm_cell(
        p,
        &gi,
        h_prev.as_slice(),
        c_prev.as_slice(),
        b,
        &mut gates,
        cc.as_mut_slice(),
        hh.as_mut_slice(),
    );
    Ok((hh, cc))
}

/// One GRU step on a batch.
pub fn gru_step(p: &CellParams, x: &RealMatrix, h_prev: &RealMatrix) -> Result<RealMatrix, NnError> {
    if p.variant != Variant::Gru {
        return Err(NnError::Dimension("gru_step called with LSTM parameters".into()));
    }
    p.check()?;
    let (b, h) = (x.rows(), p.hidden());
    expect_shape("x_t", x, b, p.input_dim())?;
    expect_shape("h_prev", h_prev, b, h)?;
    let mut gi = vec![0.0; b * 3 * h];
    project(x.as_slice(), b, &p.w_ih, &p.b_ih, &mut gi);
    let mut gates = vec![0.0; b * 3 * h];
    let mut hh_n = vec![0.0; b * h];
    let mut out = RealMatrix::zeros(b, h);
    gru_cell(p, &gi, h_prev.as_slice(), b, &mut gates, &mut hh_n, out.as_mut_slice());
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn lstm_cell(
    p: &CellParams,
    gi: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    batch: usize,
    gates: &mut [f64],
    c_out: &mut [f64],
    h_out: &mut [f64],
) {
    let h = p.hidden();
    let g4 = 4 * h;
    project(h_prev, batch, &p.w_hh, &p.b_hh, gates);
    for b in 0..batch {
        let row = &mut gates[b * g4..(b + 1) * g4];
        let gir = &gi[b * g4..(b + 1) * g4];
        for (a, &x) in row.iter_mut().zip(gir) {
            *a += x;
        }
        for j in 0..h {
            let i = sigmoid(row[j]);
            let f = sigmoid(row[h + j]);
            let g = row[2 * h + j].tanh();
            let o = sigmoid(row[3 * h + j]);
            row[j] = i;
            row[h + j] = f;
            row[2 * h + j] = g;
            row[3 * h + j] = o;
            let c = f * c_prev[b * h + j] + i * g;
            c_out[b * h + j] = c;
            h_out[b * h + j] = o * c.tanh();
        }
    }
}

fn gru_cell(
    p: &CellParams,
    gi: &[f64],
    h_prev: &[f64],
    batch: usize,
    gates: &mut [f64],
    hh_n: &mut [f64],
    h_out: &mut [f64],
) {
    let h = p.hidden();
    let g3 = 3 * h;
    project(h_prev, batch, &p.w_hh, &p.b_hh, gates);
    for b in 0..batch {
        let row = &mut gates[b * g3..(b + 1) * g3];
        let gir = &gi[b * g3..(b + 1) * g3];
        for j in 0..h {
            let r = sigmoid(gir[j] + row[j]);
            let z = sigmoid(gir[h + j] + row[h + j]);
            let hn = row[2 * h + j];
            let n = (gir[2 * h + j] + r * hn).tanh();
            hh_n[b * h + j] = hn;
            row[j] = r;
            row[h + j] = z;
            row[2 * h + j] = n;
            let hp = h_prev[b * h + j];
            h_out[b * h + j] = (1.0 - z) * n + z * hp;
        }
    }
}

/// Forward record of one direction of one layer.
#[derive(Clone, Debug)]
pub struct DirectionTrace {
    pub reverse: bool,
    pub seq_len: usize,
    pub batch: usize,
    /// `(L·B) × D_in`
    pub inputs: RealMatrix,
    /// `(L·B) × H`, indexed by original timestep
    pub outputs: RealMatrix,
    /// `(L·B) × gates·H`, activated gate values
    gates: RealMatrix,
    /// LSTM cell states or GRU `W_hh^n h + b_hh^n`, `(L·B) × H`
    aux: RealMatrix,
}

impl DirectionTrace {
    fn order(&self) -> Box<dyn Iterator<Item = usize>> {
        order(self.seq_len, self.reverse)
    }

    /// Timestep whose output feeds step `t` as its previous state.
    fn prev(&self, t: usize) -> Option<usize> {
        if self.reverse {
            (t + 1 < self.seq_len).then_some(t + 1)
        } else {
            t.checked_sub(1)
        }
    }
}

fn order(seq_len: usize, reverse: bool) -> Box<dyn Iterator<Item = usize>> {
    if reverse {
        Box::new((0..seq_len).rev())
    } else {
        Box::new(0..seq_len)
    }
}

/// Runs one cell over a time-major batch, from zero initial state.
/// `reverse` consumes timesteps `L-1, …, 0`.
pub fn run_direction(
    p: &CellParams,
    inputs: &RealMatrix,
    seq_len: usize,
    batch: usize,
    reverse: bool,
) -> Result<DirectionTrace, NnError> {
    p.check()?;
    let h = p.hidden();
    let gh = p.variant.gates() * h;
    expect_shape("sequence input", inputs, seq_len * batch, p.input_dim())?;
    if seq_len == 0 || batch == 0 {
        return Err(NnError::Dimension("empty sequence batch".into()));
    }
    let mut gi = vec![0.0; seq_len * batch * gh];
    project(inputs.as_slice(), seq_len * batch, &p.w_ih, &p.b_ih, &mut gi);

    let mut outputs = RealMatrix::zeros(seq_len * batch, h);
    let mut gates = RealMatrix::zeros(seq_len * batch, gh);
    let mut aux = RealMatrix::zeros(seq_len * batch, h);
    let zeros = vec![0.0; batch * h];
    let mut prev: Option<usize> = None;
    for t in order(seq_len, reverse) {
        let bh = batch * h;
        let (h_prev, c_prev): (Vec<f64>, Vec<f64>) = match prev {
            Some(s) => (
                outputs.as_slice()[s * bh..(s + 1) * bh].to_vec(),
                aux.as_slice()[s * bh..(s + 1) * bh].to_vec(),
            ),
            None => (zeros.clone(), zeros.clone()),
        };
        let gi_t = &gi[t * batch * gh..(t + 1) * batch * gh];
        let gates_t = &mut gates.as_mut_slice()[t * batch * gh..(t + 1) * batch * gh];
        let mut h_t = vec![0.0; bh];
        let mut aux_t = vec![0.0; bh];
        match p.variant {
            Variant::Lstm => lstm_cell(p, gi_t, &h_prev, &c_prev, batch, gates_t, &mut aux_t, &mut h_t),
            Variant::Gru => gru_cell(p, gi_t, &h_prev, batch, gates_t, &mut aux_t, &mut h_t),
        }
        outputs.as_mut_slice()[t * bh..(t + 1) * bh].copy_from_slice(&h_t);
        aux.as_mut_slice()[t * bh..(t + 1) * bh].copy_from_slice(&aux_t);
        prev = Some(t);
    }
    Ok(DirectionTrace {
        reverse,
        seq_len,
        batch,
        inputs: inputs.clone(),
        outputs,
        gates,
        aux,
    })
}

/// Backpropagates `d_outputs` (`(L·B) × H`, gradient of the loss w.r.t. every
/// emitted hidden state) through the recorded run. Parameter gradients are
/// accumulated into `grad`; the gradient w.r.t. the inputs is returned.
pub fn backward_direction(
    p: &CellParams,
    trace: &DirectionTrace,
    d_outputs: &RealMatrix,
    grad: &mut CellParams,
) -> Result<RealMatrix, NnError> {
    let h = p.hidden();
    let gh = p.variant.gates() * h;
    let (l, b) = (trace.seq_len, trace.batch);
    if trace.outputs.shape() != (l * b, h)
        || trace.inputs.cols() != p.input_dim()
        || grad.variant != p.variant
        || grad.w_ih.shape() != p.w_ih.shape()
        || grad.w_hh.shape() != p.w_hh.shape()
    {
        return Err(NnError::TraceMismatch(
            "direction trace does not match cell parameters".into(),
        ));
    }
    expect_shape("d_outputs", d_outputs, l * b, h)?;

    let bh = b * h;
    let mut d_gi = vec![0.0; l * b * gh];
    let mut d_gh = vec![0.0; b * gh];
    let mut dh_next = vec![0.0; bh];
    let mut dc_next = vec![0.0; bh];
    let zeros = vec![0.0; bh];
    let outputs = trace.outputs.as_slice();
    let aux = trace.aux.as_slice();
    let gates = trace.gates.as_slice();
    let order: Vec<usize> = trace.order().collect();

    for &t in order.iter().rev() {
        let prev = trace.prev(t);
        let h_prev = prev.map_or(&zeros[..], |s| &outputs[s * bh..(s + 1) * bh]);
        let g_t = &gates[t * b * gh..(t + 1) * b * gh];
        let dgi_t = &mut d_gi[t * b * gh..(t + 1) * b * gh];
        let d_out_t = &d_outputs.as_slice()[t * bh..(t + 1) * bh];
        let mut dh_prev = vec![0.0; bh];

        match p.variant {
            Variant::Lstm => {
                let c_t = &aux[t * bh..(t + 1) * bh];
                let c_prev = prev.map_or(&zeros[..], |s| &aux[s * bh..(s + 1) * bh]);
                for s in 0..b {
                    let g = &g_t[s * gh..(s + 1) * gh];
                    for j in 0..h {
                        let k = s * h + j;
                        let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                        let dh = d_out_t[k] + dh_next[k];
                        let tc = c_t[k].tanh();
                        let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
                        let row = &mut dgi_t[s * gh..(s + 1) * gh];
                        row[j] = dc * gg * i * (1.0 - i);
                        row[h + j] = dc * c_prev[k] * f * (1.0 - f);
                        row[2 * h + j] = dc * i * (1.0 - gg * gg);
                        row[3 * h + j] = dh * tc * o * (1.0 - o);
                        dc_next[k] = dc * f;
                    }
                }
                d_gh.copy_from_slice(dgi_t);
            }
            Variant::Gru => {
                let hh_n = &aux[t * bh..(t + 1) * bh];
                for s in 0..b {
                    let g = &g_t[s * gh..(s + 1) * gh];
                    let row = &mut dgi_t[s * gh..(s + 1) * gh];
                    let rowh = &mut d_gh[s * gh..(s + 1) * gh];
                    for j in 0..h {
                        let k = s * h + j;
                        let (r, z, n) = (g[j], g[h + j], g[2 * h + j]);
                        let dh = d_out_t[k] + dh_next[k];
                        let dn = dh * (1.0 - z);
                        let dz = dh * (h_prev[k] - n);
                        dh_prev[k] = dh * z;
                        let da_n = dn * (1.0 - n * n);
                        let da_r = da_n * hh_n[k] * r * (1.0 - r);
                        let da_z = dz * z * (1.0 - z);
                        row[j] = da_r;
                        row[h + j] = da_z;
                        row[2 * h + j] = da_n;
                        rowh[j] = da_r;
                        rowh[h + j] = da_z;
                        rowh[2 * h + j] = da_n * r;
                    }
                }
            }
        }

        gemm_tn(&d_gh, b, gh, h_prev, h, grad.w_hh.as_mut_slice());
        for s in 0..b {
            for (acc, &v) in grad.b_hh.as_mut_slice().iter_mut().zip(&d_gh[s * gh..(s + 1) * gh]) {
                *acc += v;
            }
        }
        gemm_nn(&d_gh, b, gh, p.w_hh.as_slice(), h, &mut dh_prev);
        dh_next = dh_prev;
    }

    let rows = l * b;
    gemm_tn(&d_gi, rows, gh, trace.inputs.as_slice(), p.input_dim(), grad.w_ih.as_mut_slice());
    for r in 0..rows {
        for (acc, &v) in grad.b_ih.as_mut_slice().iter_mut().zip(&d_gi[r * gh..(r + 1) * gh]) {
            *acc += v;
        }
    }
    let mut d_in = RealMatrix::zeros(rows, p.input_dim());
    gemm_nn(&d_gi, rows, gh, p.w_ih.as_slice(), p.input_dim(), d_in.as_mut_slice());
    Ok(d_in)
}
