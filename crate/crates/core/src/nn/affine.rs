use super::{NnError, ParamTensors};
use crate::numeric::{gemm_nn, gemm_nt, gemm_tn, RealMatrix, RngStream};

/// Fully connected layer `y = x · Wᵀ + b`, `W` is `D_out × D_in`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineParams {
    pub weight: RealMatrix,
    /// `1 × D_out`
    pub bias: RealMatrix,
}

impl AffineParams {
    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        Self {
            weight: RealMatrix::zeros(d_out, d_in),
            bias: RealMatrix::zeros(1, d_out),
        }
    }

    /// Uniform in `±1/√D_in`, weight then bias.
    pub fn init_uniform(d_in: usize, d_out: usize, rng: &mut RngStream) -> Self {
        let bound = 1.0 / (d_in as f64).sqrt();
        let mut p = Self::zeros(d_in, d_out);
        for t in p.tensors_mut() {
            for v in t.as_mut_slice() {
                *v = rng.uniform(-bound, bound);
            }
        }
        p
    }

    pub fn d_in(&self) -> usize {
        self.weight.cols()
    }

    pub fn d_out(&self) -> usize {
        self.weight.rows()
    }

    pub fn num_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&self, x: &RealMatrix) -> Result<RealMatrix, NnError> {
        if x.cols() != self.d_in() {
            return Err(NnError::Dimension(format!(
                "affine input has {} columns, layer expects {}",
                x.cols(),
                self.d_in()
            )));
        }
        let n = self.d_out();
        let mut out = RealMatrix::zeros(x.rows(), n);
        for r in 0..x.rows() {
            out.row_mut(r).copy_from_slice(self.bias.as_slice());
        }
        gemm_nt(x.as_slice(), x.rows(), self.d_in(), self.weight.as_slice(), n, out.as_mut_slice());
        Ok(out)
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(
        &self,
        x: &RealMatrix,
        d_out: &RealMatrix,
        grad: &mut AffineParams,
    ) -> Result<RealMatrix, NnError> {
        if x.cols() != self.d_in() || d_out.shape() != (x.rows(), self.d_out()) {
            return Err(NnError::TraceMismatch("affine trace does not match layer".into()));
        }
        let (m, n, k) = (x.rows(), self.d_out(), self.d_in());
        gemm_tn(d_out.as_slice(), m, n, x.as_slice(), k, grad.weight.as_mut_slice());
        grad.bias.add_assign(&d_out.sum_rows())?;
        let mut dx = RealMatrix::zeros(m, k);
        gemm_nn(d_out.as_slice(), m, n, self.weight.as_slice(), k, dx.as_mut_slice());
        Ok(dx)
    }
}

impl ParamTensors for AffineParams {
    fn tensors(&self) -> Vec<&RealMatrix> {
        vec![&self.weight, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut RealMatrix> {
        vec![&mut self.weight, &mut self.bias]
    }
}
