use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use super::{NumericError, RealMatrix};

/// Seeded xoshiro256** stream (state expanded from the seed with splitmix64).
///
/// Every derived quantity is defined on top of `next_u64` with fixed
/// arithmetic so that ports in other languages reproduce it exactly:
///
/// * `next_f64`: `(x >> 11) · 2⁻⁵³`, in `[0, 1)`
/// * `below(n)`: `(x · n) >> 64` (128-bit product)
/// * `gaussian`: Box–Muller, `√(−2 ln(1 − u₁)) · cos(2π u₂)`, one value per pair
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: Xoshiro256StarStar,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distribution {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, sigma: f64 },
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`. `n` must be nonzero.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    #[inline]
    pub fn gaussian(&mut self, mean: f64, sigma: f64) -> f64 {
        mean + sigma * self.standard_normal()
    }

    /// Fisher–Yates shuffle driven by [`RngStream::below`].
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn sample(
        &mut self,
        dist: Distribution,
        rows: usize,
        cols: usize,
    ) -> Result<RealMatrix, NumericError> {
        match dist {
            Distribution::Uniform { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(NumericError::InvalidDistribution(format!(
                        "uniform requires finite lo < hi, got ({lo}, {hi})"
                    )));
                }
                let data = (0..rows * cols).map(|_| self.uniform(lo, hi)).collect();
                RealMatrix::from_vec(rows, cols, data)
            }
            Distribution::Gaussian { mean, sigma } => {
                if !(sigma >= 0.0) || !sigma.is_finite() || !mean.is_finite() {
                    return Err(NumericError::InvalidDistribution(format!(
                        "gaussian requires finite mean and sigma >= 0, got ({mean}, {sigma})"
                    )));
                }
                let data = (0..rows * cols).map(|_| self.gaussian(mean, sigma)).collect();
                RealMatrix::from_vec(rows, cols, data)
            }
        }
    }

    pub fn uniform_matrix(
        &mut self,
        rows: usize,
        cols: usize,
        lo: f64,
        hi: f64,
    ) -> Result<RealMatrix, NumericError> {
        self.sample(Distribution::Uniform { lo, hi }, rows, cols)
    }
}
