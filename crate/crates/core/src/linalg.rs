//! Jittered Cholesky factorization and multivariate normal draws.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative jitter added to the diagonal on the first factorization attempt.
pub const JITTER_START: f64 = 1e-10;
/// Largest relative jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-4;

/// Cholesky factorization of `m + jitter * scale * I`, starting at
/// [`JITTER_START`] and escalating by factors of ten up to [`JITTER_MAX`].
pub fn jittered_cholesky(m: &DMatrix<f64>, scale: f64) -> Result<Cholesky<f64, Dyn>> {
    let scale = if scale > 0.0 && scale.is_finite() {
        scale
    } else {
        1.0
    };
    let mut rel = JITTER_START;
    loop {
        let mut a = m.clone();
        let jitter = rel * scale;
        for i in 0..a.nrows() {
            a[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(a) {
            return Ok(c);
        }
        if rel >= JITTER_MAX * (1.0 - 1e-9) {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        rel *= 10.0;
    }
}

/// A multivariate normal distribution stored as mean plus lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct MultivariateNormal {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
}

impl MultivariateNormal {
    /// `scale` sets the magnitude of the diagonal jitter (usually the prior
    /// signal variance).
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>, scale: f64) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.nrows(),
            });
        }
        let factor = jittered_cholesky(cov, scale)?.unpack();
        Ok(Self { mean, factor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let mut z = vec![0.0; self.dim()];
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut z, &mut out);
        DVector::from_vec(out)
    }

    /// Allocation-free draw; `scratch` and `out` must have length `dim()`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut [f64], out: &mut [f64]) {
        let n = self.dim();
        for z in scratch.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = self.mean[i];
            for (j, z) in scratch.iter().enumerate().take(i + 1) {
                acc += self.factor[(i, j)] * z;
            }
            *o = acc;
        }
    }
}
