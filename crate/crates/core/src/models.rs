//! Latent-function models other than a plain GP posterior.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gp::{GpPosterior, JointSampler};
use crate::linalg::MultivariateNormal;
use crate::maxdist::ParticleSet;

/// A Gaussian vector over `n` discrete points, exposed on the continuous
/// interval `[0, n)`: the input `x` maps to point `floor(x)`.
///
/// Uniform draws on the interval pick each point with probability `1/n`, so
/// running the particle algorithm on this model reproduces the discrete
/// setting of the pairwise limit analysis.
#[derive(Debug, Clone)]
pub struct DiscreteGp {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    scale: f64,
}

impl DiscreteGp {
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::InvalidConfig("empty discrete model".into()));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.nrows(),
            });
        }
        let scale = cov.diagonal().max().max(f64::MIN_POSITIVE);
        Ok(Self { mean, cov, scale })
    }

    /// Posterior of `gp` restricted to `grid`.
    pub fn from_posterior(gp: &GpPosterior, grid: &[Vec<f64>]) -> Result<Self> {
        let p = gp.predict(grid)?;
        let mut model = Self::from_moments(p.mean, p.cov)?;
        model.scale = gp.kernel().signal_variance;
        Ok(model)
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn domain(&self) -> Domain {
        Domain::interval(0.0, self.len() as f64).expect("nonempty model")
    }

    pub fn cell(&self, x: &[f64]) -> usize {
        (x[0].floor().max(0.0) as usize).min(self.len() - 1)
    }

    /// Weighted fraction of particles in each cell.
    pub fn cell_fractions(&self, particles: &ParticleSet) -> Result<Vec<f64>> {
        let total = particles.total_weight()?;
        let mut out = vec![0.0; self.len()];
        for (p, w) in particles.positions().iter().zip(particles.weights()) {
            out[self.cell(p)] += w / total;
        }
        Ok(out)
    }
}

impl JointSampler for DiscreteGp {
    fn dim(&self) -> usize {
        1
    }

    fn sample_joint<R: Rng + ?Sized>(&self, points: &[Vec<f64>], rng: &mut R) -> Result<Vec<f64>> {
        let cells: Vec<usize> = points.iter().map(|p| self.cell(p)).collect();
        let mut unique: Vec<usize> = Vec::with_capacity(cells.len());
        for c in &cells {
            if !unique.contains(c) {
                unique.push(*c);
            }
        }
        let k = unique.len();
        let mean = DVector::from_fn(k, |i, _| self.mean[unique[i]]);
        let cov = DMatrix::from_fn(k, k, |i, j| self.cov[(unique[i], unique[j])]);
        let draw = MultivariateNormal::new(mean, &cov, self.scale)?.sample(rng);
        Ok(cells
            .iter()
            .map(|c| {
                draw[unique
                    .iter()
                    .position(|u| u == c)
                    .expect("cell is in unique")]
            })
            .collect())
    }
}

/// A zero-variance model: every draw equals `f(x)`.
pub struct Deterministic<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Deterministic<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> JointSampler for Deterministic<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample_joint<R: Rng + ?Sized>(&self, points: &[Vec<f64>], _rng: &mut R) -> Result<Vec<f64>> {
        Ok(points.iter().map(|p| (self.f)(p)).collect())
    }
}
