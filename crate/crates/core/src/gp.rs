//! Exact Gaussian process regression.
//!
//! The posterior over test inputs `X*` given noisy observations `y` at `X` is
//!
//! ```text
//! mu*  = m* + K*^T (K + Sn)^-1 (y - m)
//! S**  = K** - K*^T (K + Sn)^-1 K*
//! ```
//!
//! with `Sn = noise_std^2 I`. The Gram matrix is factorized once, with the
//! diagonal jitter policy of [`crate::linalg::jittered_cholesky`].

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jittered_cholesky, MultivariateNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    #[default]
    SquaredExponential,
}

/// Covariance function plus constant prior mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(default)]
    pub family: KernelFamily,
    pub signal_variance: f64,
    pub length_scales: Vec<f64>,
    #[serde(default)]
    pub prior_mean: f64,
}

impl KernelSpec {
    pub fn squared_exponential(signal_variance: f64, length_scales: Vec<f64>) -> Result<Self> {
        let spec = Self {
            family: KernelFamily::SquaredExponential,
            signal_variance,
            length_scales,
            prior_mean: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_prior_mean(mut self, prior_mean: f64) -> Self {
        self.prior_mean = prior_mean;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if self.length_scales.is_empty() {
            return Err(Error::InvalidKernel("no length scales".into()));
        }
        if let Some(l) = self
            .length_scales
            .iter()
            .find(|l| !(**l > 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidKernel(format!(
                "length scale must be positive, got {l}"
            )));
        }
        if !self.prior_mean.is_finite() {
            return Err(Error::InvalidKernel("prior mean must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    /// `k(a, b)`; callers guarantee matching dimensions.
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.family {
            KernelFamily::SquaredExponential => {
                let r2: f64 = a
                    .iter()
                    .zip(b)
                    .zip(&self.length_scales)
                    .map(|((x, y), l)| {
                        let d = (x - y) / l;
                        d * d
                    })
                    .sum();
                self.signal_variance * (-0.5 * r2).exp()
            }
        }
    }

    fn check_points(&self, pts: &[Vec<f64>]) -> Result<()> {
        match pts.iter().find(|p| p.len() != self.dim()) {
            Some(p) => Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: p.len(),
            }),
            None => Ok(()),
        }
    }
}

/// Covariance matrix `k(A_i, B_j)` between two point sets.
pub fn kernel_eval(spec: &KernelSpec, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    spec.check_points(a)?;
    spec.check_points(b)?;
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        spec.eval(&a[i], &b[j])
    }))
}

/// Noisy observations `y_i = f(x_i) + eps`, `eps ~ N(0, noise_std^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    pub noise_std: f64,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>, noise_std: f64) -> Result<Self> {
        let data = Self {
            inputs,
            outputs,
            noise_std,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn empty(noise_std: f64) -> Self {
        Self {
            inputs: Vec::new(),
            outputs: Vec::new(),
            noise_std,
        }
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) {
        self.inputs.push(x);
        self.outputs.push(y);
    }

    /// Largest observed output, if any.
    pub fn best_output(&self) -> Option<f64> {
        self.outputs.iter().copied().reduce(f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.outputs.len() {
            return Err(Error::InvalidDataset(format!(
                "{} inputs but {} outputs",
                self.inputs.len(),
                self.outputs.len()
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "noise std {} must be >= 0",
                self.noise_std
            )));
        }
        if self.outputs.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidDataset("non-finite output".into()));
        }
        Ok(())
    }

    pub fn check_within(&self, domain: &crate::Domain) -> Result<()> {
        for (i, x) in self.inputs.iter().enumerate() {
            if !domain.contains(x) {
                return Err(Error::InvalidDataset(format!(
                    "input {i} lies outside the domain"
                )));
            }
        }
        Ok(())
    }
}

/// Posterior mean vector and covariance matrix over a set of test points.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Anything that can produce one joint draw of latent function values at a
/// finite set of points. Repeated points must receive identical values.
pub trait JointSampler: Sync {
    fn dim(&self) -> usize;

    fn sample_joint<R: Rng + ?Sized>(&self, points: &[Vec<f64>], rng: &mut R) -> Result<Vec<f64>>;
}

/// A GP conditioned on a dataset. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    kernel: KernelSpec,
    data: Dataset,
    factor: Option<Cholesky<f64, Dyn>>,
    /// `(K + Sn)^-1 (y - m)`
    weights: DVector<f64>,
}

/// Condition `prior` on `data`.
pub fn posterior(prior: &KernelSpec, data: &Dataset) -> Result<GpPosterior> {
    GpPosterior::new(prior.clone(), data.clone())
}

impl GpPosterior {
    pub fn new(kernel: KernelSpec, data: Dataset) -> Result<Self> {
        kernel.validate()?;
        data.validate()?;
        kernel.check_points(&data.inputs)?;
        if data.is_empty() {
            return Ok(Self {
                kernel,
                data,
                factor: None,
                weights: DVector::zeros(0),
            });
        }
        if data.noise_std == 0.0 {
            for i in 1..data.len() {
                if data.inputs[..i].contains(&data.inputs[i]) {
                    return Err(Error::DuplicateInput { index: i });
                }
            }
        }
        let mut gram = kernel_eval(&kernel, &data.inputs, &data.inputs)?;
        let noise_var = data.noise_std * data.noise_std;
        for i in 0..data.len() {
            gram[(i, i)] += noise_var;
        }
        let factor = jittered_cholesky(&gram, kernel.signal_variance)?;
        let residual = DVector::from_iterator(
            data.len(),
            data.outputs.iter().map(|y| y - kernel.prior_mean),
        );
        let weights = factor.solve(&residual);
        Ok(Self {
            kernel,
            data,
            factor: Some(factor),
            weights,
        })
    }

    /// The unconditioned prior.
    pub fn prior(kernel: KernelSpec, noise_std: f64) -> Result<Self> {
        Self::new(kernel, Dataset::empty(noise_std))
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Joint posterior mean and covariance at `points`.
    pub fn predict(&self, points: &[Vec<f64>]) -> Result<Prediction> {
        self.kernel.check_points(points)?;
        let m = points.len();
        let mut mean = DVector::from_element(m, self.kernel.prior_mean);
        let mut cov = kernel_eval(&self.kernel, points, points)?;
        if let Some(factor) = &self.factor {
            let cross = kernel_eval(&self.kernel, &self.data.inputs, points)?;
            mean += cross.tr_mul(&self.weights);
            let v = factor
                .l_dirty()
                .solve_lower_triangular(&cross)
                .expect("cholesky factor has a nonzero diagonal");
            cov -= v.tr_mul(&v);
        }
        // symmetrize away round-off
        for i in 0..m {
            for j in 0..i {
                let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = s;
                cov[(j, i)] = s;
            }
        }
        Ok(Prediction { mean, cov })
    }

    /// Posterior mean and variance at a single point; the variance is clamped at 0.
    pub fn predict_point(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.kernel.dim(),
                found: x.len(),
            });
        }
        let prior_var = self.kernel.signal_variance;
        let Some(factor) = &self.factor else {
            return Ok((self.kernel.prior_mean, prior_var));
        };
        let cross = DVector::from_iterator(
            self.data.len(),
            self.data.inputs.iter().map(|xi| self.kernel.eval(xi, x)),
        );
        let mean = self.kernel.prior_mean + cross.dot(&self.weights);
        let v = factor
            .l_dirty()
            .solve_lower_triangular(&cross)
            .expect("cholesky factor has a nonzero diagonal");
        let var = (self.kernel.eval(x, x) - v.norm_squared()).max(0.0);
        Ok((mean, var))
    }

    /// Joint normal distribution over `points` with its covariance factorized.
    pub fn joint_distribution(&self, points: &[Vec<f64>]) -> Result<MultivariateNormal> {
        let p = self.predict(points)?;
        MultivariateNormal::new(p.mean, &p.cov, self.kernel.signal_variance)
    }
}

impl JointSampler for GpPosterior {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn sample_joint<R: Rng + ?Sized>(&self, points: &[Vec<f64>], rng: &mut R) -> Result<Vec<f64>> {
        if points.is_empty() {
            return Err(Error::InvalidConfig(
                "sample_joint needs at least one point".into(),
            ));
        }
        let (unique, slot) = dedup_points(points);
        let draw = self.joint_distribution(&unique)?.sample(rng);
        Ok(slot.iter().map(|&k| draw[k]).collect())
    }
}

/// Exact-duplicate removal: returns the distinct points and, for every input
/// point, the index of its representative.
pub(crate) fn dedup_points(points: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut unique: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    let mut slot = Vec::with_capacity(points.len());
    for p in points {
        match unique.iter().position(|u| u == p) {
            Some(k) => slot.push(k),
            None => {
                slot.push(unique.len());
                unique.push(p.clone());
            }
        }
    }
    (unique, slot)
}
