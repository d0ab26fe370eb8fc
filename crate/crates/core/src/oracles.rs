//! Ground-truth references for the maximum distribution.
//!
//! * [`brute_force_max_distribution`]: histogram of the argmax of many joint
//!   posterior draws over a finite grid.
//! * [`discrete_limit_distribution`]: the stationary particle fractions of the
//!   particle algorithm with one uniform challenger per particle, obtained from
//!   the pairwise win probabilities `P_ij = Pr(f(x_i) > f(x_j))` by solving
//!   `(P - diag(1_n P)) p = 0`, `1^T p = 1`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::linalg::MultivariateNormal;
use crate::stats::normal_cdf;

/// A probability vector over a finite set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMaxDist {
    pub grid: Vec<Vec<f64>>,
    pub probabilities: Vec<f64>,
}

impl DiscreteMaxDist {
    pub fn new(grid: Vec<Vec<f64>>, probabilities: Vec<f64>) -> Result<Self> {
        if grid.len() != probabilities.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points but {} probabilities",
                grid.len(),
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| p.is_nan() || *p < 0.0) {
            return Err(Error::InvalidConfig("negative probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self {
            grid,
            probabilities,
        })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

const BRUTE_FORCE_CHUNK: usize = 8192;

/// Argmax histogram of `samples` joint posterior draws over `grid`.
/// Ties go to the lowest index.
pub fn brute_force_max_distribution<R: Rng + ?Sized>(
    gp: &GpPosterior,
    grid: &[Vec<f64>],
    samples: usize,
    rng: &mut R,
) -> Result<DiscreteMaxDist> {
    if grid.is_empty() || samples == 0 {
        return Err(Error::InvalidConfig(
            "brute force needs a nonempty grid and at least one sample".into(),
        ));
    }
    let mvn = gp.joint_distribution(grid)?;
    let probabilities = argmax_histogram(&mvn, samples, rng);
    DiscreteMaxDist::new(grid.to_vec(), probabilities)
}

/// Normalized argmax counts of `samples` draws from `mvn`, drawn in
/// parallel chunks with independent streams derived from `rng`.
pub fn argmax_histogram<R: Rng + ?Sized>(
    mvn: &MultivariateNormal,
    samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    let n = mvn.dim();
    let seed: u64 = rng.random();
    let chunks = samples.div_ceil(BRUTE_FORCE_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stream = ChaCha8Rng::seed_from_u64(seed);
            stream.set_stream(c as u64);
            let todo = BRUTE_FORCE_CHUNK.min(samples - c * BRUTE_FORCE_CHUNK);
            let mut counts = vec![0u64; n];
            let mut scratch = vec![0.0; n];
            let mut draw = vec![0.0; n];
            for _ in 0..todo {
                mvn.sample_into(&mut stream, &mut scratch, &mut draw);
                counts[argmax(&draw)] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    counts
        .into_iter()
        .map(|c| c as f64 / samples as f64)
        .collect()
}

/// Index of the first maximal element.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Pairwise win probabilities `P_ij = Pr(f(x_i) > f(x_j))`, diagonal 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseWinMatrix {
    grid: Vec<Vec<f64>>,
    p: DMatrix<f64>,
}

/// Below this pairwise difference variance the win probability is the step
/// function limit.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

impl PairwiseWinMatrix {
    pub fn from_moments(
        grid: Vec<Vec<f64>>,
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
    ) -> Result<Self> {
        let n = mean.len();
        if grid.len() != n || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::GridMismatch(format!(
                "grid of {} points, mean of {n}",
                grid.len()
            )));
        }
        let mut p = DMatrix::from_element(n, n, 0.5);
        for i in 0..n {
            for j in 0..i {
                let pij = win_probability(
                    mean[i],
                    mean[j],
                    cov[(i, i)] + cov[(j, j)] - 2.0 * cov[(i, j)],
                );
                p[(i, j)] = pij;
                p[(j, i)] = 1.0 - pij;
            }
        }
        Ok(Self { grid, p })
    }

    /// Wrap an arbitrary matrix without validation (see [`Self::validate`]).
    pub fn from_matrix_unchecked(grid: Vec<Vec<f64>>, p: DMatrix<f64>) -> Self {
        Self { grid, p }
    }

    pub fn grid(&self) -> &[Vec<f64>] {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.p.nrows() == 0
    }

    /// Largest violation of `P_ij + P_ji = 1` over `i != j`.
    pub fn antisymmetry_error(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.p[(i, j)] + self.p[(j, i)] - 1.0).abs());
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.p.ncols() != n || self.grid.len() != n {
            return Err(Error::InvalidWinMatrix("shape mismatch".into()));
        }
        if self.p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidWinMatrix("entry outside [0, 1]".into()));
        }
        if (0..n).any(|i| self.p[(i, i)] != 0.5) {
            return Err(Error::InvalidWinMatrix("diagonal must be 1/2".into()));
        }
        let err = self.antisymmetry_error();
        if err > 1e-12 {
            return Err(Error::InvalidWinMatrix(format!(
                "P_ij + P_ji deviates from 1 by {err:e}"
            )));
        }
        Ok(())
    }

    /// `(P - diag(1_n P))`: off-diagonal `P_ij`, diagonal `-sum_{k != i} P_ki`.
    pub fn balance_operator(&self) -> DMatrix<f64> {
        let mut a = self.p.clone();
        let col_sums: Vec<f64> = (0..self.len()).map(|j| self.p.column(j).sum()).collect();
        for (i, s) in col_sums.iter().enumerate() {
            a[(i, i)] -= s;
        }
        a
    }
}

/// `Phi((mu_i - mu_j) / sqrt(var))` with the step-function limit for
/// `var <= DEGENERATE_VARIANCE`.
pub fn win_probability(mu_i: f64, mu_j: f64, diff_variance: f64) -> f64 {
    if diff_variance <= DEGENERATE_VARIANCE {
        match mu_i.partial_cmp(&mu_j) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => 0.0,
            _ => 0.5,
        }
    } else {
        normal_cdf((mu_i - mu_j) / diff_variance.sqrt())
    }
}

pub fn pairwise_win_matrix(gp: &GpPosterior, grid: &[Vec<f64>]) -> Result<PairwiseWinMatrix> {
    for i in 1..grid.len() {
        if grid[..i].contains(&grid[i]) {
            return Err(Error::GridMismatch(format!("grid point {i} is repeated")));
        }
    }
    let pred = gp.predict(grid)?;
    PairwiseWinMatrix::from_moments(grid.to_vec(), &pred.mean, &pred.cov)
}

/// Least-squares solution of `[(P - diag(1_n P)); 1^T] p = [0; 1]`.
pub fn discrete_limit_distribution(win: &PairwiseWinMatrix) -> Result<DiscreteMaxDist> {
    win.validate()?;
    let n = win.len();
    let balance = win.balance_operator();
    let mut stacked = DMatrix::zeros(n + 1, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&balance);
    stacked.row_mut(n).fill(1.0);
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;

    let svd = stacked.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-12 * (n + 1) as f64;
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    if rank < n {
        return Err(Error::RankDeficient { rank, expected: n });
    }
    let p = svd
        .solve(&rhs, tol)
        .map_err(|e| Error::InvalidConfig(e.into()))?;
    let mut p: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    DiscreteMaxDist::new(win.grid.clone(), p)
}

/// `max_i |((P - diag(1_n P)) p)_i|`.
pub fn balance_residual(win: &PairwiseWinMatrix, p: &[f64]) -> f64 {
    (win.balance_operator() * DVector::from_column_slice(p)).amax()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionComparison {
    pub tv_distance: f64,
    /// `KL(a || b)` with both sides floored at `1e-12`.
    pub kl_divergence: f64,
    pub entropy_a: f64,
    pub entropy_b: f64,
}

const KL_FLOOR: f64 = 1e-12;

pub fn compare_distributions(
    a: &DiscreteMaxDist,
    b: &DiscreteMaxDist,
) -> Result<DistributionComparison> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(
            "distributions are defined on different grids".into(),
        ));
    }
    compare_probabilities(&a.probabilities, &b.probabilities)
}

/// As [`compare_distributions`] for bare probability vectors.
pub fn compare_probabilities(a: &[f64], b: &[f64]) -> Result<DistributionComparison> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!(
            "lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let tv_distance = 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let kl_divergence = a
        .iter()
        .zip(b)
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, y)| x * (x.max(KL_FLOOR) / y.max(KL_FLOOR)).ln())
        .sum();
    Ok(DistributionComparison {
        tv_distance,
        kl_divergence,
        entropy_a: entropy(a),
        entropy_b: entropy(b),
    })
}

pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|v| **v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
}
