use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A compact axis-aligned box `[lower, upper]` in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawDomain> for Domain {
    type Error = Error;

    fn try_from(raw: RawDomain) -> Result<Self> {
        Domain::new(raw.lower, raw.upper)
    }
}

impl From<Domain> for RawDomain {
    fn from(d: Domain) -> Self {
        RawDomain {
            lower: d.lower,
            upper: d.upper,
        }
    }
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidDomain("zero-dimensional domain".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDomain(format!(
                    "axis {k}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn edges(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.edges().iter().product()
    }

    /// The flat base density `q(x) = 1 / volume`.
    pub fn uniform_density(&self) -> f64 {
        1.0 / self.volume()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Regular grid with `per_axis` cell-centred points along every axis,
    /// enumerated with the first axis varying slowest.
    pub fn cell_centres(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| {
                let h = (hi - lo) / per_axis as f64;
                (0..per_axis).map(|i| lo + h * (i as f64 + 0.5)).collect()
            })
            .collect();
        cartesian(&axes)
    }

    /// Regular grid including the box corners, `per_axis >= 2` points per axis.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let per_axis = per_axis.max(2);
        let axes: Vec<Vec<f64>> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| {
                let h = (hi - lo) / (per_axis - 1) as f64;
                (0..per_axis).map(|i| lo + h * i as f64).collect()
            })
            .collect();
        cartesian(&axes)
    }
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    out
}
