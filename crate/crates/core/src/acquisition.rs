//! Baseline acquisition functions and their multi-start maximization.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::maxdist::MaxDistConfig;
use crate::stats::{normal_cdf, normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcquisitionKind {
    Thompson,
    Ucb,
    Pi,
    Ei,
    Ev,
}

impl AcquisitionKind {
    pub fn label(self) -> &'static str {
        match self {
            AcquisitionKind::Thompson => "thompson",
            AcquisitionKind::Ucb => "ucb",
            AcquisitionKind::Pi => "pi",
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::Ev => "ev",
        }
    }
}

/// How the next try-out input is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// Exploration weight for UCB.
    #[serde(default)]
    pub kappa: f64,
    /// Improvement margin for PI and EI.
    #[serde(default)]
    pub xi: f64,
    /// Particle settings for Thompson sampling.
    #[serde(default)]
    pub mcmd: MaxDistConfig,
}

impl AcquisitionSpec {
    fn of(kind: AcquisitionKind) -> Self {
        Self {
            kind,
            kappa: 0.0,
            xi: 0.0,
            mcmd: MaxDistConfig::default(),
        }
    }

    pub fn thompson(mcmd: MaxDistConfig) -> Self {
        Self {
            mcmd,
            ..Self::of(AcquisitionKind::Thompson)
        }
    }

    pub fn ucb(kappa: f64) -> Self {
        Self {
            kappa,
            ..Self::of(AcquisitionKind::Ucb)
        }
    }

    pub fn pi(xi: f64) -> Self {
        Self {
            xi,
            ..Self::of(AcquisitionKind::Pi)
        }
    }

    pub fn ei(xi: f64) -> Self {
        Self {
            xi,
            ..Self::of(AcquisitionKind::Ei)
        }
    }

    pub fn ev() -> Self {
        Self::of(AcquisitionKind::Ev)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "kappa {} must be >= 0",
                self.kappa
            )));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::InvalidConfig(format!("xi {} must be >= 0", self.xi)));
        }
        if self.kind == AcquisitionKind::Thompson {
            self.mcmd.validate()?;
        }
        Ok(())
    }
}

pub fn ucb_value(mu: f64, sigma: f64, kappa: f64) -> f64 {
    mu + kappa * sigma
}

/// `Pr(f >= y_plus + xi)` for `f ~ N(mu, sigma^2)`; a step function at `sigma = 0`.
pub fn pi_value(mu: f64, sigma: f64, y_plus: f64, xi: f64) -> f64 {
    let gap = mu - y_plus - xi;
    if sigma > 0.0 {
        normal_cdf(gap / sigma)
    } else if gap > 0.0 {
        1.0
    } else if gap < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// `E[max(0, f - y_plus - xi)]` for `f ~ N(mu, sigma^2)`.
pub fn ei_value(mu: f64, sigma: f64, y_plus: f64, xi: f64) -> f64 {
    let gap = mu - y_plus - xi;
    if sigma > 0.0 {
        let z = gap / sigma;
        (gap * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
    } else {
        gap.max(0.0)
    }
}

pub fn acq_ucb(gp: &GpPosterior, x: &[f64], kappa: f64) -> Result<f64> {
    let (mu, var) = gp.predict_point(x)?;
    Ok(ucb_value(mu, var.sqrt(), kappa))
}

pub fn acq_pi(gp: &GpPosterior, x: &[f64], y_plus: f64, xi: f64) -> Result<f64> {
    let (mu, var) = gp.predict_point(x)?;
    Ok(pi_value(mu, var.sqrt(), y_plus, xi))
}

pub fn acq_ei(gp: &GpPosterior, x: &[f64], y_plus: f64, xi: f64) -> Result<f64> {
    let (mu, var) = gp.predict_point(x)?;
    Ok(ei_value(mu, var.sqrt(), y_plus, xi))
}

pub fn acq_ev(gp: &GpPosterior, x: &[f64]) -> Result<f64> {
    Ok(gp.predict_point(x)?.0)
}

/// Highest noisy observation so far; the prior mean before any observation.
pub fn incumbent(gp: &GpPosterior) -> f64 {
    gp.data().best_output().unwrap_or(gp.kernel().prior_mean)
}

/// Value of the acquisition function described by `spec` at `x`.
pub fn acquisition_value(
    gp: &GpPosterior,
    spec: &AcquisitionSpec,
    x: &[f64],
    y_plus: f64,
) -> Result<f64> {
    match spec.kind {
        AcquisitionKind::Ucb => acq_ucb(gp, x, spec.kappa),
        AcquisitionKind::Pi => acq_pi(gp, x, y_plus, spec.xi),
        AcquisitionKind::Ei => acq_ei(gp, x, y_plus, spec.xi),
        AcquisitionKind::Ev => acq_ev(gp, x),
        AcquisitionKind::Thompson => Err(Error::InvalidConfig(
            "Thompson sampling has no acquisition function".into(),
        )),
    }
}

pub const COARSE_PER_AXIS: usize = 20;
pub const COARSE_CAP: usize = 400;
pub const REFINED_STARTS: usize = 5;
pub const LOCAL_BUDGET: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionOptimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// Number of acquisition evaluations spent.
    pub evaluations: u64,
}

/// Coarse candidates for the multi-start search: a regular grid in one
/// dimension, a Latin hypercube otherwise.
pub fn coarse_candidates<R: Rng + ?Sized>(domain: &Domain, rng: &mut R) -> Vec<Vec<f64>> {
    let d = domain.dim();
    if d == 1 {
        return domain.grid(COARSE_PER_AXIS);
    }
    let n = COARSE_PER_AXIS
        .checked_pow(d as u32)
        .unwrap_or(usize::MAX)
        .min(COARSE_CAP);
    latin_hypercube(domain, n, rng)
}

pub fn latin_hypercube<R: Rng + ?Sized>(domain: &Domain, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::with_capacity(domain.dim()); n];
    for (lo, hi) in domain.lower().iter().zip(domain.upper()) {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (p, s) in points.iter_mut().zip(strata) {
            p.push(lo + (hi - lo) * (s as f64 + rng.random::<f64>()) / n as f64);
        }
    }
    points
}

/// Coordinate ascent with step halving, limited to `budget` evaluations.
fn coordinate_search<F>(
    f: &F,
    start: Vec<f64>,
    start_value: f64,
    domain: &Domain,
    budget: usize,
) -> Result<(Vec<f64>, f64, usize)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let edges = domain.edges();
    let mut step: Vec<f64> = edges.iter().map(|e| e / COARSE_PER_AXIS as f64).collect();
    let (mut x, mut value, mut used) = (start, start_value, 0);
    while used < budget {
        let mut improved = false;
        'axes: for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                if used >= budget {
                    break 'axes;
                }
                let mut cand = x.clone();
                cand[k] += dir * step[k];
                domain.clamp(&mut cand);
                if cand == x {
                    continue;
                }
                let v = f(&cand)?;
                used += 1;
                if v > value {
                    x = cand;
                    value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
            if step.iter().zip(&edges).all(|(s, e)| *s < 1e-9 * e) {
                break;
            }
        }
    }
    Ok((x, value, used))
}

/// Multi-start maximization of a non-Thompson acquisition function.
///
/// The returned value is never worse than the best coarse candidate.
pub fn maximize_acquisition<R: Rng + ?Sized>(
    gp: &GpPosterior,
    spec: &AcquisitionSpec,
    domain: &Domain,
    rng: &mut R,
) -> Result<AcquisitionOptimum> {
    spec.validate()?;
    if spec.kind == AcquisitionKind::Thompson {
        return Err(Error::InvalidConfig(
            "Thompson sampling does not maximize an acquisition function".into(),
        ));
    }
    let y_plus = incumbent(gp);
    let f = |x: &[f64]| acquisition_value(gp, spec, x, y_plus);
    maximize_with(&f, domain, rng)
}

/// Multi-start maximization of an arbitrary function over `domain`.
pub fn maximize_with<F, R>(f: &F, domain: &Domain, rng: &mut R) -> Result<AcquisitionOptimum>
where
    F: Fn(&[f64]) -> Result<f64>,
    R: Rng + ?Sized,
{
    let candidates = coarse_candidates(domain, rng);
    let mut scored = candidates
        .into_iter()
        .map(|x| f(&x).map(|v| (x, v)))
        .collect::<Result<Vec<_>>>()?;
    let mut evaluations = scored.len() as u64;
    // stable: ties keep grid order
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (mut best, mut best_value) = scored[0].clone();
    for (start, value) in scored.into_iter().take(REFINED_STARTS) {
        let (x, v, used) = coordinate_search(f, start, value, domain, LOCAL_BUDGET)?;
        evaluations += used as u64;
        if v > best_value {
            best = x;
            best_value = v;
        }
    }
    Ok(AcquisitionOptimum {
        point: best,
        value: best_value,
        evaluations,
    })
}
