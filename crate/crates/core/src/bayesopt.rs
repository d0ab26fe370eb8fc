//! The sequential optimization loop and regret accounting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::acquisition::{maximize_acquisition, AcquisitionKind, AcquisitionSpec};
use crate::domain::Domain;
use crate::error::{Error as CoreError, Result};
use crate::gp::{Dataset, GpPosterior, KernelSpec};
use crate::maxdist::{run_mcmd, MaxDistConfig};

/// Draw one input from the particle estimate of the maximum distribution.
pub fn thompson_suggest<R: Rng + ?Sized>(
    gp: &GpPosterior,
    cfg: &MaxDistConfig,
    domain: &Domain,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let estimate = run_mcmd(gp, cfg, domain, rng)?;
    estimate.sample(domain, rng)
}

/// The next try-out input and what it cost to find it.
#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub point: Vec<f64>,
    pub acquisition_evaluations: u64,
}

pub fn suggest<R: Rng + ?Sized>(
    gp: &GpPosterior,
    spec: &AcquisitionSpec,
    domain: &Domain,
    rng: &mut R,
) -> Result<Suggestion> {
    match spec.kind {
        AcquisitionKind::Thompson => Ok(Suggestion {
            point: thompson_suggest(gp, &spec.mcmd, domain, rng)?,
            acquisition_evaluations: 0,
        }),
        _ => {
            let best = maximize_acquisition(gp, spec, domain, rng)?;
            Ok(Suggestion {
                point: best.point,
                acquisition_evaluations: best.evaluations,
            })
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("objective failed: {0}")]
pub struct ObjectiveError(pub String);

/// Everything about the problem except the objective and the method.
#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub domain: Domain,
    pub prior: KernelSpec,
    pub noise_std: f64,
    /// True maximum of the noiseless objective.
    pub f_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// 1-based iteration number.
    pub index: usize,
    pub input: Vec<f64>,
    pub observed: f64,
    pub instant_regret: f64,
    pub cumulative_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub label: String,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    pub acquisition_evaluations: u64,
    /// Set when the run stopped early; `rows` then holds the completed part.
    pub failure: Option<String>,
}

impl RunTrace {
    pub fn is_partial(&self) -> bool {
        self.failure.is_some()
    }

    pub fn cumulative_regret(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.cumulative_regret).collect()
    }

    pub fn instant_regret(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.instant_regret).collect()
    }
}

/// Run `iterations` rounds of suggest, observe, condition.
///
/// Regret is measured with the noiseless objective value; the observation
/// fed to the GP carries `N(0, noise_std^2)` noise. Errors after the loop
/// has started (objective or numerical failures) end the run early and are
/// reported through [`RunTrace::failure`].
pub fn run_optimization<F>(
    objective: F,
    problem: &OptimizationProblem,
    spec: &AcquisitionSpec,
    label: &str,
    iterations: usize,
    seed: u64,
) -> Result<RunTrace>
where
    F: Fn(&[f64]) -> std::result::Result<f64, ObjectiveError>,
{
    if iterations == 0 {
        return Err(CoreError::InvalidConfig(
            "need at least one iteration".into(),
        ));
    }
    spec.validate()?;
    problem.prior.validate()?;
    if problem.prior.dim() != problem.domain.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: problem.domain.dim(),
            found: problem.prior.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = RunTrace {
        label: label.to_string(),
        seed,
        rows: Vec::with_capacity(iterations),
        acquisition_evaluations: 0,
        failure: None,
    };
    let mut data = Dataset::empty(problem.noise_std);
    let mut cumulative = 0.0;
    for index in 1..=iterations {
        let mut step = || -> std::result::Result<(Vec<f64>, f64, u64), String> {
            let gp =
                GpPosterior::new(problem.prior.clone(), data.clone()).map_err(|e| e.to_string())?;
            let s = suggest(&gp, spec, &problem.domain, &mut rng).map_err(|e| e.to_string())?;
            let value = objective(&s.point).map_err(|e| e.to_string())?;
            if !value.is_finite() {
                return Err(format!("objective returned {value}"));
            }
            Ok((s.point, value, s.acquisition_evaluations))
        };
        let (x, value, evals) = match step() {
            Ok(r) => r,
            Err(msg) => {
                trace.failure = Some(format!("iteration {index}: {msg}"));
                break;
            }
        };
        let noise: f64 = rng.sample(StandardNormal);
        let observed = value + problem.noise_std * noise;
        let instant = problem.f_star - value;
        cumulative += instant;
        trace.acquisition_evaluations += evals;
        data.push(x.clone(), observed);
        trace.rows.push(TraceRow {
            index,
            input: x,
            observed,
            instant_regret: instant,
            cumulative_regret: cumulative,
        });
    }
    Ok(trace)
}
