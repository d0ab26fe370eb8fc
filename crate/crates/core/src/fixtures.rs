//! Standard problem setups shared by the test suites and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acquisition::{latin_hypercube, AcquisitionSpec};
use crate::domain::Domain;
use crate::error::Result;
use crate::gp::{Dataset, GpPosterior, KernelSpec};
use crate::maxdist::{KdeBandwidth, MaxDistConfig};
use crate::models::DiscreteGp;
use crate::objectives::{branin_objective, example_function, example_objective, BenchObjective};

pub const EXAMPLE_MEASUREMENTS: usize = 20;
pub const EXAMPLE_NOISE_STD: f64 = 0.3;
pub const EXAMPLE_SIGNAL_VARIANCE: f64 = 1.0;
pub const EXAMPLE_LENGTH_SCALE: f64 = 0.5;

pub fn example_kernel() -> KernelSpec {
    KernelSpec::squared_exponential(EXAMPLE_SIGNAL_VARIANCE, vec![EXAMPLE_LENGTH_SCALE])
        .expect("valid kernel")
}

/// A GP fitted to noisy measurements of [`example_function`] at uniformly
/// random inputs on `[-3, 3]`.
#[derive(Debug, Clone)]
pub struct ExampleFixture {
    pub domain: Domain,
    pub data: Dataset,
    pub posterior: GpPosterior,
}

pub fn example_fixture(seed: u64) -> Result<ExampleFixture> {
    example_fixture_with(
        seed,
        EXAMPLE_MEASUREMENTS,
        example_kernel(),
        EXAMPLE_NOISE_STD,
    )
}

/// As [`example_fixture`] with a chosen measurement count, prior and noise.
pub fn example_fixture_with(
    seed: u64,
    measurements: usize,
    kernel: KernelSpec,
    noise_std: f64,
) -> Result<ExampleFixture> {
    let domain = Domain::interval(-3.0, 3.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Dataset::empty(noise_std);
    for _ in 0..measurements {
        let x = domain.sample_uniform(&mut rng);
        let noise: f64 = rng.sample(rand_distr::StandardNormal);
        let y = example_function(x[0]) + noise_std * noise;
        data.push(x, y);
    }
    let posterior = GpPosterior::new(kernel, data.clone())?;
    Ok(ExampleFixture {
        domain,
        data,
        posterior,
    })
}

/// Particle settings used for Thompson sampling inside the optimization loop.
pub fn thompson_config() -> MaxDistConfig {
    MaxDistConfig {
        particles: 1000,
        challengers: 1,
        alpha: 0.5,
        bandwidth: KdeBandwidth::DomainFraction(0.02),
        rounds: 10,
        tv_tolerance: None,
    }
}

/// A complete regret experiment minus the seeds.
#[derive(Debug, Clone)]
pub struct RegretSetup {
    pub objective: BenchObjective,
    pub prior: KernelSpec,
    pub noise_std: f64,
    pub iterations: usize,
    pub methods: Vec<(String, AcquisitionSpec)>,
}

/// Example function, 50 iterations, UCB with kappa 2 and PI/EI with xi 0.1.
pub fn regret_1d() -> RegretSetup {
    RegretSetup {
        objective: example_objective(),
        prior: example_kernel(),
        noise_std: EXAMPLE_NOISE_STD,
        iterations: 50,
        methods: vec![
            (
                "thompson".into(),
                AcquisitionSpec::thompson(thompson_config()),
            ),
            ("ucb".into(), AcquisitionSpec::ucb(2.0)),
            ("pi".into(), AcquisitionSpec::pi(0.1)),
            ("ei".into(), AcquisitionSpec::ei(0.1)),
        ],
    }
}

pub const BRANIN_LENGTH_SCALE: f64 = 2.25;
pub const BRANIN_NOISE_STD: f64 = 0.3;
const BRANIN_SCAN_POINTS: usize = 500;
const BRANIN_SCAN_SEED: u64 = 0;

/// Squared-exponential prior for the Branin problem whose signal variance and
/// constant mean match a 500-point Latin hypercube scan of the function.
pub fn branin_prior() -> KernelSpec {
    let objective = branin_objective();
    let mut rng = ChaCha8Rng::seed_from_u64(BRANIN_SCAN_SEED);
    let values: Vec<f64> = latin_hypercube(&objective.domain, BRANIN_SCAN_POINTS, &mut rng)
        .iter()
        .map(|x| objective.evaluate(x))
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    KernelSpec::squared_exponential(var, vec![BRANIN_LENGTH_SCALE; 2])
        .expect("valid kernel")
        .with_prior_mean(mean)
}

/// Negated Branin, 50 iterations, UCB with kappa 2, PI with xi 0.1, EI with xi 2.
pub fn regret_branin() -> RegretSetup {
    RegretSetup {
        objective: branin_objective(),
        prior: branin_prior(),
        noise_std: BRANIN_NOISE_STD,
        iterations: 50,
        methods: vec![
            (
                "thompson".into(),
                AcquisitionSpec::thompson(thompson_config()),
            ),
            ("ucb".into(), AcquisitionSpec::ucb(2.0)),
            ("pi".into(), AcquisitionSpec::pi(0.1)),
            ("ei".into(), AcquisitionSpec::ei(2.0)),
        ],
    }
}

/// A GP restricted to five grid points, exposed as a [`DiscreteGp`].
#[derive(Debug, Clone)]
pub struct DiscreteFixture {
    pub grid: Vec<Vec<f64>>,
    pub posterior: GpPosterior,
    pub model: DiscreteGp,
}

fn five_point_grid() -> Vec<Vec<f64>> {
    [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|x| vec![*x])
        .collect()
}

/// Correlated points with distinct posterior means.
pub fn five_point_asymmetric() -> Result<DiscreteFixture> {
    let data = Dataset::new(
        vec![vec![-1.5], vec![0.0], vec![1.2]],
        vec![0.2, 0.6, 0.1],
        0.5,
    )?;
    let posterior = GpPosterior::new(KernelSpec::squared_exponential(1.0, vec![1.0])?, data)?;
    let grid = five_point_grid();
    let model = DiscreteGp::from_posterior(&posterior, &grid)?;
    Ok(DiscreteFixture {
        grid,
        posterior,
        model,
    })
}

/// Independent points with equal means and variances.
pub fn five_point_symmetric() -> Result<DiscreteFixture> {
    let posterior = GpPosterior::prior(KernelSpec::squared_exponential(1.0, vec![0.05])?, 0.0)?;
    let grid = five_point_grid();
    let model = DiscreteGp::from_posterior(&posterior, &grid)?;
    Ok(DiscreteFixture {
        grid,
        posterior,
        model,
    })
}

/// MCMD settings for discrete-model runs: uniform challengers only, one per
/// particle, and a kernel far narrower than a cell.
pub fn discrete_config(particles: usize, rounds: usize) -> MaxDistConfig {
    MaxDistConfig {
        particles,
        challengers: 1,
        alpha: 0.0,
        bandwidth: KdeBandwidth::Absolute(vec![1e-6]),
        rounds,
        tv_tolerance: None,
    }
}
