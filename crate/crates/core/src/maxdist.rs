//! Particle approximation of the distribution of a Gaussian process maximum.
//!
//! A population of weighted particles is repeatedly challenged: for every
//! particle a handful of challengers is proposed from a defensive mixture of
//! the current kernel density estimate and the uniform density on the domain,
//! one joint draw of the latent function is taken at the particle and its
//! challengers, and the particle is replaced by the best challenger if that
//! challenger's value is strictly larger. Between rounds the population is
//! brought back to equal weights by systematic resampling.
//!
//! Each round reads a snapshot of the population taken at its start, and
//! particle `i` draws from its own random stream derived from a per-round seed,
//! so results only depend on the caller's rng and not on thread scheduling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::gp::JointSampler;

/// Attempts at drawing an in-domain point from a kernel before clamping.
pub const KERNEL_DRAW_ATTEMPTS: usize = 10;

const MAX_WEIGHT: f64 = 1e300;

/// How the KDE bandwidth is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KdeBandwidth {
    /// Fraction of the domain edge length along each axis.
    DomainFraction(f64),
    /// Explicit per-axis bandwidths.
    Absolute(Vec<f64>),
}

impl Default for KdeBandwidth {
    fn default() -> Self {
        KdeBandwidth::DomainFraction(0.02)
    }
}

/// Squared-exponential kernel normalized to a probability density on R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeKernel {
    bandwidths: Vec<f64>,
    norm: f64,
}

impl KdeKernel {
    pub fn new(bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.is_empty() || bandwidths.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidKernel(format!(
                "bad KDE bandwidths {bandwidths:?}"
            )));
        }
        let norm = bandwidths
            .iter()
            .map(|h| 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * h))
            .product();
        Ok(Self { bandwidths, norm })
    }

    pub fn from_bandwidth(bandwidth: &KdeBandwidth, domain: &Domain) -> Result<Self> {
        match bandwidth {
            KdeBandwidth::DomainFraction(f) => {
                Self::new(domain.edges().iter().map(|e| e * f).collect())
            }
            KdeBandwidth::Absolute(h) => {
                if h.len() != domain.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: domain.dim(),
                        found: h.len(),
                    });
                }
                Self::new(h.clone())
            }
        }
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    #[inline]
    pub fn density(&self, x: &[f64], centre: &[f64]) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(centre)
            .zip(&self.bandwidths)
            .map(|((a, b), h)| {
                let d = (a - b) / h;
                d * d
            })
            .sum();
        self.norm * (-0.5 * r2).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, centre: &[f64], rng: &mut R) -> Vec<f64> {
        centre
            .iter()
            .zip(&self.bandwidths)
            .map(|(c, h)| {
                let z: f64 = rng.sample(StandardNormal);
                c + h * z
            })
            .collect()
    }

    /// Kernel draw restricted to the domain: redraw on leaving the box, clamp
    /// after [`KERNEL_DRAW_ATTEMPTS`] failures.
    pub fn sample_in<R: Rng + ?Sized>(
        &self,
        centre: &[f64],
        domain: &Domain,
        rng: &mut R,
    ) -> Vec<f64> {
        let mut x = self.sample(centre, rng);
        for _ in 1..KERNEL_DRAW_ATTEMPTS {
            if domain.contains(&x) {
                return x;
            }
            x = self.sample(centre, rng);
        }
        domain.clamp(&mut x);
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaxDistConfig {
    pub particles: usize,
    pub challengers: usize,
    /// Probability of drawing a challenger from the KDE rather than uniformly.
    pub alpha: f64,
    pub bandwidth: KdeBandwidth,
    pub rounds: usize,
    /// Stop early once the total-variation distance between the KDEs of two
    /// successive rounds on a diagnostic grid drops below this value.
    pub tv_tolerance: Option<f64>,
}

impl Default for MaxDistConfig {
    fn default() -> Self {
        Self {
            particles: 10_000,
            challengers: 1,
            alpha: 0.5,
            bandwidth: KdeBandwidth::default(),
            rounds: 10,
            tv_tolerance: None,
        }
    }
}

impl MaxDistConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 particles, got {}",
                self.particles
            )));
        }
        if self.challengers < 1 {
            return Err(Error::InvalidConfig("need at least one challenger".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        if let Some(tol) = self.tv_tolerance {
            if tol.is_nan() || tol < 0.0 {
                return Err(Error::InvalidConfig(format!("bad tv tolerance {tol}")));
            }
        }
        Ok(())
    }
}

/// Weighted particle positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    positions: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl ParticleSet {
    pub fn new(positions: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(Error::InvalidConfig(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        let set = Self { positions, weights };
        set.total_weight()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> Result<f64> {
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::DegenerateWeights);
        }
        let total: f64 = self.weights.iter().sum();
        if total > 0.0 && total.is_finite() {
            Ok(total)
        } else {
            Err(Error::DegenerateWeights)
        }
    }

    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        let total = self.total_weight()?;
        Ok(self.weights.iter().map(|w| w / total).collect())
    }
}

/// `n` particles drawn uniformly from the domain, all with weight one.
pub fn init_particles<R: Rng + ?Sized>(
    domain: &Domain,
    n: usize,
    rng: &mut R,
) -> Result<ParticleSet> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 particles, got {n}"
        )));
    }
    let positions = (0..n).map(|_| domain.sample_uniform(rng)).collect();
    Ok(ParticleSet {
        positions,
        weights: vec![1.0; n],
    })
}

/// A proposed challenger and its importance weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Challenger {
    pub position: Vec<f64>,
    pub weight: f64,
}

/// Defensive mixture proposal built from a particle snapshot.
struct Proposal<'a> {
    snapshot: &'a ParticleSet,
    anchors: WeightedIndex<f64>,
    kde: &'a KdeKernel,
    alpha: f64,
    domain: &'a Domain,
    base_density: f64,
}

impl<'a> Proposal<'a> {
    fn new(
        snapshot: &'a ParticleSet,
        kde: &'a KdeKernel,
        alpha: f64,
        domain: &'a Domain,
    ) -> Result<Self> {
        snapshot.total_weight()?;
        let anchors =
            WeightedIndex::new(&snapshot.weights).map_err(|_| Error::DegenerateWeights)?;
        Ok(Self {
            snapshot,
            anchors,
            kde,
            alpha,
            domain,
            base_density: domain.uniform_density(),
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Challenger {
        let anchor = &self.snapshot.positions[self.anchors.sample(rng)];
        let position = if rng.random::<f64>() < self.alpha {
            self.kde.sample_in(anchor, self.domain, rng)
        } else {
            self.domain.sample_uniform(rng)
        };
        let weight = challenger_weight(
            self.base_density,
            self.kde.density(&position, anchor),
            self.alpha,
        );
        Challenger { position, weight }
    }
}

/// `q / (alpha * k_x + (1 - alpha) * q)`, with `k_x` evaluated at the
/// selected anchor only.
pub fn challenger_weight(base_density: f64, kernel_density: f64, alpha: f64) -> f64 {
    let denom = alpha * kernel_density + (1.0 - alpha) * base_density;
    if denom > 0.0 {
        (base_density / denom).min(MAX_WEIGHT)
    } else {
        MAX_WEIGHT
    }
}

/// Draw `cfg.challengers` challengers from the defensive mixture proposal.
pub fn propose_challengers<R: Rng + ?Sized>(
    particles: &ParticleSet,
    cfg: &MaxDistConfig,
    domain: &Domain,
    rng: &mut R,
) -> Result<Vec<Challenger>> {
    cfg.validate()?;
    let kde = KdeKernel::from_bandwidth(&cfg.bandwidth, domain)?;
    let proposal = Proposal::new(particles, &kde, cfg.alpha, domain)?;
    Ok((0..cfg.challengers).map(|_| proposal.draw(rng)).collect())
}

/// Index of the challenger that beats the incumbent, if any. `values[0]` is
/// the incumbent; replacement requires a strictly larger value.
fn winning_challenger(values: &[f64]) -> Option<usize> {
    let (best, best_value) =
        values[1..]
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, v)| {
                if *v > acc.1 {
                    (j, *v)
                } else {
                    acc
                }
            });
    (best_value > values[0]).then_some(best)
}

fn challenge_one<M: JointSampler, R: Rng + ?Sized>(
    model: &M,
    proposal: &Proposal<'_>,
    index: usize,
    challengers: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    let incumbent = &proposal.snapshot.positions[index];
    let mut contenders: Vec<Challenger> = (0..challengers).map(|_| proposal.draw(rng)).collect();
    let mut points = Vec::with_capacity(challengers + 1);
    points.push(incumbent.clone());
    points.extend(contenders.iter().map(|c| c.position.clone()));
    let values = model.sample_joint(&points, rng)?;
    Ok(match winning_challenger(&values) {
        Some(j) => {
            let c = contenders.swap_remove(j);
            (c.position, c.weight)
        }
        None => (incumbent.clone(), proposal.snapshot.weights[index]),
    })
}

/// Challenge every particle once.
pub fn challenge_round<M: JointSampler, R: Rng + ?Sized>(
    model: &M,
    particles: &ParticleSet,
    cfg: &MaxDistConfig,
    domain: &Domain,
    rng: &mut R,
) -> Result<ParticleSet> {
    cfg.validate()?;
    let kde = KdeKernel::from_bandwidth(&cfg.bandwidth, domain)?;
    challenge_round_with(model, particles, &kde, cfg, domain, rng)
}

fn challenge_round_with<M: JointSampler, R: Rng + ?Sized>(
    model: &M,
    particles: &ParticleSet,
    kde: &KdeKernel,
    cfg: &MaxDistConfig,
    domain: &Domain,
    rng: &mut R,
) -> Result<ParticleSet> {
    let proposal = Proposal::new(particles, kde, cfg.alpha, domain)?;
    let round_seed: u64 = rng.random();
    let results: Vec<(Vec<f64>, f64)> = (0..particles.len())
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            let mut stream = ChaCha8Rng::seed_from_u64(round_seed);
            stream.set_stream(i as u64);
            challenge_one(model, &proposal, i, cfg.challengers, &mut stream)
        })
        .collect::<Result<_>>()?;
    let (positions, weights) = results.into_iter().unzip();
    Ok(ParticleSet { positions, weights })
}

/// Copy counts of systematic resampling for normalized `weights` and offset
/// `u` in `[0, 1/n)`.
pub fn systematic_copy_counts(weights: &[f64], u: f64) -> Vec<usize> {
    let n = weights.len();
    let mut counts = vec![0usize; n];
    let step = 1.0 / n as f64;
    let mut cumulative = weights[0];
    let mut i = 0;
    for j in 0..n {
        let position = u + j as f64 * step;
        while position >= cumulative && i + 1 < n {
            i += 1;
            cumulative += weights[i];
        }
        counts[i] += 1;
    }
    counts
}

/// Systematic resampling to `n` equally weighted particles.
pub fn systematic_resample<R: Rng + ?Sized>(
    particles: &ParticleSet,
    rng: &mut R,
) -> Result<ParticleSet> {
    let weights = particles.normalized_weights()?;
    let n = weights.len();
    let u = rng.random::<f64>() / n as f64;
    let counts = systematic_copy_counts(&weights, u);
    let mut positions = Vec::with_capacity(n);
    for (p, c) in particles.positions.iter().zip(counts) {
        positions.extend(std::iter::repeat_n(p, c).cloned());
    }
    Ok(ParticleSet {
        positions,
        weights: vec![1.0; n],
    })
}

/// Weighted KDE over the particles.
#[derive(Debug, Clone)]
pub struct MaxDistEstimate {
    particles: ParticleSet,
    kde: KdeKernel,
}

impl MaxDistEstimate {
    pub fn new(particles: ParticleSet, kde: KdeKernel) -> Result<Self> {
        particles.total_weight()?;
        if let Some(p) = particles
            .positions
            .iter()
            .find(|p| p.len() != kde.bandwidths.len())
        {
            return Err(Error::DimensionMismatch {
                expected: kde.bandwidths.len(),
                found: p.len(),
            });
        }
        Ok(Self { particles, kde })
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    pub fn kernel(&self) -> &KdeKernel {
        &self.kde
    }

    /// `sum_i w_i k_x(x, x_i) / sum_i w_i`.
    pub fn density(&self, x: &[f64]) -> f64 {
        let total: f64 = self.particles.weights.iter().sum();
        let acc: f64 = self
            .particles
            .positions
            .iter()
            .zip(&self.particles.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(p, w)| w * self.kde.density(x, p))
            .sum();
        acc / total
    }

    pub fn density_at(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.par_iter().map(|x| self.density(x)).collect()
    }

    /// Density at `points` rescaled to sum to one (a discrete distribution
    /// over the points).
    pub fn distribution_on(&self, points: &[Vec<f64>]) -> Vec<f64> {
        let mut d = self.density_at(points);
        let total: f64 = d.iter().sum();
        if total > 0.0 {
            d.iter_mut().for_each(|v| *v /= total);
        } else {
            d.iter_mut().for_each(|v| *v = 1.0 / points.len() as f64);
        }
        d
    }

    pub fn sample<R: Rng + ?Sized>(&self, domain: &Domain, rng: &mut R) -> Result<Vec<f64>> {
        let anchors =
            WeightedIndex::new(&self.particles.weights).map_err(|_| Error::DegenerateWeights)?;
        let anchor = &self.particles.positions[anchors.sample(rng)];
        Ok(self.kde.sample_in(anchor, domain, rng))
    }
}

pub fn kde_density(estimate: &MaxDistEstimate, x: &[f64]) -> f64 {
    estimate.density(x)
}

pub fn sample_from_estimate<R: Rng + ?Sized>(
    estimate: &MaxDistEstimate,
    domain: &Domain,
    rng: &mut R,
) -> Result<Vec<f64>> {
    estimate.sample(domain, rng)
}

/// Points per axis of the grid used for the early-stopping check.
fn diagnostic_grid(domain: &Domain) -> Vec<Vec<f64>> {
    let per_axis = (512f64.powf(1.0 / domain.dim() as f64).floor() as usize).max(2);
    domain.cell_centres(per_axis)
}

/// Run the full particle algorithm and return the final estimate.
pub fn run_mcmd<M: JointSampler, R: Rng + ?Sized>(
    model: &M,
    cfg: &MaxDistConfig,
    domain: &Domain,
    rng: &mut R,
) -> Result<MaxDistEstimate> {
    run_mcmd_with(model, cfg, domain, rng, |_, _| {})
}

/// As [`run_mcmd`], calling `observer(round, estimate)` after every round
/// (rounds are numbered from 1).
pub fn run_mcmd_with<M, R, F>(
    model: &M,
    cfg: &MaxDistConfig,
    domain: &Domain,
    rng: &mut R,
    mut observer: F,
) -> Result<MaxDistEstimate>
where
    M: JointSampler,
    R: Rng + ?Sized,
    F: FnMut(usize, &MaxDistEstimate),
{
    cfg.validate()?;
    if model.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            found: model.dim(),
        });
    }
    let kde = KdeKernel::from_bandwidth(&cfg.bandwidth, domain)?;
    let mut estimate = MaxDistEstimate {
        particles: init_particles(domain, cfg.particles, rng)?,
        kde,
    };
    let grid = cfg.tv_tolerance.map(|_| diagnostic_grid(domain));
    let mut previous: Option<Vec<f64>> = None;
    for round in 1..=cfg.rounds {
        let resampled = systematic_resample(&estimate.particles, rng)?;
        estimate.particles =
            challenge_round_with(model, &resampled, &estimate.kde, cfg, domain, rng)?;
        observer(round, &estimate);
        if let (Some(tol), Some(grid)) = (cfg.tv_tolerance, &grid) {
            let current = estimate.distribution_on(grid);
            if let Some(prev) = &previous {
                let tv: f64 = 0.5
                    * prev
                        .iter()
                        .zip(&current)
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>();
                if tv < tol {
                    break;
                }
            }
            previous = Some(current);
        }
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn unit() -> Domain {
        Domain::interval(0.0, 1.0).unwrap()
    }

    /// Zero-variance model whose values are `f(x)`.
    struct Deterministic<F>(F);

    impl<F: Fn(&[f64]) -> f64 + Sync> JointSampler for Deterministic<F> {
        fn dim(&self) -> usize {
            1
        }
        fn sample_joint<R: Rng + ?Sized>(
            &self,
            points: &[Vec<f64>],
            _: &mut R,
        ) -> Result<Vec<f64>> {
            Ok(points.iter().map(|p| (self.0)(p)).collect())
        }
    }

    #[test]
    fn init_contract() {
        let p = init_particles(&unit(), 3, &mut rng(1)).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.weights(), &[1.0, 1.0, 1.0]);
        assert!(p.positions().iter().all(|x| unit().contains(x)));
        assert!(init_particles(&unit(), 1, &mut rng(1)).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = MaxDistConfig::default();
        assert!(ok.validate().is_ok());
        assert!(MaxDistConfig {
            particles: 1,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(MaxDistConfig {
            challengers: 0,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(MaxDistConfig {
            alpha: 1.5,
            ..ok.clone()
        }
        .validate()
        .is_err());
        assert!(MaxDistConfig { alpha: -0.1, ..ok }.validate().is_err());
    }

    #[test]
    fn kde_kernel_is_a_normalized_gaussian() {
        let k = KdeKernel::new(vec![0.5]).unwrap();
        let expected = (-0.5f64 * 4.0).exp() / (0.5 * (2.0 * std::f64::consts::PI).sqrt());
        assert_relative_eq!(k.density(&[1.0], &[0.0]), expected, epsilon = 1e-14);
        assert!(KdeKernel::new(vec![0.0]).is_err());
    }

    #[test]
    fn alpha_zero_gives_unit_weights() {
        let particles = init_particles(&unit(), 10, &mut rng(2)).unwrap();
        let cfg = MaxDistConfig {
            alpha: 0.0,
            challengers: 50,
            ..Default::default()
        };
        let cs = propose_challengers(&particles, &cfg, &unit(), &mut rng(3)).unwrap();
        assert_eq!(cs.len(), 50);
        for c in cs {
            assert_eq!(c.weight, 1.0);
            assert!(unit().contains(&c.position));
        }
    }

    #[test]
    fn alpha_one_point_mass_kernel_returns_anchor() {
        let particles = ParticleSet::new(vec![vec![0.3]], vec![1.0]).unwrap();
        let cfg = MaxDistConfig {
            alpha: 1.0,
            challengers: 5,
            bandwidth: KdeBandwidth::Absolute(vec![1e-12]),
            ..Default::default()
        };
        for c in propose_challengers(&particles, &cfg, &unit(), &mut rng(4)).unwrap() {
            assert!((c.position[0] - 0.3).abs() < 1e-9);
        }
    }

    #[test]
    fn challenger_weight_hand_computation() {
        // Domain [0, 2]: q = 1/2. Anchor 1.0, bandwidth 0.5, challenger 1.25, alpha 1/2.
        // k_x = exp(-0.5 * 0.25) / (0.5 * sqrt(2 pi)) = 0.7041306535285989
        // w = 0.5 / (0.5 * 0.704130653528599 + 0.5 * 0.5) = 0.8304746640819981
        let k = KdeKernel::new(vec![0.5]).unwrap();
        let kx = k.density(&[1.25], &[1.0]);
        assert_relative_eq!(kx, 0.704_130_653_528_598_9, epsilon = 1e-14);
        assert_relative_eq!(
            challenger_weight(0.5, kx, 0.5),
            0.830_474_664_081_998_1,
            epsilon = 1e-14
        );
    }

    #[test]
    fn challenger_at_the_maximizer_always_wins() {
        let model = Deterministic(|x: &[f64]| -(x[0] - 0.8).powi(2));
        let mut g = rng(0);
        for _ in 0..100 {
            let x = g.random::<f64>();
            if x == 0.8 {
                continue;
            }
            let values = model.sample_joint(&[vec![x], vec![0.8]], &mut g).unwrap();
            assert_eq!(winning_challenger(&values), Some(0));
        }
    }

    #[test]
    fn ties_keep_the_incumbent() {
        assert_eq!(winning_challenger(&[1.0, 1.0]), None);
        assert_eq!(winning_challenger(&[1.0, 0.5, 2.0, 2.0]), Some(1));
        let model = Deterministic(|_: &[f64]| 0.0);
        let particles = init_particles(&unit(), 50, &mut rng(7)).unwrap();
        let cfg = MaxDistConfig {
            particles: 50,
            ..Default::default()
        };
        let next = challenge_round(&model, &particles, &cfg, &unit(), &mut rng(8)).unwrap();
        assert_eq!(next, particles);
    }

    #[test]
    fn challenge_round_is_seed_deterministic() {
        let model = Deterministic(|x: &[f64]| (6.0 * x[0]).sin());
        let particles = init_particles(&unit(), 500, &mut rng(7)).unwrap();
        let cfg = MaxDistConfig {
            particles: 500,
            ..Default::default()
        };
        let a = challenge_round(&model, &particles, &cfg, &unit(), &mut rng(8)).unwrap();
        let b = challenge_round(&model, &particles, &cfg, &unit(), &mut rng(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn systematic_equal_weights_is_identity() {
        let p = ParticleSet::new((0..5).map(|i| vec![i as f64]).collect(), vec![2.0; 5]).unwrap();
        let r = systematic_resample(&p, &mut rng(1)).unwrap();
        assert_eq!(r.positions(), p.positions());
        assert_eq!(r.weights(), &[1.0; 5]);
    }

    #[test]
    fn systematic_half_quarter_quarter() {
        let mut g = rng(11);
        for _ in 0..100 {
            let u = g.random::<f64>() / 4.0;
            assert_eq!(
                systematic_copy_counts(&[0.5, 0.25, 0.25, 0.0], u),
                vec![2, 1, 1, 0]
            );
        }
    }

    #[test]
    fn systematic_point_mass() {
        let p =
            ParticleSet::new(vec![vec![0.1], vec![0.2], vec![0.3]], vec![1.0, 0.0, 0.0]).unwrap();
        let r = systematic_resample(&p, &mut rng(1)).unwrap();
        assert_eq!(r.positions(), &[vec![0.1], vec![0.1], vec![0.1]]);
    }

    #[test]
    fn systematic_rejects_zero_weights() {
        let p = ParticleSet {
            positions: vec![vec![0.0], vec![1.0]],
            weights: vec![0.0, 0.0],
        };
        assert_eq!(
            systematic_resample(&p, &mut rng(1)).unwrap_err(),
            Error::DegenerateWeights
        );
    }

    #[test]
    fn single_particle_density_is_the_kernel() {
        let k = KdeKernel::new(vec![0.1]).unwrap();
        let est = MaxDistEstimate::new(
            ParticleSet::new(vec![vec![0.4]], vec![3.0]).unwrap(),
            k.clone(),
        )
        .unwrap();
        assert_relative_eq!(
            est.density(&[0.47]),
            k.density(&[0.47], &[0.4]),
            epsilon = 1e-14
        );
    }

    #[test]
    fn two_particle_density_is_the_average() {
        let k = KdeKernel::new(vec![0.1]).unwrap();
        let est = MaxDistEstimate::new(
            ParticleSet::new(vec![vec![0.2], vec![0.6]], vec![1.0, 1.0]).unwrap(),
            k.clone(),
        )
        .unwrap();
        for x in [0.0, 0.3, 0.45, 0.9] {
            let avg = 0.5 * (k.density(&[x], &[0.2]) + k.density(&[x], &[0.6]));
            assert_relative_eq!(est.density(&[x]), avg, epsilon = 1e-14);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        // trapezoid rule on an enlarged interval
        let particles = init_particles(&unit(), 200, &mut rng(3)).unwrap();
        let est = MaxDistEstimate::new(particles, KdeKernel::new(vec![0.05]).unwrap()).unwrap();
        let (a, b, n) = (-1.0, 2.0, 6000);
        let h = (b - a) / n as f64;
        let ys: Vec<f64> = (0..=n).map(|i| est.density(&[a + h * i as f64])).collect();
        let integral = h * (ys.iter().sum::<f64>() - 0.5 * (ys[0] + ys[n]));
        assert!((integral - 1.0).abs() < 0.01, "integral {integral}");
    }

    #[test]
    fn tiny_kernel_sample_returns_particle() {
        let est = MaxDistEstimate::new(
            ParticleSet::new(vec![vec![0.37]], vec![1.0]).unwrap(),
            KdeKernel::new(vec![1e-12]).unwrap(),
        )
        .unwrap();
        let x = est.sample(&unit(), &mut rng(2)).unwrap();
        assert!((x[0] - 0.37).abs() < 1e-9);
    }

    #[test]
    fn corner_particle_samples_stay_inside() {
        let d = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let est = MaxDistEstimate::new(
            ParticleSet::new(vec![vec![1.0, 0.0]], vec![1.0]).unwrap(),
            KdeKernel::new(vec![0.3, 0.3]).unwrap(),
        )
        .unwrap();
        let mut g = rng(5);
        for _ in 0..2000 {
            assert!(d.contains(&est.sample(&d, &mut g).unwrap()));
        }
    }

    #[test]
    fn early_stop_on_flat_model() {
        let model = Deterministic(|_: &[f64]| 0.0);
        let cfg = MaxDistConfig {
            particles: 200,
            rounds: 50,
            tv_tolerance: Some(1e-9),
            ..Default::default()
        };
        let mut rounds = 0;
        run_mcmd_with(&model, &cfg, &unit(), &mut rng(1), |r, _| rounds = r).unwrap();
        // ties never replace, so only resampling moves particles; round 2 already differs
        assert!(rounds < 50);
    }

    proptest! {
        #[test]
        fn resample_keeps_count_and_equalizes(ws in prop::collection::vec(0.0f64..10.0, 2..40), seed in 0u64..1000) {
            prop_assume!(ws.iter().sum::<f64>() > 1e-6);
            let n = ws.len();
            let p = ParticleSet::new((0..n).map(|i| vec![i as f64]).collect(), ws.clone()).unwrap();
            let r = systematic_resample(&p, &mut rng(seed)).unwrap();
            prop_assert_eq!(r.len(), n);
            prop_assert!(r.weights().iter().all(|w| *w == 1.0));
            let total: f64 = ws.iter().sum();
            for (i, w) in ws.iter().enumerate() {
                let c = r.positions().iter().filter(|x| x[0] == i as f64).count() as f64;
                let target = n as f64 * w / total;
                prop_assert!((c - target).abs() < 1.0 + 1e-6, "particle {} copied {} times, target {}", i, c, target);
            }
        }

        #[test]
        fn particles_never_leave_domain(seed in 0u64..200, alpha in 0.0f64..=1.0) {
            let d = Domain::new(vec![-1.0, 0.0], vec![1.0, 0.5]).unwrap();
            let model = Deterministic2;
            let cfg = MaxDistConfig { particles: 64, rounds: 3, alpha, bandwidth: KdeBandwidth::DomainFraction(0.3), ..Default::default() };
            let est = run_mcmd(&model, &cfg, &d, &mut rng(seed)).unwrap();
            prop_assert!(est.particles().positions().iter().all(|x| d.contains(x)));
        }
    }

    struct Deterministic2;
    impl JointSampler for Deterministic2 {
        fn dim(&self) -> usize {
            2
        }
        fn sample_joint<R: Rng + ?Sized>(
            &self,
            points: &[Vec<f64>],
            _: &mut R,
        ) -> Result<Vec<f64>> {
            Ok(points.iter().map(|p| p[0] + p[1]).collect())
        }
    }
}
