use mcmd_core::fixtures::{example_fixture, thompson_config};
use mcmd_core::oracles::{entropy, tv_distance};
use mcmd_core::stats::normal_cdf;
use mcmd_core::{
    brute_force_max_distribution, challenge_round, init_particles, kde_density, run_mcmd,
    run_mcmd_with, sample_from_estimate, Deterministic, DiscreteGp, Domain, KdeBandwidth,
    KdeKernel, MaxDistConfig, MaxDistEstimate, ParticleSet,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn uniform_initialization_mean() {
    let domain = Domain::interval(-3.0, 3.0).unwrap();
    let p = init_particles(&domain, 100_000, &mut rng(1)).unwrap();
    let mean = p.positions().iter().map(|x| x[0]).sum::<f64>() / 1e5;
    let se = (36.0f64 / 12.0 / 1e5).sqrt();
    assert!(mean.abs() < 3.0 * se, "mean {mean}");
}

#[test]
fn uniform_initialization_ks() {
    let domain = Domain::interval(-3.0, 3.0).unwrap();
    let p = init_particles(&domain, 10_000, &mut rng(2)).unwrap();
    let mut xs: Vec<f64> = p.positions().iter().map(|x| (x[0] + 3.0) / 6.0).collect();
    xs.sort_by(f64::total_cmp);
    assert!(ks_statistic(&xs) < 1.628 / 100.0);
}

/// Two-sided KS statistic of sorted samples in [0, 1] against U(0, 1).
fn ks_statistic(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

#[test]
fn replacement_frequency_matches_win_probability() {
    // cell 0 holds every particle; uniform challengers land in cell 1 half the time
    let mean = DVector::from_vec(vec![0.0, 0.4]);
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]);
    let model = DiscreteGp::from_moments(mean, cov).unwrap();
    let n = 100_000;
    let particles = ParticleSet::new(vec![vec![0.5]; n], vec![1.0; n]).unwrap();
    let cfg = MaxDistConfig {
        particles: n,
        alpha: 0.0,
        bandwidth: KdeBandwidth::Absolute(vec![1e-6]),
        ..Default::default()
    };
    let out = challenge_round(&model, &particles, &cfg, &model.domain(), &mut rng(4)).unwrap();
    let moved = out
        .positions()
        .iter()
        .filter(|x| model.cell(x) == 1)
        .count() as f64
        / n as f64;
    let p_win = normal_cdf(0.4 / (1.0f64 + 0.8 - 0.6).sqrt());
    let expected = 0.5 * p_win;
    let se = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!((moved - expected).abs() < 3.0 * se, "{moved} vs {expected}");
}

fn peaked(x: &[f64]) -> f64 {
    -(x[0] - 0.3).powi(2)
}

#[test]
fn deterministic_model_concentrates_at_maximizer() {
    let domain = Domain::interval(0.0, 1.0).unwrap();
    let model = Deterministic::new(1, peaked);
    // a single challenger per round moves mass toward a sharp peak too slowly for ten rounds
    let cfg = MaxDistConfig {
        particles: 2000,
        challengers: 5,
        ..Default::default()
    };
    let est = run_mcmd(&model, &cfg, &domain, &mut rng(5)).unwrap();
    let h = est.kernel().bandwidths()[0];
    let w = est.particles().normalized_weights().unwrap();
    let near: f64 = est
        .particles()
        .positions()
        .iter()
        .zip(&w)
        .filter(|(x, _)| (x[0] - 0.3).abs() <= h)
        .map(|(_, w)| w)
        .sum();
    assert!(near >= 0.95, "mass near maximizer {near}");
}

#[test]
fn concentration_is_monotone_over_rounds() {
    let domain = Domain::interval(0.0, 1.0).unwrap();
    let model = Deterministic::new(1, peaked);
    let cfg = MaxDistConfig {
        particles: 1000,
        rounds: 8,
        ..Default::default()
    };
    let seeds = 21;
    let mut monotone = 0;
    for seed in 0..seeds {
        let mut fractions = Vec::new();
        run_mcmd_with(&model, &cfg, &domain, &mut rng(seed), |_, est| {
            let h = est.kernel().bandwidths()[0];
            let n = est.particles().len() as f64;
            fractions.push(
                est.particles()
                    .positions()
                    .iter()
                    .filter(|x| (x[0] - 0.3).abs() <= h)
                    .count() as f64
                    / n,
            );
        })
        .unwrap();
        if fractions.windows(2).all(|w| w[1] >= w[0]) {
            monotone += 1;
        }
    }
    assert!(monotone * 2 > seeds, "{monotone}/{seeds} seeds monotone");
}

fn two_particle_estimate() -> (MaxDistEstimate, Domain) {
    let domain = Domain::interval(0.0, 1.0).unwrap();
    let particles = ParticleSet::new(vec![vec![0.2], vec![0.65]], vec![1.0, 3.0]).unwrap();
    let est = MaxDistEstimate::new(particles, KdeKernel::new(vec![0.08]).unwrap()).unwrap();
    (est, domain)
}

#[test]
fn kde_is_linear_in_particles_and_integrates_to_one() {
    let (est, _) = two_particle_estimate();
    let k = est.kernel();
    for x in [0.0, 0.2, 0.4, 0.9] {
        let expected = 0.25 * k.density(&[x], &[0.2]) + 0.75 * k.density(&[x], &[0.65]);
        assert!((kde_density(&est, &[x]) - expected).abs() < 1e-14);
    }
    let (lo, hi, n) = (-1.0, 2.0, 30_000);
    let h = (hi - lo) / n as f64;
    let integral: f64 = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * kde_density(&est, &[lo + i as f64 * h])
        })
        .sum::<f64>()
        * h;
    assert!((integral - 1.0).abs() < 0.01);
}

#[test]
fn samples_follow_the_kde() {
    let (est, domain) = two_particle_estimate();
    let mut r = rng(6);
    let bins = 50;
    let n = 100_000;
    let mut hist = vec![0.0; bins];
    for _ in 0..n {
        let x = sample_from_estimate(&est, &domain, &mut r).unwrap();
        assert!(domain.contains(&x));
        hist[((x[0] * bins as f64) as usize).min(bins - 1)] += 1.0 / n as f64;
    }
    let centres = domain.cell_centres(bins);
    let kde = est.distribution_on(&centres);
    assert!(tv_distance(&hist, &kde) < 0.03);
}

#[test]
fn corner_particle_samples_stay_in_domain() {
    let domain = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let particles = ParticleSet::new(vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
    let est = MaxDistEstimate::new(particles, KdeKernel::new(vec![0.3, 0.3]).unwrap()).unwrap();
    let mut r = rng(7);
    for _ in 0..2000 {
        assert!(domain.contains(&sample_from_estimate(&est, &domain, &mut r).unwrap()));
    }
}

#[test]
fn vanishing_kernel_returns_particle() {
    let domain = Domain::interval(0.0, 1.0).unwrap();
    let particles = ParticleSet::new(vec![vec![0.42]], vec![1.0]).unwrap();
    let est = MaxDistEstimate::new(particles, KdeKernel::new(vec![1e-12]).unwrap()).unwrap();
    let x = sample_from_estimate(&est, &domain, &mut rng(8)).unwrap();
    assert!((x[0] - 0.42).abs() < 1e-9);
}

#[test]
fn example_fixture_estimate_is_no_more_peaked_than_truth() {
    let fx = example_fixture(2024).unwrap();
    let grid = fx.domain.grid(20);
    let cfg = MaxDistConfig {
        particles: 10_000,
        ..Default::default()
    };
    let est = run_mcmd(&fx.posterior, &cfg, &fx.domain, &mut rng(9)).unwrap();
    let truth = brute_force_max_distribution(&fx.posterior, &grid, 100_000, &mut rng(10)).unwrap();
    let h_est = entropy(&est.distribution_on(&grid));
    let h_truth = entropy(&truth.probabilities);
    assert!(h_est >= h_truth - 0.05, "{h_est} vs {h_truth}");
}

#[test]
fn fixed_seed_is_reproducible() {
    let fx = example_fixture(1).unwrap();
    let cfg = thompson_config();
    let a = run_mcmd(&fx.posterior, &cfg, &fx.domain, &mut rng(11)).unwrap();
    let b = run_mcmd(&fx.posterior, &cfg, &fx.domain, &mut rng(11)).unwrap();
    assert_eq!(a.particles(), b.particles());
}

#[test]
fn early_stop_ends_before_round_limit() {
    let domain = Domain::interval(0.0, 1.0).unwrap();
    let model = Deterministic::new(1, peaked);
    let cfg = MaxDistConfig {
        particles: 2000,
        rounds: 200,
        tv_tolerance: Some(0.01),
        ..Default::default()
    };
    let mut last = 0;
    run_mcmd_with(&model, &cfg, &domain, &mut rng(12), |round, _| last = round).unwrap();
    assert!(last < 200, "ran {last} rounds");
}
