//! `oracle-check`: cross-checks of the particle algorithm against the
//! analytic limit and brute-force reference distributions.

use anyhow::Result;
use mcmd_core::fixtures::{
    discrete_config, example_fixture_with, five_point_asymmetric, five_point_symmetric,
};
use mcmd_core::oracles::{balance_residual, entropy, tv_distance, PairwiseWinMatrix};
use mcmd_core::{
    brute_force_max_distribution, discrete_limit_distribution, pairwise_win_matrix, run_mcmd,
};

use crate::config::ExperimentConfig;
use crate::report::{Check, Report};
use crate::table::{num, Table};
use crate::{prepare_out_dir, stream};

/// Shift one entry so that `P_01 + P_10 != 1`.
pub fn corrupt(win: &PairwiseWinMatrix) -> PairwiseWinMatrix {
    let mut p = win.matrix().clone();
    p[(0, 1)] += if p[(0, 1)] <= 0.5 { 0.2 } else { -0.2 };
    PairwiseWinMatrix::from_matrix_unchecked(win.grid().to_vec(), p)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let out = prepare_out_dir(cfg)?;
    let seed = cfg.seeds[0];
    let oc = &cfg.oracle;
    let mut report = Report::default();
    let mut fractions = Table::new(["fixture", "grid_x", "analytic", "empirical"]);

    for (k, (name, fixture)) in [
        ("symmetric", five_point_symmetric()?),
        ("asymmetric", five_point_asymmetric()?),
    ]
    .into_iter()
    .enumerate()
    {
        let mut win = pairwise_win_matrix(&fixture.posterior, &fixture.grid)?;
        if oc.corrupt_pairwise {
            win = corrupt(&win);
        }
        let err = win.antisymmetry_error();
        report.push(Check::new(
            format!("{name}_antisymmetry_error"),
            err,
            "<= 1e-12",
            err <= 1e-12,
        ));
        let limit = match discrete_limit_distribution(&win) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("{name} fixture: {e}");
                report.push(Check::new(
                    format!("{name}_limit_solve"),
                    f64::NAN,
                    "solvable",
                    false,
                ));
                continue;
            }
        };
        let residual = balance_residual(&win, &limit.probabilities);
        report.push(Check::new(
            format!("{name}_balance_residual"),
            residual,
            "< 1e-9",
            residual < 1e-9,
        ));
        let model = &fixture.model;
        let est = run_mcmd(
            model,
            &discrete_config(oc.particles, oc.rounds),
            &model.domain(),
            &mut stream(seed, k as u64),
        )?;
        let empirical = model.cell_fractions(est.particles())?;
        let tv = tv_distance(&empirical, &limit.probabilities);
        report.push(Check::new(
            format!("{name}_tv_particles_limit"),
            tv,
            format!("< {}", oc.tv_tolerance),
            tv < oc.tv_tolerance,
        ));
        for ((x, a), e) in fixture
            .grid
            .iter()
            .zip(&limit.probabilities)
            .zip(&empirical)
        {
            fractions.push(vec![name.into(), num(x[0]), num(*a), num(*e)]);
        }
    }
    fractions.write(&out.join("fractions.csv"))?;

    let fx = example_fixture_with(
        seed,
        cfg.demo.measurements,
        cfg.gp.kernel()?,
        cfg.gp.noise_std,
    )?;
    let grid = fx.domain.grid(oc.comparison_grid);
    let truth = brute_force_max_distribution(
        &fx.posterior,
        &grid,
        oc.brute_force_samples,
        &mut stream(seed, 10),
    )?;
    let limit = discrete_limit_distribution(&pairwise_win_matrix(&fx.posterior, &grid)?)?;
    let est = run_mcmd(&fx.posterior, &cfg.mcmd, &fx.domain, &mut stream(seed, 11))?;
    let mcmd = est.distribution_on(&grid);
    let tv_lt = tv_distance(&limit.probabilities, &truth.probabilities);
    report.push(Check::new(
        "example_tv_limit_brute_force",
        tv_lt,
        "> 0.01",
        tv_lt > 0.01,
    ));
    let (h_limit, h_truth) = (entropy(&limit.probabilities), entropy(&truth.probabilities));
    report.push(Check::new(
        "example_entropy_gap",
        h_limit - h_truth,
        ">= -0.05",
        h_limit >= h_truth - 0.05,
    ));
    report.push(Check::new(
        "example_tv_mcmd_limit",
        tv_distance(&mcmd, &limit.probabilities),
        "info",
        true,
    ));
    report.push(Check::new(
        "example_tv_mcmd_brute_force",
        tv_distance(&mcmd, &truth.probabilities),
        "info",
        true,
    ));

    let mut comparison = Table::new(["grid_x", "brute_force", "limit", "mcmd"]);
    for (i, x) in grid.iter().enumerate() {
        comparison.push(vec![
            num(x[0]),
            num(truth.probabilities[i]),
            num(limit.probabilities[i]),
            num(mcmd[i]),
        ]);
    }
    comparison.write(&out.join("comparison.csv"))?;
    report.write(&out.join("oracle_report.csv"))?;
    Ok(report)
}
