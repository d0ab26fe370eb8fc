//! `mcmd-demo`: particle estimates round by round next to the brute-force
//! and analytic reference distributions on a shared grid.

use anyhow::Result;
use mcmd_core::fixtures::example_fixture_with;
use mcmd_core::oracles::{entropy, tv_distance};
use mcmd_core::{
    brute_force_max_distribution, discrete_limit_distribution, pairwise_win_matrix, run_mcmd_with,
};

use crate::config::ExperimentConfig;
use crate::report::{Check, Report};
use crate::table::{num, Table};
use crate::{prepare_out_dir, stream};

pub const PLOT_SCRIPT: &str = r#"# Plot the curves in distributions.csv (requires pandas and matplotlib).
import pandas as pd
import matplotlib.pyplot as plt

d = pd.read_csv("distributions.csv")
fig, ax = plt.subplots()
for r, g in d[d.label == "mcmd"].groupby("round"):
    ax.plot(g.grid_x, g.density, color="tab:blue", alpha=0.2 + 0.8 * r / d["round"].max())
for label, style in [("brute_force", "k-"), ("limit", "r--")]:
    g = d[d.label == label]
    ax.plot(g.grid_x, g.density, style, label=label)
ax.set_xlabel("x")
ax.set_ylabel("density of the maximizer")
ax.legend()
fig.savefig("distributions.png", dpi=150)
"#;

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let out = prepare_out_dir(cfg)?;
    let seed = cfg.seeds[0];
    let fx = example_fixture_with(
        seed,
        cfg.demo.measurements,
        cfg.gp.kernel()?,
        cfg.gp.noise_std,
    )?;
    let grid = fx.domain.grid(cfg.demo.grid_points);
    let spacing = fx.domain.edges()[0] / (grid.len() - 1) as f64;

    let limit = discrete_limit_distribution(&pairwise_win_matrix(&fx.posterior, &grid)?)?;
    let truth = brute_force_max_distribution(
        &fx.posterior,
        &grid,
        cfg.demo.brute_force_samples,
        &mut stream(seed, 2),
    )?;

    let mut rounds: Vec<(Vec<f64>, f64)> = Vec::new();
    run_mcmd_with(
        &fx.posterior,
        &cfg.mcmd,
        &fx.domain,
        &mut stream(seed, 1),
        |_, est| {
            let tv = tv_distance(&est.distribution_on(&grid), &limit.probabilities);
            rounds.push((est.density_at(&grid), tv));
        },
    )?;

    let mut dist = Table::new(["grid_x", "density", "label", "round"]);
    for (r, (density, _)) in rounds.iter().enumerate() {
        for (x, d) in grid.iter().zip(density) {
            dist.push(vec![num(x[0]), num(*d), "mcmd".into(), (r + 1).to_string()]);
        }
    }
    for (label, p) in [
        ("brute_force", &truth.probabilities),
        ("limit", &limit.probabilities),
    ] {
        for (x, v) in grid.iter().zip(p) {
            dist.push(vec![num(x[0]), num(v / spacing), label.into(), "0".into()]);
        }
    }
    dist.write(&out.join("distributions.csv"))?;

    let mut data = Table::new(["x", "y"]);
    for (x, y) in fx.data.inputs.iter().zip(&fx.data.outputs) {
        data.push(vec![num(x[0]), num(*y)]);
    }
    data.write(&out.join("measurements.csv"))?;

    let pred = fx.posterior.predict(&grid)?;
    let mut gp = Table::new(["grid_x", "mean", "std"]);
    for (i, x) in grid.iter().enumerate() {
        gp.push(vec![
            num(x[0]),
            num(pred.mean[i]),
            num(pred.cov[(i, i)].max(0.0).sqrt()),
        ]);
    }
    gp.write(&out.join("posterior.csv"))?;
    std::fs::write(out.join("plot_distributions.py"), PLOT_SCRIPT)?;

    let mut report = Report::default();
    let first = rounds.first().map_or(f64::NAN, |r| r.1);
    let last = rounds.last().map_or(f64::NAN, |r| r.1);
    report.push(Check::new("tv_limit_round_1", first, "reference", true));
    report.push(Check::new(
        format!("tv_limit_round_{}", rounds.len()),
        last,
        "< round 1",
        last < first,
    ));
    let tv_truth = tv_distance(&limit.probabilities, &truth.probabilities);
    report.push(Check::new(
        "tv_limit_brute_force",
        tv_truth,
        "reference",
        true,
    ));
    report.push(Check::new(
        "entropy_limit",
        entropy(&limit.probabilities),
        "reference",
        true,
    ));
    report.push(Check::new(
        "entropy_brute_force",
        entropy(&truth.probabilities),
        "reference",
        true,
    ));
    report.write(&out.join("summary.csv"))?;
    Ok(report)
}
