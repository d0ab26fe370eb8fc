//! `regret`: repeated optimization runs per method and seed, with per-run
//! traces and mean regret curves.

use anyhow::{Context, Result};
use mcmd_core::{run_optimization, AcquisitionKind, OptimizationProblem, RunTrace};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::prepare_out_dir;
use crate::report::{Check, Report};
use crate::table::{num, Table};

pub const PLOT_SCRIPT: &str = r#"# Plot the curves in mean_regret.csv (requires pandas and matplotlib).
import pandas as pd
import matplotlib.pyplot as plt

d = pd.read_csv("mean_regret.csv")
fig, ax = plt.subplots()
for method, g in d.groupby("method", sort=False):
    ax.plot(g.iteration, g.mean_cumulative_regret, label=method)
ax.set_xlabel("iteration")
ax.set_ylabel("mean cumulative regret")
ax.legend()
fig.savefig("mean_regret.png", dpi=150)
"#;

/// Trace columns for a `dim`-dimensional input.
pub fn trace_header(dim: usize) -> Vec<String> {
    let mut h = vec!["method".to_string(), "seed".into(), "iteration".into()];
    h.extend((1..=dim).map(|i| format!("x{i}")));
    h.extend(["y", "instant_regret", "cumulative_regret"].map(String::from));
    h
}

fn trace_rows(trace: &RunTrace, table: &mut Table) {
    for r in &trace.rows {
        let mut row = vec![
            trace.label.clone(),
            trace.seed.to_string(),
            r.index.to_string(),
        ];
        row.extend(r.input.iter().map(|v| num(*v)));
        row.extend([
            num(r.observed),
            num(r.instant_regret),
            num(r.cumulative_regret),
        ]);
        table.push(row);
    }
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Mean over the runs that reached each iteration.
pub fn mean_curves(traces: &[&RunTrace], iterations: usize) -> Vec<(f64, f64, usize)> {
    (0..iterations)
        .map(|k| {
            let reached: Vec<_> = traces.iter().filter_map(|t| t.rows.get(k)).collect();
            let n = reached.len();
            let cum = reached.iter().map(|r| r.cumulative_regret).sum::<f64>() / n as f64;
            let inst = reached.iter().map(|r| r.instant_regret).sum::<f64>() / n as f64;
            (cum, inst, n)
        })
        .take_while(|(_, _, n)| *n > 0)
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let out = prepare_out_dir(cfg)?;
    let traces_dir = out.join("traces");
    std::fs::create_dir_all(&traces_dir)?;
    let objective = cfg.objective.build();
    objective.self_check()?;
    let problem = OptimizationProblem {
        domain: objective.domain.clone(),
        prior: cfg.gp.kernel()?,
        noise_std: cfg.gp.noise_std,
        f_star: objective.f_star,
    };
    let dim = objective.dim();

    let jobs: Vec<(usize, u64)> = (0..cfg.methods.len())
        .flat_map(|m| cfg.seeds.iter().map(move |s| (m, *s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()?;
    let traces: Vec<RunTrace> = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, seed)| -> Result<RunTrace> {
                let method = &cfg.methods[m];
                let trace = run_optimization(
                    |x| Ok(objective.evaluate(x)),
                    &problem,
                    &method.spec,
                    &method.label,
                    cfg.iterations,
                    seed,
                )
                .with_context(|| format!("method {}, seed {seed}", method.label))?;
                let mut table = Table::new(trace_header(dim));
                trace_rows(&trace, &mut table);
                table.write(
                    &traces_dir.join(format!("{}_seed{seed}.csv", file_label(&method.label))),
                )?;
                Ok(trace)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut all = Table::new(trace_header(dim));
    let mut runs = Table::new([
        "method",
        "seed",
        "status",
        "iterations",
        "acquisition_evaluations",
        "final_cumulative_regret",
        "failure",
    ]);
    for t in &traces {
        trace_rows(t, &mut all);
        runs.push(vec![
            t.label.clone(),
            t.seed.to_string(),
            if t.is_partial() {
                "partial"
            } else {
                "complete"
            }
            .into(),
            t.rows.len().to_string(),
            t.acquisition_evaluations.to_string(),
            t.rows
                .last()
                .map_or(String::new(), |r| num(r.cumulative_regret)),
            t.failure.clone().unwrap_or_default(),
        ]);
    }
    all.write(&out.join("regret.csv"))?;
    runs.write(&out.join("runs.csv"))?;

    let mut report = Report::default();
    let mut mean = Table::new([
        "method",
        "iteration",
        "mean_cumulative_regret",
        "mean_instant_regret",
        "runs",
    ]);
    for method in &cfg.methods {
        let mine: Vec<&RunTrace> = traces.iter().filter(|t| t.label == method.label).collect();
        let curve = mean_curves(&mine, cfg.iterations);
        for (k, (cum, inst, n)) in curve.iter().enumerate() {
            mean.push(vec![
                method.label.clone(),
                (k + 1).to_string(),
                num(*cum),
                num(*inst),
                n.to_string(),
            ]);
        }
        let label = &method.label;
        let partial = mine.iter().filter(|t| t.is_partial()).count();
        report.push(Check::new(
            format!("{label}_partial_runs"),
            partial as f64,
            "== 0",
            partial == 0,
        ));
        let finite = curve.iter().all(|c| c.0.is_finite());
        report.push(Check::new(
            format!("{label}_finite"),
            finite as u8 as f64,
            "== 1",
            finite,
        ));
        let worst_drop = curve
            .windows(2)
            .map(|w| w[0].0 - w[1].0)
            .fold(0.0, f64::max);
        report.push(Check::new(
            format!("{label}_cumulative_drop"),
            worst_drop,
            "<= 1e-9",
            worst_drop <= 1e-9,
        ));
        if method.spec.kind == AcquisitionKind::Thompson {
            let evals: u64 = mine.iter().map(|t| t.acquisition_evaluations).sum();
            report.push(Check::new(
                format!("{label}_acquisition_evaluations"),
                evals as f64,
                "== 0",
                evals == 0,
            ));
        }
        if let Some(last) = curve.last() {
            report.push(Check::new(
                format!("{label}_final_mean_cumulative_regret"),
                last.0,
                "info",
                true,
            ));
        }
    }
    mean.write(&out.join("mean_regret.csv"))?;
    std::fs::write(out.join("plot_regret.py"), PLOT_SCRIPT)?;
    report.write(&out.join("summary.csv"))?;
    Ok(report)
}
