//! Experiment harness around `mcmd-core`: configuration, the three
//! commands and their CSV outputs.

pub mod config;
pub mod demo;
pub mod oracle;
pub mod regret;
pub mod report;
pub mod table;

use std::path::PathBuf;

use anyhow::{Context, Result};
use mcmd_core::objectives::{branin_objective, example_objective};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::{Adjustments, Experiment, ExperimentConfig};
use report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    McmdDemo,
    Regret,
    OracleCheck,
}

impl Command {
    pub fn experiments(self) -> &'static [Experiment] {
        match self {
            Command::McmdDemo => &[Experiment::McmdDemo],
            Command::Regret => &[Experiment::Regret1d, Experiment::RegretBranin],
            Command::OracleCheck => &[Experiment::OracleCheck],
        }
    }
}

/// Resolve the configuration and run `command`.
pub fn execute(command: Command, adj: &Adjustments) -> Result<Report> {
    for objective in [example_objective(), branin_objective()] {
        objective.self_check().context("objective self-check")?;
    }
    let cfg = config::resolve(command.experiments(), adj)?;
    run(command, &cfg)
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Report> {
    match command {
        Command::McmdDemo => demo::run(cfg),
        Command::Regret => regret::run(cfg),
        Command::OracleCheck => oracle::run(cfg),
    }
}

/// Create the output directory and record the resolved configuration in it.
pub fn prepare_out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let out = cfg.out_dir.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut json = serde_json::to_string_pretty(cfg)?;
    json.push('\n');
    std::fs::write(out.join("config.json"), json)?;
    Ok(out)
}

/// Independent random stream `k` for a seed.
pub fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}
