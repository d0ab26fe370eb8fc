//! Experiment configuration: defaults per experiment, JSON files and
//! `key=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mcmd_core::fixtures::{self, EXAMPLE_NOISE_STD};
use mcmd_core::objectives::{branin_objective, example_objective};
use mcmd_core::{AcquisitionSpec, BenchObjective, KernelSpec, MaxDistConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    McmdDemo,
    #[serde(rename = "regret-1d")]
    Regret1d,
    RegretBranin,
    OracleCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::McmdDemo => "mcmd-demo",
            Experiment::Regret1d => "regret-1d",
            Experiment::RegretBranin => "regret-branin",
            Experiment::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveChoice {
    Example,
    Branin,
    /// Flat objective over the example domain.
    Constant(f64),
}

impl ObjectiveChoice {
    pub fn build(&self) -> BenchObjective {
        match self {
            ObjectiveChoice::Example => example_objective(),
            ObjectiveChoice::Branin => branin_objective(),
            ObjectiveChoice::Constant(v) => {
                BenchObjective::constant(example_objective().domain, *v)
            }
        }
    }
}

/// GP prior and observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpConfig {
    pub signal_variance: f64,
    pub length_scales: Vec<f64>,
    #[serde(default)]
    pub prior_mean: f64,
    pub noise_std: f64,
}

impl GpConfig {
    fn from_kernel(k: &KernelSpec, noise_std: f64) -> Self {
        Self {
            signal_variance: k.signal_variance,
            length_scales: k.length_scales.clone(),
            prior_mean: k.prior_mean,
            noise_std,
        }
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        Ok(
            KernelSpec::squared_exponential(self.signal_variance, self.length_scales.clone())?
                .with_prior_mean(self.prior_mean),
        )
    }
}

/// A labelled acquisition method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub label: String,
    #[serde(flatten)]
    pub spec: AcquisitionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    /// Number of noisy measurements of the example function.
    pub measurements: usize,
    /// Points of the shared output grid.
    pub grid_points: usize,
    pub brute_force_samples: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            measurements: fixtures::EXAMPLE_MEASUREMENTS,
            grid_points: 512,
            brute_force_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub particles: usize,
    pub rounds: usize,
    /// Largest accepted TV distance between particle fractions and the analytic limit.
    pub tv_tolerance: f64,
    /// Points of the grid for the brute-force comparison on the example fixture.
    pub comparison_grid: usize,
    pub brute_force_samples: usize,
    /// Break the antisymmetry of the pairwise matrix before solving (negative test).
    pub corrupt_pairwise: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            particles: 10_000,
            rounds: 100,
            tv_tolerance: 0.05,
            comparison_grid: 20,
            brute_force_samples: 1_000_000,
            corrupt_pairwise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Worker threads for independent jobs; 0 uses every core.
    pub workers: usize,
    pub objective: ObjectiveChoice,
    pub gp: GpConfig,
    pub iterations: usize,
    pub methods: Vec<MethodConfig>,
    pub mcmd: MaxDistConfig,
    pub demo: DemoConfig,
    pub oracle: OracleConfig,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let setup = match experiment {
            Experiment::RegretBranin => fixtures::regret_branin(),
            _ => fixtures::regret_1d(),
        };
        let objective = match experiment {
            Experiment::RegretBranin => ObjectiveChoice::Branin,
            _ => ObjectiveChoice::Example,
        };
        let seeds = match experiment {
            Experiment::Regret1d | Experiment::RegretBranin => (0..50).collect(),
            _ => vec![0],
        };
        let noise_std = match experiment {
            Experiment::RegretBranin => setup.noise_std,
            _ => EXAMPLE_NOISE_STD,
        };
        Self {
            experiment,
            seeds,
            out_dir: PathBuf::from(format!("results/{}", experiment.name())),
            workers: 0,
            objective,
            gp: GpConfig::from_kernel(&setup.prior, noise_std),
            iterations: setup.iterations,
            methods: setup
                .methods
                .into_iter()
                .map(|(label, spec)| MethodConfig { label, spec })
                .collect(),
            mcmd: MaxDistConfig::default(),
            demo: DemoConfig::default(),
            oracle: OracleConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("seed list is empty");
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].iter().any(|o| o.label == m.label) {
                bail!("method label {:?} is used twice", m.label);
            }
            m.spec
                .validate()
                .with_context(|| format!("method {:?}", m.label))?;
        }
        if self.iterations == 0 {
            bail!("iterations must be at least 1");
        }
        self.gp.kernel()?;
        if !(self.gp.noise_std >= 0.0 && self.gp.noise_std.is_finite()) {
            bail!("noise_std must be finite and nonnegative");
        }
        self.mcmd.validate()?;
        if self.demo.grid_points < 2
            || self.demo.measurements == 0
            || self.demo.brute_force_samples == 0
        {
            bail!(
                "demo settings need at least 2 grid points, 1 measurement and 1 brute-force sample"
            );
        }
        if self.oracle.comparison_grid < 2 || self.oracle.brute_force_samples == 0 {
            bail!("oracle settings need at least 2 grid points and 1 brute-force sample");
        }
        if self.gp.length_scales.len() != self.objective.build().dim() {
            bail!(
                "gp has {} length scales but the {} objective is {}-dimensional",
                self.gp.length_scales.len(),
                self.objective.build().name,
                self.objective.build().dim()
            );
        }
        Ok(())
    }
}

/// Command-line adjustments applied on top of defaults and the config file.
#[derive(Debug, Clone, Default)]
pub struct Adjustments {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub overrides: Vec<String>,
}

/// Resolve the configuration for a command. `allowed` lists the experiments
/// the command can run; the first is the default.
pub fn resolve(allowed: &[Experiment], adj: &Adjustments) -> Result<ExperimentConfig> {
    let file = match &adj.config {
        Some(path) => Some(read_json(path)?),
        None => None,
    };
    let mut requested = file.as_ref().and_then(|v| v.get("experiment")).cloned();
    for o in &adj.overrides {
        if let Some(("experiment", value)) = o.split_once('=') {
            requested = Some(parse_value(value));
        }
    }
    let experiment = match requested {
        Some(v) => serde_json::from_value::<Experiment>(v).context("unknown experiment")?,
        None => allowed[0],
    };
    if !allowed.contains(&experiment) {
        bail!(
            "this command cannot run the {} experiment",
            experiment.name()
        );
    }

    let mut tree = serde_json::to_value(ExperimentConfig::defaults(experiment))?;
    if let Some(file) = file {
        merge(&mut tree, file, "")?;
    }
    for o in &adj.overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| anyhow!("override {o:?} is not key=value"))?;
        set_path(&mut tree, key, parse_value(value))?;
    }
    let mut cfg: ExperimentConfig =
        serde_json::from_value(tree).context("invalid configuration")?;
    if let Some(seed) = adj.seed {
        let n = cfg.seeds.len() as u64;
        cfg.seeds = (seed..seed + n).collect();
    }
    if let Some(dir) = &adj.out_dir {
        cfg.out_dir = dir.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_json(path: &Path) -> Result<Value> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// JSON if it parses, otherwise a bare string.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Deep-merge `patch` into `base`. Objects merge key by key; anything else,
/// arrays included, replaces. Keys absent from `base` are rejected so typos
/// do not pass silently.
fn merge(base: &mut Value, patch: Value, at: &str) -> Result<()> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let path = if at.is_empty() {
                    k.clone()
                } else {
                    format!("{at}.{k}")
                };
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() => merge(slot, v, &path)?,
                    Some(slot) => *slot = v,
                    None => bail!("unknown configuration key {path:?}"),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

/// Set a dotted path such as `mcmd.particles` or `methods.1.kappa`.
fn set_path(tree: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts {
        node = match node {
            Value::Object(map) => map
                .get_mut(*part)
                .ok_or_else(|| anyhow!("unknown configuration key {key:?}"))?,
            Value::Array(items) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| anyhow!("{key:?}: {part:?} is not an index"))?;
                let len = items.len();
                items
                    .get_mut(i)
                    .ok_or_else(|| anyhow!("{key:?}: index {i} out of range (length {len})"))?
            }
            _ => bail!("{key:?}: cannot descend into a scalar"),
        };
    }
    *node = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj(overrides: &[&str]) -> Adjustments {
        Adjustments {
            overrides: overrides.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn defaults_validate_for_every_experiment() {
        for e in [
            Experiment::McmdDemo,
            Experiment::Regret1d,
            Experiment::RegretBranin,
            Experiment::OracleCheck,
        ] {
            ExperimentConfig::defaults(e).validate().unwrap();
        }
    }

    #[test]
    fn experiment_names_match_serialized_form() {
        for e in [
            Experiment::McmdDemo,
            Experiment::Regret1d,
            Experiment::RegretBranin,
            Experiment::OracleCheck,
        ] {
            assert_eq!(serde_json::to_value(e).unwrap(), e.name());
        }
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = resolve(
            &[Experiment::Regret1d],
            &adj(&["methods.1.kappa=3.5", "mcmd.particles=200", "iterations=7"]),
        )
        .unwrap();
        assert_eq!(cfg.methods[1].spec.kappa, 3.5);
        assert_eq!(cfg.mcmd.particles, 200);
        assert_eq!(cfg.iterations, 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(resolve(&[Experiment::Regret1d], &adj(&["mcmd.partcles=3"])).is_err());
        assert!(resolve(&[Experiment::Regret1d], &adj(&["methods.9.kappa=1"])).is_err());
    }

    #[test]
    fn seed_flag_shifts_the_seed_list() {
        let a = Adjustments {
            seed: Some(100),
            ..adj(&["seeds=[0,1,2]"])
        };
        assert_eq!(
            resolve(&[Experiment::Regret1d], &a).unwrap().seeds,
            vec![100, 101, 102]
        );
    }

    #[test]
    fn experiment_must_match_command() {
        assert!(resolve(&[Experiment::McmdDemo], &adj(&["experiment=regret-1d"])).is_err());
        let cfg = resolve(
            &[Experiment::Regret1d, Experiment::RegretBranin],
            &adj(&["experiment=regret-branin"]),
        )
        .unwrap();
        assert_eq!(cfg.gp.length_scales.len(), 2);
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        assert!(resolve(&[Experiment::Regret1d], &adj(&["methods.1.label=thompson"])).is_err());
    }

    #[test]
    fn constant_objective_override() {
        let cfg = resolve(
            &[Experiment::Regret1d],
            &adj(&[r#"objective={"constant":2.5}"#]),
        )
        .unwrap();
        assert_eq!(cfg.objective, ObjectiveChoice::Constant(2.5));
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig::defaults(Experiment::RegretBranin);
        let back: ExperimentConfig =
            serde_json::from_value(serde_json::to_value(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
