use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcmd_cli::config::Adjustments;
use mcmd_cli::{execute, Command};

#[derive(Parser)]
#[command(
    name = "mcmd",
    version,
    about = "Maximum-distribution experiments for Gaussian-process optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON configuration file; missing keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// First seed; the seed list becomes seed, seed+1, ... with its length unchanged.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Set a configuration value, e.g. `mcmd.particles=2000` or `methods.1.kappa=3`.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Particle estimates per round against brute-force and analytic references.
    McmdDemo,
    /// Regret comparison of Thompson sampling and acquisition-function methods.
    Regret,
    /// Cross-check the particle algorithm against the analytic oracles.
    OracleCheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::McmdDemo => Command::McmdDemo,
        Cmd::Regret => Command::Regret,
        Cmd::OracleCheck => Command::OracleCheck,
    };
    let adj = Adjustments {
        config: cli.config,
        seed: cli.seed,
        out_dir: cli.out_dir,
        overrides: cli.overrides,
    };
    match execute(command, &adj) {
        Ok(report) => {
            report.print();
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
