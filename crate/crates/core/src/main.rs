//! `uavnet` — train, evaluate and compare UAV coverage policies from the
//! command line, or export a scenario as a trace CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use uavnet_core::agent::AgentVariant;
use uavnet_core::config::WorldConfig;
use uavnet_core::harness::{self, RunPlan};

#[derive(Parser)]
#[command(name = "uavnet", version, about = "UAV aerial base station coverage simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Configuration file (TOML). Omit for the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for run artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Run seeds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Agent variant; repeat the flag for comparisons.
    #[arg(long = "variant", default_value = "dacemad")]
    variants: Vec<AgentVariant>,
    /// Override the configured episode count.
    #[arg(long)]
    episodes_override: Option<u32>,
    /// Checkpoint directory (resume source for train, parameters for eval).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train agents and export metrics, checkpoints and trajectories.
    Train(CommonArgs),
    /// Evaluate stored checkpoints greedily (no exploration, no learning).
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Episodes per evaluation pass.
        #[arg(long, default_value_t = 1)]
        eval_episodes: u32,
    },
    /// Train and evaluate several variants under identical seeds.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Episodes per evaluation pass.
        #[arg(long, default_value_t = 1)]
        eval_episodes: u32,
    },
    /// Write the configured scenario as a trace CSV.
    GenScenario {
        /// Configuration file (TOML). Omit for the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Destination CSV file.
        #[arg(long)]
        out: PathBuf,
        /// Number of timesteps to materialise.
        #[arg(long, default_value_t = 1)]
        steps: u64,
    },
}

fn load_config(path: &Option<PathBuf>) -> anyhow::Result<WorldConfig> {
    let mut cfg = match path {
        Some(p) => WorldConfig::from_toml_file(p)?,
        None => WorldConfig::default(),
    };
    cfg.apply_env_seed_override()?;
    Ok(cfg)
}

fn plan_from(common: &CommonArgs) -> anyhow::Result<RunPlan> {
    let cfg = load_config(&common.config)?;
    let mut plan = RunPlan::new(cfg, &common.out);
    plan.seeds = common.seeds.clone();
    plan.variants = common.variants.clone();
    plan.episodes_override = common.episodes_override;
    plan.checkpoint = common.checkpoint.clone();
    Ok(plan)
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Train(common) => {
            let plan = plan_from(&common)?;
            let runs = harness::train(&plan)?;
            for run in &runs {
                let last = run.episodes.last().context("no episodes ran")?;
                println!(
                    "trained {} seed {}: {} episodes, final cdr {:.4}, ee {:.2} bits/J -> {}",
                    run.variant,
                    run.seed,
                    run.episodes.len(),
                    last.cdr,
                    last.ee_bits_per_joule,
                    run.run_dir.display()
                );
            }
            Ok(())
        }
        Command::Eval { common, eval_episodes } => {
            let mut plan = plan_from(&common)?;
            plan.eval_episodes = eval_episodes;
            let runs = harness::evaluate(&plan)?;
            for run in &runs {
                let mean_cdr = run.episodes.iter().map(|m| m.cdr).sum::<f64>()
                    / run.episodes.len().max(1) as f64;
                let mean_ee = run.episodes.iter().map(|m| m.ee_bits_per_joule).sum::<f64>()
                    / run.episodes.len().max(1) as f64;
                println!(
                    "eval {} seed {}: cdr {:.4}, ee {:.2} bits/J -> {}",
                    run.variant,
                    run.seed,
                    mean_cdr,
                    mean_ee,
                    run.run_dir.display()
                );
            }
            Ok(())
        }
        Command::Compare { common, eval_episodes } => {
            let mut plan = plan_from(&common)?;
            plan.eval_episodes = eval_episodes;
            let table = harness::compare(&plan)?;
            print!("{table}");
            println!("written to {}", plan.out_dir.join("comparison.csv").display());
            Ok(())
        }
        Command::GenScenario { config, out, steps } => {
            let cfg = load_config(&config)?;
            let stats = harness::gen_scenario(&cfg, &out, steps)?;
            println!("wrote {} rows over {} steps to {}", stats.rows, steps, out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One machine-readable error line on stderr.
            eprintln!("{}", serde_json::json!({ "error": format!("{err:#}") }));
            ExitCode::FAILURE
        }
    }
}
