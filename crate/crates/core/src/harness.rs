//! Run orchestration: training, greedy evaluation, variant comparison and
//! scenario export. Owns the episode loop — observe, select, step, store,
//! learn — and the on-disk layout of run artifacts.
//!
//! Layout under the output directory: one `<variant>/seed_<seed>/` directory
//! per run holding `metrics.csv`, `manifest.json`, per-agent checkpoints and
//! the final episode's `trajectory.jsonl`. Runs are deterministic: the same
//! configuration and seed produce byte-identical metrics files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{epsilon_schedule, AgentError, AgentVariant, DdqnAgent, Transition};
use crate::config::{ConfigError, WorldConfig};
use crate::env::{ActionId, EnvError, Environment, StepLog};
use crate::metrics::{
    episode_metrics, export_episode_csv, export_trajectory_jsonl, normalise_ee, write_manifest,
    EpisodeMetrics, MetricsError, COMPARISON_CSV_HEADER,
};
use crate::mobility::{generate_scenario, write_trace, MobilityError, TraceStats};
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot prepare output directory `{path}`: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
    #[error("missing checkpoint for agent {agent}: `{path}`")]
    MissingCheckpoint { agent: usize, path: String },
    #[error("{0}")]
    Plan(String),
}

// ---------------------------------------------------------------------------
// Run planning
// ---------------------------------------------------------------------------

/// One harness invocation: which command runs, on what configuration, where
/// artifacts go, and for which seeds/variants.
#[derive(Clone, Debug)]
pub struct RunPlan {
    pub config: WorldConfig,
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub variants: Vec<AgentVariant>,
    pub episodes_override: Option<u32>,
    /// Checkpoint directory: resume source for training, parameter source
    /// for evaluation.
    pub checkpoint: Option<PathBuf>,
    /// Episodes per evaluation pass (evaluate/compare).
    pub eval_episodes: u32,
}

impl RunPlan {
    pub fn new(config: WorldConfig, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            config,
            out_dir: out_dir.into(),
            seeds: vec![0],
            variants: vec![AgentVariant::Dacemad],
            episodes_override: None,
            checkpoint: None,
            eval_episodes: 1,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Plan("at least one seed is required".into()));
        }
        if self.variants.is_empty() {
            return Err(HarnessError::Plan("at least one variant is required".into()));
        }
        Ok(())
    }

    fn episodes(&self) -> u32 {
        self.episodes_override.unwrap_or(self.config.episodes)
    }

    fn variant(&self) -> AgentVariant {
        self.variants[0]
    }
}

/// Artifacts of one (variant, seed) run.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub variant: AgentVariant,
    pub seed: u64,
    pub run_dir: PathBuf,
    pub episodes: Vec<EpisodeMetrics>,
}

/// Evenly spaced take-off grid over the area: ⌈√n⌉ columns, cell centres,
/// row-major. Honoured unless the config pins explicit positions.
pub fn initial_positions(cfg: &WorldConfig) -> Vec<[f64; 2]> {
    if let Some(fixed) = &cfg.initial_uav_positions {
        return fixed.clone();
    }
    let n = cfg.n_uavs;
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let area = &cfg.area;
    (0..n)
        .map(|i| {
            let (row, col) = (i / cols, i % cols);
            [
                area.x_min_m + (col as f64 + 0.5) * area.width() / cols as f64,
                area.y_min_m + (row as f64 + 0.5) * area.height() / rows as f64,
            ]
        })
        .collect()
}

/// Build the environment for one run seed. The scenario stream is shared by
/// every variant, so comparisons see identical vehicle realisations.
pub fn build_environment(cfg: &WorldConfig, seed: u64) -> Result<Environment, HarnessError> {
    let provider = generate_scenario(&cfg.scenario, &cfg.area, seed)?;
    Ok(Environment::new(cfg, provider, initial_positions(cfg))?)
}

fn run_dir(plan_out: &Path, variant: AgentVariant, seed: u64) -> PathBuf {
    plan_out.join(variant.name()).join(format!("seed_{seed}"))
}

fn prepare_dir(path: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(path).map_err(|source| HarnessError::Output {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Episode loop
// ---------------------------------------------------------------------------

/// Run one episode: observe, act epsilon-greedily, step the world, store
/// transitions and learn (when `learn` is set). Returns the step logs.
pub fn run_episode(
    env: &mut Environment,
    agents: &mut [DdqnAgent],
    epsilon: f64,
    learn: bool,
) -> Result<Vec<StepLog>, HarnessError> {
    let n = agents.len();
    let raw = env.reset()?;
    let mut current: Vec<Vec<f64>> = raw
        .into_iter()
        .enumerate()
        .map(|(i, mut o)| {
            agents[i].mask_observation(&mut o);
            o
        })
        .collect();

    let mut logs = Vec::new();
    while env.is_active() {
        let alive = env.alive();
        let mut actions: Vec<Option<ActionId>> = vec![None; n];
        for i in 0..n {
            if alive[i] {
                actions[i] = Some(agents[i].select_action(&current[i], epsilon)?);
            }
        }
        let out = env.step(&actions)?;
        for i in 0..n {
            let (Some(action), Some(reward), Some(next_raw)) =
                (actions[i], out.rewards[i], out.observations[i].as_ref())
            else {
                continue;
            };
            let mut next = next_raw.clone();
            agents[i].mask_observation(&mut next);
            let effective_reward = if agents[i].variant.uses_cooperative_factor() {
                reward.total()
            } else {
                reward.own
            };
            if learn {
                agents[i].record(Transition {
                    state: std::mem::take(&mut current[i]),
                    action,
                    reward: effective_reward,
                    next_state: next.clone(),
                    terminal: out.done[i],
                });
                agents[i].learn_step()?;
            }
            current[i] = next;
        }
        logs.push(out.log);
        if out.all_done {
            break;
        }
    }
    Ok(logs)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn checkpoint_path(dir: &Path, agent: usize) -> PathBuf {
    dir.join(format!("agent_{agent}.json"))
}

fn make_agents(
    cfg: &WorldConfig,
    variant: AgentVariant,
    seed: u64,
    resume_from: Option<&Path>,
) -> Result<(Vec<DdqnAgent>, u32), HarnessError> {
    let mut agents = Vec::with_capacity(cfg.n_uavs);
    let mut start_episode = 0;
    for i in 0..cfg.n_uavs {
        let agent = match resume_from {
            Some(dir) if variant.is_learning() => {
                let path = checkpoint_path(dir, i);
                if !path.exists() {
                    return Err(HarnessError::MissingCheckpoint {
                        agent: i,
                        path: path.display().to_string(),
                    });
                }
                let agent = DdqnAgent::load_checkpoint(cfg, variant, i, seed, &path)?;
                start_episode = start_episode.max(agent.episodes_trained());
                agent
            }
            _ => DdqnAgent::new(cfg, variant, i, seed),
        };
        agents.push(agent);
    }
    Ok((agents, start_episode))
}

/// Train the plan's variant on every seed. Checkpoints and the metrics CSV
/// are written after each episode, so an interrupted run resumes from the
/// last finished episode via `checkpoint`.
pub fn train(plan: &RunPlan) -> Result<Vec<RunArtifacts>, HarnessError> {
    plan.validate()?;
    let variant = plan.variant();
    let episodes = plan.episodes();
    let mut results = Vec::new();
    for &seed in &plan.seeds {
        let dir = run_dir(&plan.out_dir, variant, seed);
        prepare_dir(&dir)?;
        let mut cfg = plan.config.clone();
        cfg.seed = seed;
        write_manifest(dir.join("manifest.json"), &cfg, seed, variant, episodes)?;

        let mut env = build_environment(&cfg, seed)?;
        let (mut agents, start_episode) =
            make_agents(&cfg, variant, seed, plan.checkpoint.as_deref())?;

        let mut metrics = Vec::new();
        let mut last_logs = Vec::new();
        for episode in start_episode..episodes {
            let epsilon = epsilon_schedule(&cfg.learning, episode);
            let started = Instant::now();
            let logs = run_episode(&mut env, &mut agents, epsilon, true)?;
            let wall = started.elapsed().as_secs_f64();
            metrics.push(episode_metrics(episode, &logs, cfg.step_duration_s, wall));
            for agent in &mut agents {
                agent.set_episodes_trained(episode + 1);
            }
            if variant.is_learning() {
                for (i, agent) in agents.iter().enumerate() {
                    agent.save_checkpoint(checkpoint_path(&dir, i))?;
                }
            }
            export_episode_csv(dir.join("metrics.csv"), &metrics)?;
            last_logs = logs;
        }
        export_trajectory_jsonl(dir.join("trajectory.jsonl"), &last_logs)?;
        results.push(RunArtifacts {
            variant,
            seed,
            run_dir: dir,
            episodes: metrics,
        });
    }
    Ok(results)
}

/// Greedy evaluation (epsilon 0, no learning) of stored checkpoints — or of
/// nothing at all for the random variant, which needs no checkpoint.
pub fn evaluate(plan: &RunPlan) -> Result<Vec<RunArtifacts>, HarnessError> {
    plan.validate()?;
    let variant = plan.variant();
    if variant.is_learning() && plan.checkpoint.is_none() {
        return Err(HarnessError::Plan(format!(
            "variant {variant} needs --checkpoint for evaluation"
        )));
    }
    let episodes = plan.episodes_override.unwrap_or(plan.eval_episodes);
    let mut results = Vec::new();
    for &seed in &plan.seeds {
        let dir = run_dir(&plan.out_dir, variant, seed).join("eval");
        prepare_dir(&dir)?;
        let mut cfg = plan.config.clone();
        cfg.seed = seed;
        write_manifest(dir.join("manifest.json"), &cfg, seed, variant, episodes)?;
        let mut env = build_environment(&cfg, seed)?;
        let (mut agents, _) = make_agents(&cfg, variant, seed, plan.checkpoint.as_deref())?;
        let mut metrics = Vec::new();
        let mut last_logs = Vec::new();
        for episode in 0..episodes {
            let started = Instant::now();
            let logs = run_episode(&mut env, &mut agents, 0.0, false)?;
            let wall = started.elapsed().as_secs_f64();
            metrics.push(episode_metrics(episode, &logs, cfg.step_duration_s, wall));
            last_logs = logs;
        }
        export_episode_csv(dir.join("metrics.csv"), &metrics)?;
        export_trajectory_jsonl(dir.join("trajectory.jsonl"), &last_logs)?;
        results.push(RunArtifacts {
            variant,
            seed,
            run_dir: dir,
            episodes: metrics,
        });
    }
    Ok(results)
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub variant: String,
    pub cdr_mean: f64,
    pub cdr_std: f64,
    pub ee_norm_mean: f64,
    pub ee_norm_std: f64,
    pub energy_kj_mean: f64,
    pub energy_kj_std: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(COMPARISON_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.variant,
                r.cdr_mean,
                r.cdr_std,
                r.ee_norm_mean,
                r.ee_norm_std,
                r.energy_kj_mean,
                r.energy_kj_std
            ));
        }
        out
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:>8} {:>8} {:>9} {:>9} {:>12} {:>12}",
            "variant", "cdr", "±", "ee_norm", "±", "energy_kj", "±"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<10} {:>8.4} {:>8.4} {:>9.4} {:>9.4} {:>12.2} {:>12.2}",
                r.variant,
                r.cdr_mean,
                r.cdr_std,
                r.ee_norm_mean,
                r.ee_norm_std,
                r.energy_kj_mean,
                r.energy_kj_std
            )?;
        }
        Ok(())
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

/// Per-seed evaluation summary of one trained variant.
#[derive(Clone, Debug)]
pub struct VariantEvaluation {
    pub variant: AgentVariant,
    /// Per-seed mean CDR over the evaluation episodes.
    pub cdr: Vec<f64>,
    /// Per-seed energy efficiency (bits of throughput over joules, summed
    /// over the evaluation episodes).
    pub ee: Vec<f64>,
    /// Per-seed mean energy in kilojoules per episode.
    pub energy_kj: Vec<f64>,
}

/// Train (learning variants) and greedily evaluate one variant across every
/// seed, under scenario realisations shared by all variants.
pub fn train_and_evaluate_variant(
    plan: &RunPlan,
    variant: AgentVariant,
) -> Result<VariantEvaluation, HarnessError> {
    let episodes = plan.episodes();
    let mut cdr_per_seed = Vec::new();
    let mut ee_per_seed = Vec::new();
    let mut energy_per_seed = Vec::new();
    for &seed in &plan.seeds {
        let dir = run_dir(&plan.out_dir, variant, seed);
        prepare_dir(&dir)?;
        let mut cfg = plan.config.clone();
        cfg.seed = seed;
        let mut env = build_environment(&cfg, seed)?;
        let (mut agents, _) = make_agents(&cfg, variant, seed, None)?;
        if variant.is_learning() {
            let mut metrics = Vec::new();
            for episode in 0..episodes {
                let epsilon = epsilon_schedule(&cfg.learning, episode);
                let started = Instant::now();
                let logs = run_episode(&mut env, &mut agents, epsilon, true)?;
                metrics.push(episode_metrics(
                    episode,
                    &logs,
                    cfg.step_duration_s,
                    started.elapsed().as_secs_f64(),
                ));
            }
            export_episode_csv(dir.join("metrics.csv"), &metrics)?;
            for (i, agent) in agents.iter().enumerate() {
                agent.save_checkpoint(checkpoint_path(&dir, i))?;
            }
        }
        let mut cdr_sum = 0.0;
        let mut throughput = 0.0;
        let mut energy_j = 0.0;
        for episode in 0..plan.eval_episodes {
            let logs = run_episode(&mut env, &mut agents, 0.0, false)?;
            let m = episode_metrics(episode, &logs, cfg.step_duration_s, 0.0);
            cdr_sum += m.cdr;
            throughput += m.total_throughput_bits;
            energy_j += m.total_energy_j;
        }
        let evals = f64::from(plan.eval_episodes.max(1));
        cdr_per_seed.push(cdr_sum / evals);
        ee_per_seed.push(if energy_j > 0.0 { throughput / energy_j } else { 0.0 });
        energy_per_seed.push(energy_j / 1000.0 / evals);
    }
    Ok(VariantEvaluation {
        variant,
        cdr: cdr_per_seed,
        ee: ee_per_seed,
        energy_kj: energy_per_seed,
    })
}

/// Train and evaluate every planned variant under identical seeds, then
/// aggregate mean ± std with energy efficiency normalised to the reference
/// variant (dacemad when present, the first variant otherwise).
pub fn compare(plan: &RunPlan) -> Result<ComparisonTable, HarnessError> {
    plan.validate()?;
    if plan.variants.len() < 2 {
        return Err(HarnessError::Plan(
            "compare needs at least two variants".into(),
        ));
    }
    let mut evaluations = Vec::new();
    for &variant in &plan.variants {
        evaluations.push(train_and_evaluate_variant(plan, variant)?);
    }
    let reference = if plan.variants.contains(&AgentVariant::Dacemad) {
        AgentVariant::Dacemad
    } else {
        plan.variants[0]
    };
    let groups: Vec<(String, Vec<f64>)> = evaluations
        .iter()
        .map(|e| (e.variant.to_string(), e.ee.clone()))
        .collect();
    let normalised = normalise_ee(&groups, reference.name())?;

    let rows = evaluations
        .iter()
        .zip(&normalised)
        .map(|(e, (_, ee_norm))| {
            let (cdr_mean, cdr_std) = mean_std(&e.cdr);
            let (ee_mean, ee_std) = mean_std(ee_norm);
            let (energy_mean, energy_std) = mean_std(&e.energy_kj);
            ComparisonRow {
                variant: e.variant.to_string(),
                cdr_mean,
                cdr_std,
                ee_norm_mean: ee_mean,
                ee_norm_std: ee_std,
                energy_kj_mean: energy_mean,
                energy_kj_std: energy_std,
            }
        })
        .collect();
    let table = ComparisonTable { rows };
    prepare_dir(&plan.out_dir)?;
    let csv_path = plan.out_dir.join("comparison.csv");
    std::fs::write(&csv_path, table.to_csv()).map_err(|source| HarnessError::Output {
        path: csv_path.display().to_string(),
        source,
    })?;
    Ok(table)
}

/// Materialise the configured scenario as a trace CSV.
pub fn gen_scenario(
    cfg: &WorldConfig,
    out_path: &Path,
    steps: u64,
) -> Result<TraceStats, HarnessError> {
    let provider = generate_scenario(&cfg.scenario, &cfg.area, cfg.seed)?;
    let snapshots = provider.materialize(steps);
    write_trace(out_path, &snapshots)?;
    let rows = snapshots.iter().map(|s| s.entries.len()).sum();
    Ok(TraceStats {
        rows,
        out_of_bounds_rows: 0,
    })
}
