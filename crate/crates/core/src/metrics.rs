//! Evaluation metrics and file export: connected-to-deployed ratio, total
//! system energy efficiency (raw and normalised), energy totals and message
//! counts, aggregated from step logs per episode, per run and across runs.
//!
//! Exported layouts (headers are frozen):
//!
//! - `metrics.csv` — `episode,cdr,ee,total_energy_kj,messages`, one row per
//!   episode
//! - `trajectory.jsonl` — one step-log JSON object per line
//! - `manifest.json` — config hash, seed, variant and episode count

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agent::AgentVariant;
use crate::config::WorldConfig;
use crate::energy::total_system_ee;
use crate::env::StepLog;

/// Frozen header of the per-episode metrics CSV.
pub const METRICS_CSV_HEADER: &str = "episode,cdr,ee,total_energy_kj,messages";

/// Frozen header of the comparison table CSV.
pub const COMPARISON_CSV_HEADER: &str =
    "variant,cdr_mean,cdr_std,ee_norm_mean,ee_norm_std,energy_kj_mean,energy_kj_std";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("reference group `{0}` is missing or empty")]
    MissingReference(String),
    #[error("reference group `{0}` has zero mean energy efficiency")]
    ZeroReferenceMean(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MetricsError + '_ {
    move |source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    }
}

// ---------------------------------------------------------------------------
// Episode aggregation
// ---------------------------------------------------------------------------

/// Everything reported for one episode.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: u32,
    /// Mean over steps of connected/deployed, skipping empty steps.
    pub cdr: f64,
    /// False when every step had zero deployed vehicles.
    pub cdr_defined: bool,
    pub total_throughput_bits: f64,
    pub total_energy_j: f64,
    pub ee_bits_per_joule: f64,
    pub messages: u64,
    pub steps: u32,
    pub per_agent_energy_j: Vec<f64>,
    pub per_agent_mean_score: Vec<f64>,
    pub wall_time_s: f64,
}

/// Connected-to-deployed ratio of a step sequence. Steps without deployed
/// vehicles are excluded; the flag is false when none remain.
pub fn cdr(logs: &[StepLog]) -> (f64, bool) {
    let mut sum = 0.0;
    let mut counted = 0usize;
    for log in logs {
        if log.deployed > 0 {
            sum += f64::from(log.connected) / log.deployed as f64;
            counted += 1;
        }
    }
    if counted == 0 {
        (0.0, false)
    } else {
        (sum / counted as f64, true)
    }
}

/// Fold a finished episode's step logs into its metrics row.
pub fn episode_metrics(
    episode: u32,
    logs: &[StepLog],
    step_duration_s: f64,
    wall_time_s: f64,
) -> EpisodeMetrics {
    let n_agents = logs.first().map_or(0, |l| l.uavs.len());
    let mut throughput_bits = 0.0;
    let mut energy_j = 0.0;
    let mut messages = 0u64;
    let mut per_agent_energy = vec![0.0; n_agents];
    let mut per_agent_score = vec![0.0; n_agents];
    for log in logs {
        throughput_bits += log.total_rate_bps * step_duration_s;
        messages += log.messages;
        for (i, u) in log.uavs.iter().enumerate() {
            energy_j += u.step_energy_j;
            per_agent_energy[i] += u.step_energy_j;
            per_agent_score[i] += f64::from(u.score);
        }
    }
    if !logs.is_empty() {
        for s in &mut per_agent_score {
            *s /= logs.len() as f64;
        }
    }
    let (cdr_value, cdr_defined) = cdr(logs);
    let ee = total_system_ee(throughput_bits, energy_j).unwrap_or(0.0);
    EpisodeMetrics {
        episode,
        cdr: cdr_value,
        cdr_defined,
        total_throughput_bits: throughput_bits,
        total_energy_j: energy_j,
        ee_bits_per_joule: ee,
        messages,
        steps: logs.len() as u32,
        per_agent_energy_j: per_agent_energy,
        per_agent_mean_score: per_agent_score,
        wall_time_s,
    }
}

/// Divide each run's energy efficiency by the reference group's mean.
pub fn normalise_ee(
    groups: &[(String, Vec<f64>)],
    reference: &str,
) -> Result<Vec<(String, Vec<f64>)>, MetricsError> {
    let reference_values = groups
        .iter()
        .find(|(name, values)| name == reference && !values.is_empty())
        .map(|(_, values)| values)
        .ok_or_else(|| MetricsError::MissingReference(reference.to_string()))?;
    let reference_mean =
        reference_values.iter().sum::<f64>() / reference_values.len() as f64;
    if reference_mean == 0.0 {
        return Err(MetricsError::ZeroReferenceMean(reference.to_string()));
    }
    Ok(groups
        .iter()
        .map(|(name, values)| {
            (
                name.clone(),
                values.iter().map(|v| v / reference_mean).collect(),
            )
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// Write the per-episode CSV. Formatting uses the shortest round-trip float
/// representation, so identical runs produce byte-identical files.
pub fn export_episode_csv(
    path: impl AsRef<Path>,
    episodes: &[EpisodeMetrics],
) -> Result<(), MetricsError> {
    let path = path.as_ref();
    let mut out = String::with_capacity(episodes.len() * 48 + 64);
    out.push_str(METRICS_CSV_HEADER);
    out.push('\n');
    for m in episodes {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.episode,
            m.cdr,
            m.ee_bits_per_joule,
            m.total_energy_j / 1000.0,
            m.messages
        ));
    }
    std::fs::write(path, out).map_err(io_err(path))
}

/// Write step logs as JSON lines.
pub fn export_trajectory_jsonl(
    path: impl AsRef<Path>,
    logs: &[StepLog],
) -> Result<(), MetricsError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut writer = std::io::BufWriter::new(file);
    for log in logs {
        serde_json::to_writer(&mut writer, log).map_err(|e| MetricsError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::Other, e),
        })?;
        writer.write_all(b"\n").map_err(io_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

/// Identification of one run: configuration digest, seed and variant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_sha256: String,
    pub seed: u64,
    pub variant: String,
    pub episodes: u32,
}

pub fn config_digest(cfg: &WorldConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cfg.canonical_json().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_manifest(
    path: impl AsRef<Path>,
    cfg: &WorldConfig,
    seed: u64,
    variant: AgentVariant,
    episodes: u32,
) -> Result<(), MetricsError> {
    let path = path.as_ref();
    let manifest = RunManifest {
        schema_version: 1,
        config_sha256: config_digest(cfg),
        seed,
        variant: variant.to_string(),
        episodes,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    std::fs::write(path, text).map_err(io_err(path))
}

/// Read back a trajectory written by [`export_trajectory_jsonl`].
pub fn read_trajectory_jsonl(path: impl AsRef<Path>) -> Result<Vec<StepLog>, MetricsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .map(|line| {
            serde_json::from_str(line).map_err(|e| MetricsError::Io {
                path: path.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{UavStepLog, VehicleLogEntry};

    fn step_log(t: u64, deployed: usize, connected: u32, rate: f64, energy: f64) -> StepLog {
        StepLog {
            t,
            deployed,
            connected,
            total_rate_bps: rate,
            messages: 2,
            uavs: vec![UavStepLog {
                x_m: 1.0,
                y_m: 2.0,
                alive: true,
                action: Some(4),
                speed_ms: 0.0,
                score: connected,
                step_energy_j: energy,
                battery_remaining_j: 1000.0,
                reward: Some(0.5),
            }],
            vehicles: vec![VehicleLogEntry {
                id: "v0".into(),
                x_m: 3.0,
                y_m: 4.0,
            }],
        }
    }

    #[test]
    fn cdr_bounds_and_mean() {
        let all = vec![step_log(1, 4, 4, 1.0, 1.0), step_log(2, 4, 4, 1.0, 1.0)];
        assert_eq!(cdr(&all), (1.0, true));

        let none = vec![step_log(1, 4, 0, 0.0, 1.0)];
        assert_eq!(cdr(&none), (0.0, true));

        let mixed = vec![step_log(1, 10, 4, 1.0, 1.0), step_log(2, 10, 6, 1.0, 1.0)];
        let (value, defined) = cdr(&mixed);
        assert!(defined);
        assert!((value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cdr_skips_empty_steps_and_flags_all_empty() {
        let logs = vec![step_log(1, 0, 0, 0.0, 1.0), step_log(2, 2, 1, 1.0, 1.0)];
        let (value, defined) = cdr(&logs);
        assert!(defined);
        assert_eq!(value, 0.5);

        let empty = vec![step_log(1, 0, 0, 0.0, 1.0)];
        assert_eq!(cdr(&empty), (0.0, false));
    }

    #[test]
    fn episode_accounting_identity() {
        let logs: Vec<StepLog> = (0..10)
            .map(|t| step_log(t, 1, 1, 1.0e6, 168.48))
            .collect();
        let m = episode_metrics(0, &logs, 1.0, 0.1);
        assert_eq!(m.total_throughput_bits, 1.0e7);
        assert!((m.total_energy_j - 1684.8).abs() < 1e-9);
        assert!((m.ee_bits_per_joule - 5935.422602089269).abs() < 1e-9);
        // ee · energy reproduces the throughput.
        let recomputed = m.ee_bits_per_joule * m.total_energy_j;
        assert!((recomputed - m.total_throughput_bits).abs() / m.total_throughput_bits < 1e-9);
        assert_eq!(m.messages, 20);
        assert_eq!(m.steps, 10);
        assert_eq!(m.per_agent_mean_score, vec![1.0]);
    }

    #[test]
    fn normalise_ee_reference_is_unit_mean() {
        let groups = vec![
            ("dacemad".to_string(), vec![2.0, 4.0, 6.0]),
            ("random".to_string(), vec![2.0]),
        ];
        let out = normalise_ee(&groups, "dacemad").unwrap();
        let dace = &out[0].1;
        assert_eq!(dace, &vec![0.5, 1.0, 1.5]);
        let mean: f64 = dace.iter().sum::<f64>() / dace.len() as f64;
        assert!((mean - 1.0).abs() < 1e-15);
        assert_eq!(out[1].1, vec![0.5]);

        assert!(matches!(
            normalise_ee(&groups, "cmad"),
            Err(MetricsError::MissingReference(_))
        ));
        let zero = vec![("dacemad".to_string(), vec![0.0, 0.0])];
        assert!(matches!(
            normalise_ee(&zero, "dacemad"),
            Err(MetricsError::ZeroReferenceMean(_))
        ));
    }

    #[test]
    fn csv_export_layout_and_determinism() {
        let logs: Vec<StepLog> = (0..3).map(|t| step_log(t, 2, 1, 5.0e5, 168.48)).collect();
        let episodes: Vec<EpisodeMetrics> = (0..250)
            .map(|e| episode_metrics(e, &logs, 1.0, 0.0))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        export_episode_csv(&a, &episodes).unwrap();
        export_episode_csv(&b, &episodes).unwrap();
        let text_a = std::fs::read_to_string(&a).unwrap();
        let text_b = std::fs::read(&b).unwrap();
        assert_eq!(text_a.as_bytes(), text_b.as_slice());
        let mut lines = text_a.lines();
        assert_eq!(lines.next().unwrap(), METRICS_CSV_HEADER);
        assert_eq!(text_a.lines().count(), 251, "header plus 250 data rows");
        // Energy column is kilojoules: joules / 1000 exactly.
        let first = text_a.lines().nth(1).unwrap();
        let energy_kj: f64 = first.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(energy_kj, (3.0 * 168.48) / 1000.0);
    }

    #[test]
    fn trajectory_round_trip_preserves_accounting() {
        let logs: Vec<StepLog> = (0..5).map(|t| step_log(t, 2, 2, 2.0e6, 313.2)).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory.jsonl");
        export_trajectory_jsonl(&path, &logs).unwrap();
        let back = read_trajectory_jsonl(&path).unwrap();
        assert_eq!(back.len(), 5);
        let m_orig = episode_metrics(0, &logs, 1.0, 0.0);
        let m_back = episode_metrics(0, &back, 1.0, 0.0);
        assert_eq!(m_orig.ee_bits_per_joule, m_back.ee_bits_per_joule);
        assert_eq!(m_orig.total_energy_j, m_back.total_energy_j);
    }

    #[test]
    fn manifest_digest_tracks_config() {
        let cfg = WorldConfig::default();
        let mut other = cfg.clone();
        other.seed = 1;
        assert_eq!(config_digest(&cfg), config_digest(&cfg));
        assert_ne!(config_digest(&cfg), config_digest(&other));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        write_manifest(&path, &cfg, 7, AgentVariant::Dacemad, 250).unwrap();
        let manifest: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(manifest.seed, 7);
        assert_eq!(manifest.variant, "dacemad");
        assert_eq!(manifest.config_sha256, config_digest(&cfg));
    }
}
