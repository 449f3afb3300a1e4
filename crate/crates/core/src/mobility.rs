//! Ground-user positions per timestep, either from synthetic density
//! scenarios or from a recorded floating-car-data trace.
//!
//! Synthetic kinds are static: the point set is drawn once (deterministic
//! under the seed) and repeated every step. Traces are CSV files with the
//! exact header `t,vehicle_id,x,y,speed` (metres, m/s, one second per
//! timestep); vehicles may enter and leave the region between snapshots.
//! Converting third-party mobility dumps (e.g. SUMO FCD XML) into this CSV
//! is a preprocessing step outside this crate.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AreaBounds, ConfigError};

/// Exact header line of the trace CSV format.
pub const TRACE_HEADER: &str = "t,vehicle_id,x,y,speed";

/// Maximum vehicle speed accepted from traces: 50 km/h in m/s.
pub const MAX_TRACE_SPEED_MS: f64 = 50.0 / 3.6;

/// Hard cap on trace length, to fail loudly on corrupt timestep columns.
const MAX_TRACE_STEPS: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("cannot open trace `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("trace header must be exactly `{TRACE_HEADER}`, found `{found}`")]
    BadHeader { found: String },
    #[error("trace line {line}: {reason}")]
    BadRow { line: u64, reason: String },
    #[error("trace timesteps must be non-decreasing (line {line}: t={t} after t={prev})")]
    NonMonotone { line: u64, t: u64, prev: u64 },
    #[error("trace line {line}: vehicle `{id}` appears twice in timestep {t}")]
    DuplicateVehicle { line: u64, id: String, t: u64 },
    #[error("trace spans {steps} timesteps, above the {MAX_TRACE_STEPS} cap")]
    TraceTooLong { steps: u64 },
    #[error(transparent)]
    Scenario(#[from] ConfigError),
}

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

/// One ground user at one timestep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleEntry {
    pub id: String,
    pub x_m: f64,
    pub y_m: f64,
    pub speed_ms: f64,
}

/// All ground users present at one timestep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleSnapshot {
    pub t: u64,
    pub entries: Vec<VehicleEntry>,
}

// ---------------------------------------------------------------------------
// Scenario specification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Gaussian point clouds truncated at each cluster radius.
    StaticClusters,
    /// Users along two perpendicular strips through the area centre.
    CrossRoads,
    /// Users concentrated in a band along the x-max boundary.
    EdgeConcentration,
    /// Replay of a CSV trace file.
    Trace,
}

/// One Gaussian cluster of users.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub x_m: f64,
    pub y_m: f64,
    pub radius_m: f64,
    pub weight: f64,
}

/// Which user distribution the environment is driven by.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_vehicles: usize,
    /// Clusters for `static_clusters`. Weights must sum to one.
    pub clusters: Vec<ClusterSpec>,
    /// Strip width for `cross_roads`, metres.
    pub strip_width_m: f64,
    /// Band depth for `edge_concentration`, metres.
    pub band_width_m: f64,
    /// Trace file for `trace`.
    pub trace_path: Option<PathBuf>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::StaticClusters,
            n_vehicles: 100,
            clusters: vec![ClusterSpec {
                x_m: 1500.0,
                y_m: 1500.0,
                radius_m: 300.0,
                weight: 1.0,
            }],
            strip_width_m: 60.0,
            band_width_m: 200.0,
            trace_path: None,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self, area: &AreaBounds) -> Result<(), ConfigError> {
        match self.kind {
            ScenarioKind::StaticClusters => {
                if self.clusters.is_empty() {
                    return Err(ConfigError::invalid(
                        "scenario.clusters",
                        "at least one cluster is required",
                    ));
                }
                let mut weight_sum = 0.0;
                for (i, c) in self.clusters.iter().enumerate() {
                    if !area.contains(c.x_m, c.y_m) {
                        return Err(ConfigError::invalid(
                            "scenario.clusters",
                            format!("cluster {i} centre ({}, {}) outside the area", c.x_m, c.y_m),
                        ));
                    }
                    if !(c.radius_m > 0.0) || c.radius_m > area.diagonal() {
                        return Err(ConfigError::invalid(
                            "scenario.clusters",
                            format!("cluster {i} radius must lie in (0, area diagonal]"),
                        ));
                    }
                    if !(c.weight > 0.0) {
                        return Err(ConfigError::invalid(
                            "scenario.clusters",
                            format!("cluster {i} weight must be positive"),
                        ));
                    }
                    weight_sum += c.weight;
                }
                if (weight_sum - 1.0).abs() > 1e-9 {
                    return Err(ConfigError::invalid(
                        "scenario.clusters",
                        format!("weights must sum to 1, found {weight_sum}"),
                    ));
                }
            }
            ScenarioKind::CrossRoads => {
                if !(self.strip_width_m > 0.0) {
                    return Err(ConfigError::invalid(
                        "scenario.strip_width_m",
                        "must be positive",
                    ));
                }
            }
            ScenarioKind::EdgeConcentration => {
                if !(self.band_width_m > 0.0) {
                    return Err(ConfigError::invalid(
                        "scenario.band_width_m",
                        "must be positive",
                    ));
                }
            }
            ScenarioKind::Trace => {
                if self.trace_path.is_none() {
                    return Err(ConfigError::invalid(
                        "scenario.trace_path",
                        "required when kind = \"trace\"",
                    ));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Snapshot provider
// ---------------------------------------------------------------------------

/// Sequential source of per-timestep user positions.
///
/// Static providers repeat one point set forever; trace providers end after
/// their last recorded timestep, which truncates the episode.
#[derive(Clone, Debug)]
pub enum SnapshotProvider {
    Static { entries: Vec<VehicleEntry> },
    Trace { snapshots: Vec<VehicleSnapshot> },
}

impl SnapshotProvider {
    /// Users present at timestep `t`, or `None` past the end of the data.
    pub fn entries_at(&self, t: u64) -> Option<&[VehicleEntry]> {
        match self {
            SnapshotProvider::Static { entries } => Some(entries),
            SnapshotProvider::Trace { snapshots } => {
                snapshots.get(usize::try_from(t).ok()?).map(|s| s.entries.as_slice())
            }
        }
    }

    /// Number of available timesteps; `None` means unbounded.
    pub fn len(&self) -> Option<usize> {
        match self {
            SnapshotProvider::Static { .. } => None,
            SnapshotProvider::Trace { snapshots } => Some(snapshots.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// Concrete snapshots for timesteps `0..steps`, for export.
    pub fn materialize(&self, steps: u64) -> Vec<VehicleSnapshot> {
        (0..steps)
            .map_while(|t| {
                self.entries_at(t).map(|entries| VehicleSnapshot {
                    t,
                    entries: entries.to_vec(),
                })
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

/// Build the snapshot provider described by `spec`, deterministic under
/// `seed`. Trace specs are loaded from their file (out-of-bounds rows are
/// dropped silently here; use [`load_trace`] directly for the counts).
pub fn generate_scenario(
    spec: &ScenarioSpec,
    area: &AreaBounds,
    seed: u64,
) -> Result<SnapshotProvider, MobilityError> {
    spec.validate(area)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = match spec.kind {
        ScenarioKind::StaticClusters => sample_clusters(spec, area, &mut rng),
        ScenarioKind::CrossRoads => sample_cross_roads(spec, area, &mut rng),
        ScenarioKind::EdgeConcentration => sample_edge_band(spec, area, &mut rng),
        ScenarioKind::Trace => {
            let path = spec.trace_path.as_ref().expect("validated");
            let (provider, _stats) = load_trace(path, area)?;
            return Ok(provider);
        }
    };
    Ok(SnapshotProvider::Static { entries })
}

fn vehicle_id(i: usize) -> String {
    format!("v{i}")
}

/// One standard normal draw (Box–Muller).
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn sample_clusters(spec: &ScenarioSpec, area: &AreaBounds, rng: &mut ChaCha8Rng) -> Vec<VehicleEntry> {
    let mut entries = Vec::with_capacity(spec.n_vehicles);
    for i in 0..spec.n_vehicles {
        let mut pick: f64 = rng.gen();
        let mut cluster = &spec.clusters[spec.clusters.len() - 1];
        for c in &spec.clusters {
            if pick < c.weight {
                cluster = c;
                break;
            }
            pick -= c.weight;
        }
        // Truncated Gaussian: sigma = radius/2, resampled until the point
        // falls within the radius and inside the area. The centre is inside
        // the area, so this terminates.
        let (x, y) = loop {
            let dx = standard_normal(rng) * cluster.radius_m / 2.0;
            let dy = standard_normal(rng) * cluster.radius_m / 2.0;
            if dx * dx + dy * dy > cluster.radius_m * cluster.radius_m {
                continue;
            }
            let (x, y) = (cluster.x_m + dx, cluster.y_m + dy);
            if area.contains(x, y) {
                break (x, y);
            }
        };
        entries.push(VehicleEntry {
            id: vehicle_id(i),
            x_m: x,
            y_m: y,
            speed_ms: 0.0,
        });
    }
    entries
}

fn sample_cross_roads(spec: &ScenarioSpec, area: &AreaBounds, rng: &mut ChaCha8Rng) -> Vec<VehicleEntry> {
    let cx = (area.x_min_m + area.x_max_m) / 2.0;
    let cy = (area.y_min_m + area.y_max_m) / 2.0;
    let half = spec.strip_width_m / 2.0;
    let mut entries = Vec::with_capacity(spec.n_vehicles);
    for i in 0..spec.n_vehicles {
        let (x, y) = if rng.gen::<bool>() {
            // Horizontal strip.
            (
                rng.gen_range(area.x_min_m..=area.x_max_m),
                rng.gen_range((cy - half).max(area.y_min_m)..=(cy + half).min(area.y_max_m)),
            )
        } else {
            // Vertical strip.
            (
                rng.gen_range((cx - half).max(area.x_min_m)..=(cx + half).min(area.x_max_m)),
                rng.gen_range(area.y_min_m..=area.y_max_m),
            )
        };
        entries.push(VehicleEntry {
            id: vehicle_id(i),
            x_m: x,
            y_m: y,
            speed_ms: 0.0,
        });
    }
    entries
}

fn sample_edge_band(spec: &ScenarioSpec, area: &AreaBounds, rng: &mut ChaCha8Rng) -> Vec<VehicleEntry> {
    let band_start = (area.x_max_m - spec.band_width_m).max(area.x_min_m);
    let mut entries = Vec::with_capacity(spec.n_vehicles);
    for i in 0..spec.n_vehicles {
        entries.push(VehicleEntry {
            id: vehicle_id(i),
            x_m: rng.gen_range(band_start..=area.x_max_m),
            y_m: rng.gen_range(area.y_min_m..=area.y_max_m),
            speed_ms: 0.0,
        });
    }
    entries
}

// ---------------------------------------------------------------------------
// Trace I/O
// ---------------------------------------------------------------------------

/// Counters from a trace load.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraceStats {
    /// Data rows accepted.
    pub rows: usize,
    /// Rows dropped because their coordinates were outside the area.
    pub out_of_bounds_rows: usize,
}

/// Load a CSV trace. Timesteps are densified: every step from 0 to the last
/// recorded one gets a snapshot, empty when no vehicle was present.
pub fn load_trace(
    path: impl AsRef<Path>,
    area: &AreaBounds,
) -> Result<(SnapshotProvider, TraceStats), MobilityError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| MobilityError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| MobilityError::BadHeader { found: e.to_string() })?
        .clone();
    let found = headers.iter().collect::<Vec<_>>().join(",");
    if found != TRACE_HEADER {
        return Err(MobilityError::BadHeader { found });
    }

    let mut stats = TraceStats::default();
    let mut snapshots: Vec<VehicleSnapshot> = Vec::new();
    let mut prev_t: Option<u64> = None;

    for result in reader.records() {
        let record = match &result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(MobilityError::BadRow {
                    line,
                    reason: e.to_string(),
                });
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |reason: String| MobilityError::BadRow { line, reason };

        if record.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", record.len())));
        }
        let t: u64 = record[0]
            .parse()
            .map_err(|_| bad(format!("bad timestep `{}`", &record[0])))?;
        let id = record[1].to_string();
        if id.is_empty() {
            return Err(bad("empty vehicle_id".into()));
        }
        let x: f64 = record[2]
            .parse()
            .map_err(|_| bad(format!("bad x `{}`", &record[2])))?;
        let y: f64 = record[3]
            .parse()
            .map_err(|_| bad(format!("bad y `{}`", &record[3])))?;
        let speed: f64 = record[4]
            .parse()
            .map_err(|_| bad(format!("bad speed `{}`", &record[4])))?;
        if !x.is_finite() || !y.is_finite() || !speed.is_finite() {
            return Err(bad("non-finite coordinate or speed".into()));
        }
        if !(0.0..=MAX_TRACE_SPEED_MS + 1e-9).contains(&speed) {
            return Err(bad(format!(
                "speed {speed} m/s outside [0, {MAX_TRACE_SPEED_MS:.3}] (50 km/h)"
            )));
        }

        if let Some(prev) = prev_t {
            if t < prev {
                return Err(MobilityError::NonMonotone { line, t, prev });
            }
        }
        prev_t = Some(t);

        if t >= MAX_TRACE_STEPS {
            return Err(MobilityError::TraceTooLong { steps: t + 1 });
        }
        while snapshots.len() <= t as usize {
            snapshots.push(VehicleSnapshot {
                t: snapshots.len() as u64,
                entries: Vec::new(),
            });
        }

        if !area.contains(x, y) {
            stats.out_of_bounds_rows += 1;
            continue;
        }

        let snapshot = &mut snapshots[t as usize];
        if snapshot.entries.iter().any(|e| e.id == id) {
            return Err(MobilityError::DuplicateVehicle { line, id, t });
        }
        snapshot.entries.push(VehicleEntry {
            id,
            x_m: x,
            y_m: y,
            speed_ms: speed,
        });
        stats.rows += 1;
    }

    Ok((SnapshotProvider::Trace { snapshots }, stats))
}

/// Write snapshots in the trace CSV format (the exact inverse of
/// [`load_trace`]).
pub fn write_trace(
    path: impl AsRef<Path>,
    snapshots: &[VehicleSnapshot],
) -> Result<(), MobilityError> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for snap in snapshots {
        for e in &snap.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                snap.t, e.id, e.x_m, e.y_m, e.speed_ms
            ));
        }
    }
    std::fs::write(path, out).map_err(|source| MobilityError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area() -> AreaBounds {
        AreaBounds {
            x_min_m: 0.0,
            x_max_m: 1000.0,
            y_min_m: 0.0,
            y_max_m: 1000.0,
        }
    }

    fn cluster_spec(n: usize) -> ScenarioSpec {
        ScenarioSpec {
            kind: ScenarioKind::StaticClusters,
            n_vehicles: n,
            clusters: vec![ClusterSpec {
                x_m: 500.0,
                y_m: 500.0,
                radius_m: 100.0,
                weight: 1.0,
            }],
            ..ScenarioSpec::default()
        }
    }

    #[test]
    fn single_cluster_points_within_radius() {
        let provider = generate_scenario(&cluster_spec(100), &area(), 7).unwrap();
        let entries = provider.entries_at(0).unwrap();
        assert_eq!(entries.len(), 100);
        for e in entries {
            let d = ((e.x_m - 500.0).powi(2) + (e.y_m - 500.0).powi(2)).sqrt();
            assert!(d <= 100.0, "point at distance {d}");
        }
        // Static providers repeat forever.
        assert_eq!(provider.entries_at(12345).unwrap(), entries);
        assert_eq!(provider.len(), None);
    }

    #[test]
    fn same_seed_same_snapshot() {
        let a = generate_scenario(&cluster_spec(50), &area(), 3).unwrap();
        let b = generate_scenario(&cluster_spec(50), &area(), 3).unwrap();
        assert_eq!(a.entries_at(0).unwrap(), b.entries_at(0).unwrap());
        let c = generate_scenario(&cluster_spec(50), &area(), 4).unwrap();
        assert_ne!(a.entries_at(0).unwrap(), c.entries_at(0).unwrap());
    }

    #[test]
    fn zero_vehicles_allowed() {
        let provider = generate_scenario(&cluster_spec(0), &area(), 1).unwrap();
        assert!(provider.entries_at(0).unwrap().is_empty());
    }

    #[test]
    fn edge_band_points_near_x_max() {
        let spec = ScenarioSpec {
            kind: ScenarioKind::EdgeConcentration,
            n_vehicles: 200,
            band_width_m: 200.0,
            ..ScenarioSpec::default()
        };
        let provider = generate_scenario(&spec, &area(), 11).unwrap();
        for e in provider.entries_at(0).unwrap() {
            assert!(e.x_m >= 800.0 && e.x_m <= 1000.0, "x = {}", e.x_m);
        }
    }

    #[test]
    fn cross_roads_points_on_strips() {
        let spec = ScenarioSpec {
            kind: ScenarioKind::CrossRoads,
            n_vehicles: 200,
            strip_width_m: 60.0,
            ..ScenarioSpec::default()
        };
        let provider = generate_scenario(&spec, &area(), 11).unwrap();
        for e in provider.entries_at(0).unwrap() {
            let on_horizontal = (e.y_m - 500.0).abs() <= 30.0;
            let on_vertical = (e.x_m - 500.0).abs() <= 30.0;
            assert!(on_horizontal || on_vertical, "({}, {})", e.x_m, e.y_m);
        }
    }

    #[test]
    fn bad_cluster_geometry_rejected() {
        let mut spec = cluster_spec(10);
        spec.clusters[0].x_m = 5000.0;
        assert!(generate_scenario(&spec, &area(), 1).is_err());

        let mut spec = cluster_spec(10);
        spec.clusters[0].weight = 0.5;
        assert!(generate_scenario(&spec, &area(), 1).is_err());
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn trace_two_rows_two_snapshots() {
        let f = write_tmp("t,vehicle_id,x,y,speed\n0,a,100,200,3.5\n1,a,110,200,3.5\n");
        let (provider, stats) = load_trace(f.path(), &area()).unwrap();
        assert_eq!(provider.len(), Some(2));
        assert_eq!(stats.rows, 2);
        assert_eq!(provider.entries_at(0).unwrap().len(), 1);
        assert_eq!(provider.entries_at(1).unwrap()[0].x_m, 110.0);
        assert!(provider.entries_at(2).is_none());
    }

    #[test]
    fn header_only_trace_is_zero_length() {
        let f = write_tmp("t,vehicle_id,x,y,speed\n");
        let (provider, stats) = load_trace(f.path(), &area()).unwrap();
        assert_eq!(provider.len(), Some(0));
        assert!(provider.entries_at(0).is_none());
        assert_eq!(stats.rows, 0);
    }

    #[test]
    fn vehicle_enter_and_leave() {
        let f = write_tmp("t,vehicle_id,x,y,speed\n0,a,100,100,0\n2,a,120,100,0\n");
        let (provider, _) = load_trace(f.path(), &area()).unwrap();
        assert_eq!(provider.len(), Some(3));
        assert_eq!(provider.entries_at(0).unwrap().len(), 1);
        assert!(provider.entries_at(1).unwrap().is_empty());
        assert_eq!(provider.entries_at(2).unwrap().len(), 1);
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = write_tmp("t,vehicle_id,x,y,speed\n0,a,100,200,1\n1,b,oops,200,1\n");
        match load_trace(f.path(), &area()).unwrap_err() {
            MobilityError::BadRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn non_monotone_timestep_rejected() {
        let f = write_tmp("t,vehicle_id,x,y,speed\n5,a,1,1,0\n4,b,1,1,0\n");
        assert!(matches!(
            load_trace(f.path(), &area()).unwrap_err(),
            MobilityError::NonMonotone { .. }
        ));
    }

    #[test]
    fn duplicate_vehicle_in_timestep_rejected() {
        let f = write_tmp("t,vehicle_id,x,y,speed\n0,a,1,1,0\n0,a,2,2,0\n");
        assert!(matches!(
            load_trace(f.path(), &area()).unwrap_err(),
            MobilityError::DuplicateVehicle { .. }
        ));
    }

    #[test]
    fn wrong_header_rejected() {
        let f = write_tmp("time,vehicle,x,y,speed\n");
        assert!(matches!(
            load_trace(f.path(), &area()).unwrap_err(),
            MobilityError::BadHeader { .. }
        ));
    }

    #[test]
    fn out_of_bounds_rows_counted_not_fatal() {
        let f = write_tmp("t,vehicle_id,x,y,speed\n0,a,100,100,0\n0,b,5000,100,0\n");
        let (provider, stats) = load_trace(f.path(), &area()).unwrap();
        assert_eq!(stats.rows, 1);
        assert_eq!(stats.out_of_bounds_rows, 1);
        assert_eq!(provider.entries_at(0).unwrap().len(), 1);
    }

    #[test]
    fn overspeed_row_rejected() {
        let f = write_tmp("t,vehicle_id,x,y,speed\n0,a,100,100,20.0\n");
        assert!(matches!(
            load_trace(f.path(), &area()).unwrap_err(),
            MobilityError::BadRow { .. }
        ));
    }

    #[test]
    fn trace_round_trips_through_writer() {
        let spec = cluster_spec(5);
        let provider = generate_scenario(&spec, &area(), 9).unwrap();
        let snapshots = provider.materialize(3);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_trace(f.path(), &snapshots).unwrap();
        let (reloaded, stats) = load_trace(f.path(), &area()).unwrap();
        assert_eq!(stats.rows, 15);
        for t in 0..3 {
            assert_eq!(reloaded.entries_at(t).unwrap(), provider.entries_at(t).unwrap());
        }
    }
}
