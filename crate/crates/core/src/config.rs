//! Simulation configuration: area geometry, channel and propulsion
//! constants, learner hyperparameters, scenario selection, and the dB/linear
//! unit conversions used to express them.
//!
//! Configuration is read from a versioned TOML document (see `configs/` and
//! the README for the full key reference). Every key is optional; anything
//! left out falls back to the documented defaults, so the empty document is
//! a valid configuration. All values are validated on load — a violated
//! invariant is reported with the offending field name.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mobility::ScenarioSpec;

/// Version tag written by and accepted from config files.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Environment variable that, when set, overrides the configured seed.
pub const SEED_ENV_VAR: &str = "UAVNET_SEED";

/// Speed of light in m/s, used for the free-space attenuation default.
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot read config file `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Unit conversions
// ---------------------------------------------------------------------------

/// Convert decibels to a linear ratio: 10^(x/10).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear ratio to decibels: 10·log10(x).
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Convert dBm to watts: 10^(x/10) mW.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) / 1000.0
}

/// Convert watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts * 1000.0)
}

// ---------------------------------------------------------------------------
// Domain parameter blocks
// ---------------------------------------------------------------------------

/// Rectangular service area the UAVs must stay inside.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct AreaBounds {
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,
}

impl AreaBounds {
    pub fn width(&self) -> f64 {
        self.x_max_m - self.x_min_m
    }

    pub fn height(&self) -> f64 {
        self.y_max_m - self.y_min_m
    }

    /// Diagonal of the area, the normaliser for inter-UAV distances.
    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min_m && x <= self.x_max_m && y >= self.y_min_m && y <= self.y_max_m
    }
}

impl Default for AreaBounds {
    fn default() -> Self {
        Self {
            x_min_m: 0.0,
            x_max_m: 3000.0,
            y_min_m: 0.0,
            y_max_m: 3000.0,
        }
    }
}

/// Downlink channel constants (all stored in linear units).
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ChannelParams {
    /// Attenuation factor of the wireless channel (linear). The default is
    /// the free-space reference gain (wavelength / 4π)² at a 2 GHz carrier.
    pub attenuation: f64,
    /// Path-loss exponent.
    pub pathloss_exponent: f64,
    /// UAV transmit power in watts (default 20 dBm).
    pub tx_power_w: f64,
    /// Receiver noise power in watts (default -130 dBm).
    pub noise_w: f64,
    /// Linear SINR threshold above which a user counts as connected
    /// (default 5 dB).
    pub sinr_threshold: f64,
    /// Channel bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Only transmitters within this 3D distance of a receiver contribute
    /// interference. Infinite by default: every other UAV interferes.
    pub interference_range_m: f64,
}

/// Free-space reference gain (wavelength / 4π)² at the given carrier.
pub fn free_space_attenuation(carrier_hz: f64) -> f64 {
    let wavelength = SPEED_OF_LIGHT / carrier_hz;
    let r = wavelength / (4.0 * std::f64::consts::PI);
    r * r
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            attenuation: free_space_attenuation(2.0e9),
            pathloss_exponent: 2.0,
            tx_power_w: dbm_to_watts(20.0),
            noise_w: dbm_to_watts(-130.0),
            sinr_threshold: db_to_linear(5.0),
            bandwidth_hz: 1.0e6,
            interference_range_m: f64::INFINITY,
        }
    }
}

/// Which sign to use for the V²/(2v₀²) term inside the induced-power root
/// of the rotary-wing propulsion model. `Paper` keeps the published "+";
/// `Corrected` uses the "−" of the underlying rotor-aerodynamics model.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PowerModelSign {
    Paper,
    Corrected,
}

/// Rotary-wing propulsion constants and the battery budget.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct EnergyParams {
    /// Blade-profile power at hover, J/s.
    pub kappa0_w: f64,
    /// Induced power at hover, J/s.
    pub kappa1_w: f64,
    /// Parasite drag constant, kg/m.
    pub kappa2_kg_per_m: f64,
    /// Rotor blade tip speed, m/s.
    pub rotor_tip_speed_ms: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub mean_hover_velocity_ms: f64,
    /// Battery budget in joules. Default: a 16 Ah pack at a nominal 22.2 V
    /// (16 × 22.2 × 3600 J); the pack voltage is an assumption, the capacity
    /// in mAh is not.
    pub battery_capacity_j: f64,
    pub power_model_sign: PowerModelSign,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            kappa0_w: 79.85,
            kappa1_w: 88.63,
            kappa2_kg_per_m: 0.018,
            rotor_tip_speed_ms: 120.0,
            mean_hover_velocity_ms: 4.03,
            battery_capacity_j: 16.0 * 22.2 * 3600.0,
            power_model_sign: PowerModelSign::Paper,
        }
    }
}

/// Learner hyperparameters shared by every agent.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct LearningParams {
    pub learning_rate: f64,
    /// Discount factor of the return.
    pub discount: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Learner steps between target-network replacements.
    pub target_sync_period: u32,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Episodes over which epsilon decays linearly from start to end.
    pub epsilon_decay_episodes: u32,
    /// Neighbour-state exchange range in metres. Zero disables communication.
    pub comm_range_m: f64,
    /// Number of nearest in-range neighbours reported in the observation.
    pub n_neighbors: usize,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            learning_rate: 1.0e-4,
            discount: 0.95,
            replay_capacity: 10_000,
            batch_size: 1024,
            target_sync_period: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: 200,
            comm_range_m: 1000.0,
            n_neighbors: 6,
            rmsprop_decay: 0.99,
            rmsprop_epsilon: 1.0e-8,
        }
    }
}

// ---------------------------------------------------------------------------
// WorldConfig
// ---------------------------------------------------------------------------

/// The full, validated simulation configuration. Immutable after load; safe
/// to share read-only across workers.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WorldConfig {
    pub version: u32,
    pub seed: u64,
    pub n_uavs: usize,
    pub uav_altitude_m: f64,
    pub area: AreaBounds,
    /// Duration of one simulation step in seconds.
    pub step_duration_s: f64,
    /// Displacement of a single ±x move, metres. Bounded to [0, 20].
    pub uav_step_x_m: f64,
    /// Displacement of a single ±y move, metres. Bounded to [0, 20].
    pub uav_step_y_m: f64,
    pub episodes: u32,
    pub max_steps: u32,
    /// Fixed take-off positions. When absent, UAVs start on an evenly
    /// spaced grid over the area.
    pub initial_uav_positions: Option<Vec<[f64; 2]>>,
    pub channel: ChannelParams,
    pub energy: EnergyParams,
    pub learning: LearningParams,
    pub scenario: ScenarioSpec,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_SCHEMA_VERSION,
            seed: 0,
            n_uavs: 10,
            uav_altitude_m: 120.0,
            area: AreaBounds::default(),
            step_duration_s: 1.0,
            uav_step_x_m: 20.0,
            uav_step_y_m: 20.0,
            episodes: 250,
            max_steps: 1500,
            initial_uav_positions: None,
            channel: ChannelParams::default(),
            energy: EnergyParams::default(),
            learning: LearningParams::default(),
            scenario: ScenarioSpec::default(),
        }
    }
}

impl WorldConfig {
    /// Parse a TOML document, fill unset keys with defaults, and validate.
    /// The empty document yields the default configuration.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: raw::WorldRaw = toml::from_str(text)?;
        let cfg = raw.into_config();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Apply the `UAVNET_SEED` environment override, if set.
    pub fn apply_env_seed_override(&mut self) -> Result<(), ConfigError> {
        match std::env::var(SEED_ENV_VAR) {
            Ok(v) => {
                self.seed = v.parse().map_err(|_| {
                    ConfigError::invalid("seed", format!("{SEED_ENV_VAR}={v} is not a valid u64"))
                })?;
                Ok(())
            }
            Err(_) => Ok(()),
        }
    }

    /// Canonical JSON form used for the run-manifest hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    /// Observation length implied by the neighbour count: nine self
    /// features plus three per reported neighbour.
    pub fn observation_len(&self) -> usize {
        9 + 3 * self.learning.n_neighbors
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn err(field: &str, reason: impl Into<String>) -> ConfigError {
            ConfigError::invalid(field, reason)
        }
        if self.version != CONFIG_SCHEMA_VERSION {
            return Err(err(
                "version",
                format!("unsupported config version {} (expected {CONFIG_SCHEMA_VERSION})", self.version),
            ));
        }
        if !(self.area.x_min_m < self.area.x_max_m) {
            return Err(err("area.x_min_m", "must be strictly less than area.x_max_m"));
        }
        if !(self.area.y_min_m < self.area.y_max_m) {
            return Err(err("area.y_min_m", "must be strictly less than area.y_max_m"));
        }
        if self.n_uavs == 0 {
            return Err(err("n_uavs", "must be at least 1"));
        }
        if !(self.uav_altitude_m > 0.0) {
            return Err(err("uav_altitude_m", "must be positive"));
        }
        if !(self.step_duration_s > 0.0) {
            return Err(err("step_duration_s", "must be positive"));
        }
        for (field, v) in [
            ("uav_step_x_m", self.uav_step_x_m),
            ("uav_step_y_m", self.uav_step_y_m),
        ] {
            if !(0.0..=20.0).contains(&v) {
                return Err(err(field, "must lie in [0, 20] metres"));
            }
        }
        if self.episodes == 0 {
            return Err(err("episodes", "must be at least 1"));
        }
        if self.max_steps == 0 {
            return Err(err("max_steps", "must be at least 1"));
        }
        if let Some(positions) = &self.initial_uav_positions {
            if positions.len() != self.n_uavs {
                return Err(err(
                    "initial_uav_positions",
                    format!("expected {} entries, found {}", self.n_uavs, positions.len()),
                ));
            }
            for &[x, y] in positions {
                if !self.area.contains(x, y) {
                    return Err(err(
                        "initial_uav_positions",
                        format!("position ({x}, {y}) lies outside the area"),
                    ));
                }
            }
        }

        let c = &self.channel;
        for (field, v) in [
            ("channel.attenuation", c.attenuation),
            ("channel.tx_power_w", c.tx_power_w),
            ("channel.noise_w", c.noise_w),
            ("channel.sinr_threshold", c.sinr_threshold),
            ("channel.bandwidth_hz", c.bandwidth_hz),
        ] {
            if !(v > 0.0) {
                return Err(err(field, "must be strictly positive"));
            }
        }
        if !(c.pathloss_exponent >= 1.0) {
            return Err(err("channel.pathloss_exponent", "must be at least 1"));
        }
        if !(c.interference_range_m >= 0.0) {
            return Err(err("channel.interference_range_m", "must be non-negative"));
        }

        let e = &self.energy;
        for (field, v) in [
            ("energy.kappa0_w", e.kappa0_w),
            ("energy.kappa1_w", e.kappa1_w),
            ("energy.kappa2_kg_per_m", e.kappa2_kg_per_m),
            ("energy.rotor_tip_speed_ms", e.rotor_tip_speed_ms),
            ("energy.mean_hover_velocity_ms", e.mean_hover_velocity_ms),
            ("energy.battery_capacity_j", e.battery_capacity_j),
        ] {
            if !(v > 0.0) {
                return Err(err(field, "must be strictly positive"));
            }
        }

        let l = &self.learning;
        if !(l.learning_rate > 0.0) {
            return Err(err("learning.learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&l.discount) {
            return Err(err("learning.discount", "must lie in [0, 1)"));
        }
        if l.batch_size == 0 {
            return Err(err("learning.batch_size", "must be at least 1"));
        }
        if l.batch_size > l.replay_capacity {
            return Err(err(
                "learning.batch_size",
                "must not exceed learning.replay_capacity",
            ));
        }
        if l.target_sync_period == 0 {
            return Err(err("learning.target_sync_period", "must be at least 1"));
        }
        for (field, v) in [
            ("learning.epsilon_start", l.epsilon_start),
            ("learning.epsilon_end", l.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(err(field, "must lie in [0, 1]"));
            }
        }
        if !(l.comm_range_m >= 0.0) {
            return Err(err("learning.comm_range_m", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&l.rmsprop_decay) {
            return Err(err("learning.rmsprop_decay", "must lie in [0, 1)"));
        }
        if !(l.rmsprop_epsilon > 0.0) {
            return Err(err("learning.rmsprop_epsilon", "must be positive"));
        }

        self.scenario.validate(&self.area)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Raw (on-disk) form
// ---------------------------------------------------------------------------

mod raw {
    //! Deserialisation mirror of the runtime structs. The file format keeps
    //! the channel thresholds in dB/dBm, matching how they are usually
    //! quoted; everything is converted to linear units on load.

    use serde::Deserialize;

    use super::*;

    #[derive(Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub(super) struct WorldRaw {
        version: u32,
        seed: u64,
        n_uavs: usize,
        uav_altitude_m: f64,
        area: AreaRaw,
        step_duration_s: f64,
        uav_step_x_m: f64,
        uav_step_y_m: f64,
        episodes: u32,
        max_steps: u32,
        initial_uav_positions: Option<Vec<[f64; 2]>>,
        channel: ChannelRaw,
        energy: EnergyRaw,
        learning: LearningRaw,
        scenario: ScenarioSpec,
    }

    impl Default for WorldRaw {
        fn default() -> Self {
            let d = WorldConfig::default();
            Self {
                version: d.version,
                seed: d.seed,
                n_uavs: d.n_uavs,
                uav_altitude_m: d.uav_altitude_m,
                area: AreaRaw::default(),
                step_duration_s: d.step_duration_s,
                uav_step_x_m: d.uav_step_x_m,
                uav_step_y_m: d.uav_step_y_m,
                episodes: d.episodes,
                max_steps: d.max_steps,
                initial_uav_positions: None,
                channel: ChannelRaw::default(),
                energy: EnergyRaw::default(),
                learning: LearningRaw::default(),
                scenario: d.scenario,
            }
        }
    }

    impl WorldRaw {
        pub(super) fn into_config(self) -> WorldConfig {
            WorldConfig {
                version: self.version,
                seed: self.seed,
                n_uavs: self.n_uavs,
                uav_altitude_m: self.uav_altitude_m,
                area: self.area.into_bounds(),
                step_duration_s: self.step_duration_s,
                uav_step_x_m: self.uav_step_x_m,
                uav_step_y_m: self.uav_step_y_m,
                episodes: self.episodes,
                max_steps: self.max_steps,
                initial_uav_positions: self.initial_uav_positions,
                channel: self.channel.into_params(),
                energy: self.energy.into_params(),
                learning: self.learning.into_params(),
                scenario: self.scenario,
            }
        }
    }

    #[derive(Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub(super) struct AreaRaw {
        x_min_m: f64,
        x_max_m: f64,
        y_min_m: f64,
        y_max_m: f64,
    }

    impl Default for AreaRaw {
        fn default() -> Self {
            let d = AreaBounds::default();
            Self {
                x_min_m: d.x_min_m,
                x_max_m: d.x_max_m,
                y_min_m: d.y_min_m,
                y_max_m: d.y_max_m,
            }
        }
    }

    impl AreaRaw {
        fn into_bounds(self) -> AreaBounds {
            AreaBounds {
                x_min_m: self.x_min_m,
                x_max_m: self.x_max_m,
                y_min_m: self.y_min_m,
                y_max_m: self.y_max_m,
            }
        }
    }

    #[derive(Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub(super) struct ChannelRaw {
        attenuation: f64,
        pathloss_exponent: f64,
        tx_power_dbm: f64,
        noise_dbm: f64,
        sinr_threshold_db: f64,
        bandwidth_hz: f64,
        interference_range_m: f64,
    }

    impl Default for ChannelRaw {
        fn default() -> Self {
            let d = ChannelParams::default();
            Self {
                attenuation: d.attenuation,
                pathloss_exponent: d.pathloss_exponent,
                tx_power_dbm: 20.0,
                noise_dbm: -130.0,
                sinr_threshold_db: 5.0,
                bandwidth_hz: d.bandwidth_hz,
                interference_range_m: d.interference_range_m,
            }
        }
    }

    impl ChannelRaw {
        fn into_params(self) -> ChannelParams {
            ChannelParams {
                attenuation: self.attenuation,
                pathloss_exponent: self.pathloss_exponent,
                tx_power_w: dbm_to_watts(self.tx_power_dbm),
                noise_w: dbm_to_watts(self.noise_dbm),
                sinr_threshold: db_to_linear(self.sinr_threshold_db),
                bandwidth_hz: self.bandwidth_hz,
                interference_range_m: self.interference_range_m,
            }
        }
    }

    #[derive(Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub(super) struct EnergyRaw {
        kappa0_w: f64,
        kappa1_w: f64,
        kappa2_kg_per_m: f64,
        rotor_tip_speed_ms: f64,
        mean_hover_velocity_ms: f64,
        battery_capacity_j: f64,
        power_model_sign: PowerModelSign,
    }

    impl Default for EnergyRaw {
        fn default() -> Self {
            let d = EnergyParams::default();
            Self {
                kappa0_w: d.kappa0_w,
                kappa1_w: d.kappa1_w,
                kappa2_kg_per_m: d.kappa2_kg_per_m,
                rotor_tip_speed_ms: d.rotor_tip_speed_ms,
                mean_hover_velocity_ms: d.mean_hover_velocity_ms,
                battery_capacity_j: d.battery_capacity_j,
                power_model_sign: d.power_model_sign,
            }
        }
    }

    impl EnergyRaw {
        fn into_params(self) -> EnergyParams {
            EnergyParams {
                kappa0_w: self.kappa0_w,
                kappa1_w: self.kappa1_w,
                kappa2_kg_per_m: self.kappa2_kg_per_m,
                rotor_tip_speed_ms: self.rotor_tip_speed_ms,
                mean_hover_velocity_ms: self.mean_hover_velocity_ms,
                battery_capacity_j: self.battery_capacity_j,
                power_model_sign: self.power_model_sign,
            }
        }
    }

    #[derive(Deserialize)]
    #[serde(default, deny_unknown_fields)]
    pub(super) struct LearningRaw {
        learning_rate: f64,
        discount: f64,
        replay_capacity: usize,
        batch_size: usize,
        target_sync_period: u32,
        epsilon_start: f64,
        epsilon_end: f64,
        epsilon_decay_episodes: u32,
        comm_range_m: f64,
        n_neighbors: usize,
        rmsprop_decay: f64,
        rmsprop_epsilon: f64,
    }

    impl Default for LearningRaw {
        fn default() -> Self {
            let d = LearningParams::default();
            Self {
                learning_rate: d.learning_rate,
                discount: d.discount,
                replay_capacity: d.replay_capacity,
                batch_size: d.batch_size,
                target_sync_period: d.target_sync_period,
                epsilon_start: d.epsilon_start,
                epsilon_end: d.epsilon_end,
                epsilon_decay_episodes: d.epsilon_decay_episodes,
                comm_range_m: d.comm_range_m,
                n_neighbors: d.n_neighbors,
                rmsprop_decay: d.rmsprop_decay,
                rmsprop_epsilon: d.rmsprop_epsilon,
            }
        }
    }

    impl LearningRaw {
        fn into_params(self) -> LearningParams {
            LearningParams {
                learning_rate: self.learning_rate,
                discount: self.discount,
                replay_capacity: self.replay_capacity,
                batch_size: self.batch_size,
                target_sync_period: self.target_sync_period,
                epsilon_start: self.epsilon_start,
                epsilon_end: self.epsilon_end,
                epsilon_decay_episodes: self.epsilon_decay_episodes,
                comm_range_m: self.comm_range_m,
                n_neighbors: self.n_neighbors,
                rmsprop_decay: self.rmsprop_decay,
                rmsprop_epsilon: self.rmsprop_epsilon,
            }
        }
    }
}
