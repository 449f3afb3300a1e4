//! Rotary-wing propulsion power, per-step energy, battery accounting and
//! system energy efficiency.
//!
//! The propulsion model is
//!
//! P(V) = κ₀(1 + 3V²/U²tip) + κ₁(√(1 + V⁴/4v₀⁴) ± V²/2v₀²)^½ + (κ₂/2)V³
//!
//! with the blade-profile, induced and parasite terms in order. The sign of
//! the V²/2v₀² term is selectable: [`PowerModelSign::Paper`] uses "+",
//! [`PowerModelSign::Corrected`] the "−" of the rotor-aerodynamics source
//! this kind of model derives from. The two agree exactly at hover.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{EnergyParams, PowerModelSign};

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("speed must be non-negative, got {0}")]
    NegativeSpeed(f64),
    #[error("energy must be non-negative, got {0}")]
    NegativeEnergy(f64),
    #[error("total energy is zero; energy efficiency is undefined")]
    ZeroEnergy,
}

/// Propulsion power in watts at forward speed `v` m/s.
pub fn propulsion_power(v: f64, params: &EnergyParams) -> Result<f64, EnergyError> {
    if v < 0.0 || !v.is_finite() {
        return Err(EnergyError::NegativeSpeed(v));
    }
    let v2 = v * v;
    let tip = params.rotor_tip_speed_ms;
    let v0 = params.mean_hover_velocity_ms;

    let blade = params.kappa0_w * (1.0 + 3.0 * v2 / (tip * tip));
    let sign = match params.power_model_sign {
        PowerModelSign::Paper => 1.0,
        PowerModelSign::Corrected => -1.0,
    };
    let induced_inner = (1.0 + v2 * v2 / (4.0 * v0.powi(4))).sqrt() + sign * v2 / (2.0 * v0 * v0);
    let induced = params.kappa1_w * induced_inner.sqrt();
    let parasite = 0.5 * params.kappa2_kg_per_m * v2 * v;

    Ok(blade + induced + parasite)
}

/// Energy in joules consumed over one step of `dt` seconds at speed `v`.
pub fn step_energy(v: f64, dt: f64, params: &EnergyParams) -> Result<f64, EnergyError> {
    Ok(dt * propulsion_power(v, params)?)
}

/// Total system energy efficiency: delivered bits over consumed joules.
pub fn total_system_ee(total_bits: f64, total_joules: f64) -> Result<f64, EnergyError> {
    if total_joules <= 0.0 {
        return Err(EnergyError::ZeroEnergy);
    }
    Ok(total_bits / total_joules)
}

/// Cumulative battery account of one UAV. The UAV stays alive until its
/// consumption reaches the budget, and never comes back within an episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub capacity_j: f64,
    pub consumed_j: f64,
    /// Energy drawn in the most recent step.
    pub last_step_energy_j: f64,
    pub alive: bool,
}

impl BatteryState {
    pub fn new(capacity_j: f64) -> Self {
        Self {
            capacity_j,
            consumed_j: 0.0,
            last_step_energy_j: 0.0,
            alive: capacity_j > 0.0,
        }
    }

    /// Draw `energy_j` from the battery, clearing `alive` on depletion.
    pub fn consume(&mut self, energy_j: f64) -> Result<(), EnergyError> {
        if energy_j < 0.0 {
            return Err(EnergyError::NegativeEnergy(energy_j));
        }
        self.consumed_j += energy_j;
        self.last_step_energy_j = energy_j;
        if self.consumed_j >= self.capacity_j {
            self.alive = false;
        }
        Ok(())
    }

    pub fn remaining_j(&self) -> f64 {
        (self.capacity_j - self.consumed_j).max(0.0)
    }
}
