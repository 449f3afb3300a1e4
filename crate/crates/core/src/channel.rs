//! Downlink channel model: SINR under co-channel interference, Shannon
//! rate, user association and per-UAV connectivity scores.
//!
//! Every UAV transmits on the shared band, so for a given link all other
//! transmitters within the interference range act as interferers:
//!
//! γ = β·P·d⁻ᵅ / (Σ_z β·P·d_z⁻ᵅ + σ²)
//!
//! A user associates with the UAV offering the strongest SINR and counts as
//! connected only while that SINR strictly exceeds the threshold. Distances
//! are 3D (users at ground level, UAVs at altitude), so they are never zero
//! in a sane geometry; a zero distance is rejected as degenerate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ChannelParams;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("degenerate geometry: zero distance between transmitter and receiver")]
    ZeroDistance,
    #[error("SINR must be non-negative, got {0}")]
    NegativeSinr(f64),
    #[error("at least one UAV is required for association")]
    NoUavs,
}

/// Ground-plane position of a user, metres.
pub type GroundPos = [f64; 2];
/// 3D position of a UAV, metres.
pub type UavPos = [f64; 3];

fn distance_3d(vehicle: GroundPos, uav: UavPos) -> f64 {
    let dx = vehicle[0] - uav[0];
    let dy = vehicle[1] - uav[1];
    let dz = uav[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Received power β·P·d⁻ᵅ over one link.
fn received_power(distance: f64, params: &ChannelParams) -> Result<f64, ChannelError> {
    if distance <= 0.0 {
        return Err(ChannelError::ZeroDistance);
    }
    Ok(params.attenuation * params.tx_power_w * distance.powf(-params.pathloss_exponent))
}

/// SINR of the link from `serving_uav` to the user at `vehicle_pos`, with
/// every listed interferer transmitting on the same band.
pub fn sinr(
    vehicle_pos: GroundPos,
    serving_uav: UavPos,
    interferers: &[UavPos],
    params: &ChannelParams,
) -> Result<f64, ChannelError> {
    let signal = received_power(distance_3d(vehicle_pos, serving_uav), params)?;
    let mut denom = params.noise_w;
    for &z in interferers {
        let d = distance_3d(vehicle_pos, z);
        if d <= params.interference_range_m {
            denom += received_power(d, params)?;
        }
    }
    Ok(signal / denom)
}

/// Shannon rate B·log₂(1 + γ) in bits/second.
pub fn rate(sinr: f64, bandwidth_hz: f64) -> Result<f64, ChannelError> {
    if sinr < 0.0 {
        return Err(ChannelError::NegativeSinr(sinr));
    }
    Ok(bandwidth_hz * (1.0 + sinr).log2())
}

/// Evaluation of one user against the fleet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    /// Index of the user within the snapshot it was evaluated from.
    pub vehicle: usize,
    /// Index of the strongest-SINR UAV (ties go to the lowest index).
    pub serving_uav: Option<usize>,
    /// Linear SINR of the serving link.
    pub sinr: f64,
    /// Shannon rate in bits/second; zero unless connected.
    pub rate_bps: f64,
    /// True iff the serving SINR strictly exceeds the threshold.
    pub connected: bool,
}

/// Associate every user with its strongest-SINR UAV and tally per-UAV
/// connectivity scores (the number of connected users served by each UAV).
pub fn associate_and_score(
    vehicles: &[GroundPos],
    uavs: &[UavPos],
    params: &ChannelParams,
) -> Result<(Vec<LinkReport>, Vec<u32>), ChannelError> {
    if uavs.is_empty() {
        return Err(ChannelError::NoUavs);
    }
    let mut scores = vec![0u32; uavs.len()];
    let mut reports = Vec::with_capacity(vehicles.len());

    for (vi, &vehicle) in vehicles.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (ui, &uav) in uavs.iter().enumerate() {
            let interferers: Vec<UavPos> = uavs
                .iter()
                .enumerate()
                .filter(|&(zi, _)| zi != ui)
                .map(|(_, &z)| z)
                .collect();
            let gamma = sinr(vehicle, uav, &interferers, params)?;
            // Strict > keeps the lowest index on exact ties.
            if best.map_or(true, |(_, g)| gamma > g) {
                best = Some((ui, gamma));
            }
        }
        let (serving, gamma) = best.expect("non-empty fleet");
        let connected = gamma > params.sinr_threshold;
        let rate_bps = if connected {
            rate(gamma, params.bandwidth_hz)?
        } else {
            0.0
        };
        if connected {
            scores[serving] += 1;
        }
        reports.push(LinkReport {
            vehicle: vi,
            serving_uav: Some(serving),
            sinr: gamma,
            rate_bps,
            connected,
        });
    }
    Ok((reports, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{db_to_linear, ChannelParams};

    fn unit_params(noise_w: f64) -> ChannelParams {
        ChannelParams {
            attenuation: 1.0,
            pathloss_exponent: 2.0,
            tx_power_w: 1.0,
            noise_w,
            sinr_threshold: db_to_linear(5.0),
            bandwidth_hz: 1.0e6,
            interference_range_m: f64::INFINITY,
        }
    }

    #[test]
    fn sinr_hand_case_no_interference() {
        // β=1, P=1, α=2, d=10, σ²=1e-4 → 10⁻² / 10⁻⁴ = 100.
        let g = sinr([0.0, 0.0], [0.0, 0.0, 10.0], &[], &unit_params(1e-4)).unwrap();
        assert!((g - 100.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_interferer_gives_unit_sinr() {
        // One interferer at the same distance, zero noise → γ = 1 exactly.
        let mut p = unit_params(0.0);
        p.noise_w = 0.0;
        let g = sinr(
            [0.0, 0.0],
            [5.0, 0.0, 10.0],
            &[[-5.0, 0.0, 10.0]],
            &p,
        )
        .unwrap();
        assert_eq!(g, 1.0);
    }

    #[test]
    fn noise_dominates_limit() {
        let g = sinr([0.0, 0.0], [0.0, 0.0, 10.0], &[], &unit_params(1e30)).unwrap();
        assert!(g < 1e-25);
    }

    #[test]
    fn zero_distance_rejected() {
        let err = sinr([0.0, 0.0], [0.0, 0.0, 0.0], &[], &unit_params(1e-4)).unwrap_err();
        assert_eq!(err, ChannelError::ZeroDistance);
    }

    #[test]
    fn interferer_outside_range_ignored() {
        let mut p = unit_params(1e-4);
        p.interference_range_m = 50.0;
        let near = sinr([0.0, 0.0], [0.0, 0.0, 10.0], &[[30.0, 0.0, 10.0]], &p).unwrap();
        let far = sinr([0.0, 0.0], [0.0, 0.0, 10.0], &[[100.0, 0.0, 10.0]], &p).unwrap();
        let none = sinr([0.0, 0.0], [0.0, 0.0, 10.0], &[], &p).unwrap();
        assert!(near < none);
        assert_eq!(far, none);
    }

    #[test]
    fn rate_known_points() {
        assert_eq!(rate(1.0, 1.0e6).unwrap(), 1.0e6);
        assert_eq!(rate(3.0, 1.0e6).unwrap(), 2.0e6);
        // Calculator value for the 5 dB threshold.
        let r = rate(3.16228, 1.0e6).unwrap();
        assert!((r - 2_057_374.0196200917).abs() < 1e-3, "r = {r}");
        assert!(rate(-0.1, 1.0e6).is_err());
    }

    #[test]
    fn overhead_user_connects_with_defaults() {
        let p = ChannelParams::default();
        let (reports, scores) =
            associate_and_score(&[[500.0, 500.0]], &[[500.0, 500.0, 120.0]], &p).unwrap();
        assert_eq!(scores, vec![1]);
        assert!(reports[0].connected);
        assert_eq!(reports[0].serving_uav, Some(0));
        assert!(reports[0].rate_bps > 0.0);
    }

    #[test]
    fn no_vehicles_means_zero_scores() {
        let p = ChannelParams::default();
        let (reports, scores) =
            associate_and_score(&[], &[[0.0, 0.0, 120.0], [9.0, 0.0, 120.0]], &p).unwrap();
        assert!(reports.is_empty());
        assert_eq!(scores, vec![0, 0]);
    }

    #[test]
    fn equidistant_uavs_tie_to_lower_index_and_disconnect() {
        // Two UAVs symmetric about the user: identical SINR ≤ 1, far below
        // the 5 dB threshold, and the tie resolves to UAV 0.
        let p = ChannelParams::default();
        let uavs = [[400.0, 500.0, 120.0], [600.0, 500.0, 120.0]];
        let (reports, scores) = associate_and_score(&[[500.0, 500.0]], &uavs, &p).unwrap();
        assert_eq!(reports[0].serving_uav, Some(0));
        assert!(!reports[0].connected);
        assert!(reports[0].sinr <= 1.0);
        assert_eq!(reports[0].rate_bps, 0.0);
        assert_eq!(scores, vec![0, 0]);
    }

    #[test]
    fn empty_fleet_rejected() {
        let p = ChannelParams::default();
        assert_eq!(
            associate_and_score(&[[0.0, 0.0]], &[], &p).unwrap_err(),
            ChannelError::NoUavs
        );
    }

    #[test]
    fn sinr_monotone_in_distance_and_power() {
        let p = unit_params(1e-4);
        let interferers = [[300.0, 0.0, 100.0]];
        let near = sinr([0.0, 0.0], [0.0, 0.0, 50.0], &interferers, &p).unwrap();
        let far = sinr([0.0, 0.0], [0.0, 0.0, 80.0], &interferers, &p).unwrap();
        assert!(near > far);

        let mut hot = p;
        hot.tx_power_w = 2.0;
        // Both signal and interference scale with P, noise does not, so the
        // SINR strictly increases.
        let boosted = sinr([0.0, 0.0], [0.0, 0.0, 50.0], &interferers, &hot).unwrap();
        assert!(boosted > near);
    }

    #[test]
    fn adding_interferer_never_helps() {
        let p = unit_params(1e-4);
        let base = sinr([0.0, 0.0], [0.0, 0.0, 50.0], &[[200.0, 0.0, 100.0]], &p).unwrap();
        let more = sinr(
            [0.0, 0.0],
            [0.0, 0.0, 50.0],
            &[[200.0, 0.0, 100.0], [250.0, 0.0, 100.0]],
            &p,
        )
        .unwrap();
        assert!(more < base);
    }

    #[test]
    fn single_association_bound() {
        let p = ChannelParams::default();
        let vehicles: Vec<GroundPos> = (0..12).map(|i| [40.0 * i as f64, 90.0]).collect();
        let uavs = [[100.0, 100.0, 120.0], [400.0, 100.0, 120.0]];
        let (_, scores) = associate_and_score(&vehicles, &uavs, &p).unwrap();
        assert!(scores.iter().map(|&c| c as usize).sum::<usize>() <= vehicles.len());
    }
}
