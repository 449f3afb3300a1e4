//! Decentralised multi-agent Q-learning simulator for UAV aerial base
//! stations.
//!
//! A fleet of rotary-wing UAVs provides downlink connectivity to mobile
//! ground users under co-channel interference and a per-UAV battery budget.
//! Each UAV runs its own double deep Q-network and learns a flight policy
//! that maximises the system-wide energy efficiency (delivered bits per
//! joule of propulsion energy) while tracking uneven user density.
//!
//! The crate is organised around the simulation pipeline:
//!
//! - [`config`] — validated simulation configuration and unit conversions
//! - [`channel`] — SINR, Shannon rate, user association and coverage scores
//! - [`energy`] — rotary-wing propulsion power and battery accounting
//! - [`mobility`] — synthetic user-density scenarios and CSV trace replay
//! - [`env`] — the multi-agent world: joint action execution, neighbour
//!   exchange, observation assembly and reward computation
//! - [`nn`] — a small fully-connected network with RMSprop training
//! - [`agent`] — per-UAV learner: replay buffer, epsilon-greedy policy,
//!   double-Q targets, target-network sync, ablation variants
//! - [`metrics`] — coverage/energy-efficiency metrics and file export
//! - [`harness`] — training, evaluation and comparison run orchestration

pub mod agent;
pub mod channel;
pub mod config;
pub mod energy;
pub mod env;
pub mod harness;
pub mod metrics;
pub mod mobility;
pub mod nn;

pub use config::WorldConfig;
pub use env::Environment;
