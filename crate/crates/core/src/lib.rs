//! Non-interacting Rabi-driven spin ensembles under stochastic resetting.
//!
//! The crate combines exact renewal-equation results for stationary states
//! with trajectory Monte Carlo for protocols that have no closed form:
//!
//! - [`spin_dynamics`]: reset-free evolution of one and two spins.
//! - [`renewal`]: waiting-time laws and exact stationary states.
//! - [`observables`]: density, connected correlation, local quantum uncertainty.
//! - [`finite_size`]: threshold probabilities for `N` spins.
//! - [`trajectory_sim`]: reproducible parallel trajectory ensembles.
//! - [`analysis`]: parameter sweeps, jump estimates, power-law fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod finite_size;
pub mod observables;
pub mod quad;
pub mod renewal;
pub mod spin_dynamics;
pub mod trajectory_sim;
pub mod trig;

pub use error::{Error, Result};
pub use finite_size::{NSpins, OddCount};
pub use renewal::WaitingTime;
pub use spin_dynamics::{DriveParams, QubitState, Spin, TwoQubitState};
pub use trajectory_sim::{EnsembleStats, ProtocolKind, SimConfig};
