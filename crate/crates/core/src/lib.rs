// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

//! Effective classical dynamics of a mechanical oscillator coupled to a qubit.
//!
//! The qubit is traced out through an influence functional. What remains for
//! the oscillator is a state-dependent deterministic drive plus a correlated,
//! generally non-stationary Gaussian force. The crate is organised as:
//!
//! * [`params`]: qubit state, platform parameters, unit conversion, config files.
//! * [`influence`]: path functionals, influence phases, the exact two-level
//!   propagator and convergence checks of the weak-coupling expansion.
//! * [`noise`]: the two-time noise kernel and its exact rank-2 sampler.
//! * [`dynamics`]: force, closed-form and RK4 trajectory solvers, ensembles, PSD.
//! * [`quantum`]: truncated Jaynes-Cummings evolution used as an exact oracle.
//! * [`forces`]: SI force magnitudes, platform presets and Bloch-sphere maps.
//! * [`reconstruct`]: inference of the qubit state from ensemble statistics.

pub mod dynamics;
pub mod error;
pub mod forces;
pub mod influence;
pub mod linalg;
pub mod noise;
pub mod params;
pub mod quantum;
pub mod reconstruct;

pub use error::{Error, Result};
pub use params::{DimensionlessParams, PhysicalParams, QubitState, SimConfig};
