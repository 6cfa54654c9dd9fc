//! Simulator and analysis toolkit for a dressed-state two-qubit entangling
//! gate on trapped ions, where a static magnetic-field gradient couples the
//! qubits to one common vibrational mode and two layers of continuous
//! driving protect the gate from magnetic and Rabi-frequency noise.
//!
//! The crate is organized along the physical pipeline:
//!
//! - [`hilbert`] — operators, states and basis rotations on the truncated
//!   qubit ⊗ phonon space;
//! - [`params`] — the experimental parameter set and assumption checks;
//! - [`model`] — time-dependent Hamiltonians for every frame, with each
//!   residual effect as a toggleable labeled term, plus the closed-form
//!   shift budget;
//! - [`propagation`] — numerical time evolution and the exact analytic
//!   gate propagator from the Magnus expansion;
//! - [`experiment`] — gate closure conditions, π-phase-flip schedules and
//!   named end-to-end scenarios;
//! - [`analysis`] — fidelity, phonon statistics and the closed-form noise
//!   and infidelity budgets.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod hilbert;
pub mod model;
pub mod params;
pub mod propagation;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{GateError, Result};
