//! Numerical models for vortex qubits trapped in thin-film superconducting
//! resonators.
//!
//! The crate is organised by physical subsystem:
//!
//! - [`constants`] and [`device`]: SI constants, the strip geometry and the
//!   closed-form scales derived from it (Pearl length, vortex energy, entry
//!   threshold).
//! - [`rabi`]: exact diagonalization of the spin–oscillator (quantum Rabi)
//!   Hamiltonian for arbitrary admissible field orientations, dressed
//!   transitions and dispersive shifts.
//! - [`fitting`]: a damped Gauss–Newton least-squares engine and the
//!   spectroscopy and time-domain fitters built on it.
//! - [`energetics`]: Gibbs energy of a vortex in the strip, pinning
//!   landscapes, pair interaction and coupling estimates.
//! - [`tunneling`]: finite-difference Schrödinger solver for a pinned vortex
//!   and the two-level reduction of a double well.
//! - [`jumps`]: telegraph-process readout records, latching filter, dwell
//!   statistics and IQ clustering.
//!
//! All quantities are SI internally (metres, tesla, joules, seconds, hertz).

pub mod constants;
pub mod device;
pub mod energetics;
pub mod fitting;
pub mod jumps;
pub mod lanczos;
pub mod rabi;
pub mod tunneling;

pub use constants::PhysicalConstants;
pub use device::{DerivedScales, DeviceModel, VortexRegime};
