//! Closed-form Wigner-matrix dynamics for two thermally damped oscillators
//! entangled through a mediating qubit, with an independent truncated-Fock
//! oracle and the downstream Bell / reciprocation analysis.
//!
//! The crate is `no_std` (it needs `alloc`). Every analytic object lives in
//! the algebra of complex Gaussian exponentials, see [`phase_space`].
//!
//! Units: ħ = 1, the qubit-oscillator coupling is 1, temperatures are in
//! units of ω/k_B and times in inverse coupling units.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod evolution;
pub mod fock;
pub mod measurement;
pub mod optimize;
pub mod pauli_wigner;
pub mod phase_space;
pub mod protocol;

pub use error::{Error, Result};
pub use evolution::{EvolutionFunctions, Interaction, KernelId, KernelSet, SystemParams};
pub use measurement::{BellOptions, BellSettings, EntanglementReport, Weighting};
pub use pauli_wigner::{NormalModeVector, Outcome, Pauli, PauliLabel, TwoQubitState, WignerMatrix};
pub use phase_space::{GaussianForm, GaussianKernel, GaussianSum, MomentumSum};

pub use num_complex::Complex64;
