//! The two-stage protocol: entangle two modes through one qubit, measure it,
//! then let two fresh qubits interact with the conditioned modes.

use crate::error::{Error, Result};
use crate::evolution::{evolve_two_mode, reciprocation_evolve, SystemParams};
use crate::pauli_wigner::{Outcome, WignerMatrix};
use crate::phase_space::GaussianSum;
#[allow(unused_imports)]
use num_traits::Float;

/// Normalised two-mode Wigner function `W_f(α, β)` after the entangling
/// qubit is found in `outcome`, together with the outcome probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedState {
    pub outcome: Outcome,
    pub probability: f64,
    pub wigner: GaussianSum,
}

pub fn conditioned_state(params: &SystemParams, t: f64, outcome: Outcome) -> Result<ConditionedState> {
    let w = evolve_two_mode(params, t)?;
    let (projected, probability) = w.project_qubit(outcome, 0)?;
    let wigner = projected
        .into_scalar()
        .ok_or(Error::InvalidParameter("expected a one-qubit matrix"))?;
    Ok(ConditionedState {
        outcome,
        probability,
        wigner,
    })
}

/// Interaction times of the two stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub entangle: f64,
    pub reciprocate: f64,
}

impl Schedule {
    pub fn equal(t: f64) -> Self {
        Self {
            entangle: t,
            reciprocate: t,
        }
    }
}

/// Both stages: returns the conditioned oscillator state and the 4×4 Wigner
/// matrix of qubits A, B and modes a, b after the second interaction.
pub fn run_pipeline(
    params: &SystemParams,
    schedule: Schedule,
    outcome: Outcome,
) -> Result<(ConditionedState, WignerMatrix)> {
    let conditioned = conditioned_state(params, schedule.entangle, outcome)?;
    let w4 = reciprocation_evolve(&conditioned.wigner, params, schedule.reciprocate)?;
    Ok((conditioned, w4))
}

/// `P(g)` in the decoherence-free case: `½(1 + e^{−8Δt²})`.
pub fn ideal_ground_probability(delta: f64, t: f64) -> f64 {
    0.5 * (1.0 + (-8.0 * delta * t * t).exp())
}
