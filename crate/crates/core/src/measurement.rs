//! Displaced-parity Bell tests on the conditioned oscillator state and the
//! two-qubit states obtained by reciprocation.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::evolution::{thermal_occupation, SystemParams};
use crate::optimize::{nelder_mead_max, scrambled_halton, NelderMeadOptions};
use crate::pauli_wigner::{Outcome, PauliLabel, TwoQubitState, WignerMatrix};
use crate::phase_space::{GaussianSum, MomentumSum};
use crate::protocol::conditioned_state;

const TSIRELSON: f64 = 2.0 * SQRT_2;

/// `ΔP(α, β) = P_same − P_diff = (π²/4) W_f(α, β)`.
pub fn delta_p(w: &GaussianSum, alpha: C64, beta: C64) -> f64 {
    0.25 * PI * PI * w.evaluate(&[alpha, beta]).re
}

/// Displacements of a CHSH test and the value they achieve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellSettings {
    pub alpha: C64,
    pub beta: C64,
    pub alpha_p: C64,
    pub beta_p: C64,
    pub value: f64,
}

impl BellSettings {
    /// Packs `(α, β, α′, β′)` as eight reals.
    pub fn to_params(&self) -> [f64; 8] {
        let z = [self.alpha, self.beta, self.alpha_p, self.beta_p];
        core::array::from_fn(|i| if i % 2 == 0 { z[i / 2].re } else { z[i / 2].im })
    }

    /// Inverse of [`to_params`](Self::to_params), with the value evaluated on `w`.
    pub fn from_params(w: &GaussianSum, x: &[f64]) -> Self {
        let z = |k: usize| C64::new(x[2 * k], x[2 * k + 1]);
        let mut s = Self {
            alpha: z(0),
            beta: z(1),
            alpha_p: z(2),
            beta_p: z(3),
            value: 0.0,
        };
        s.value = bell_value(w, &s);
        s
    }
}

/// `𝓑 = ΔP(α,β) + ΔP(α′,β) + ΔP(α,β′) − ΔP(α′,β′)`; `settings.value` is ignored.
pub fn bell_value(w: &GaussianSum, s: &BellSettings) -> f64 {
    delta_p(w, s.alpha, s.beta) + delta_p(w, s.alpha_p, s.beta) + delta_p(w, s.alpha, s.beta_p)
        - delta_p(w, s.alpha_p, s.beta_p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellOptions {
    /// Quasi-random starts.
    pub starts: usize,
    pub seed: u64,
    /// Largest start radius per displacement component.
    pub radius: f64,
    /// Smallest start radius as a fraction of `radius`; radii are spread
    /// geometrically in between.
    pub min_radius_fraction: f64,
    /// Convergence tolerance on 𝓑.
    pub tol: f64,
    pub max_evals: usize,
}

impl Default for BellOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0x5eed,
            radius: 4.0,
            min_radius_fraction: 1.0 / 1024.0,
            tol: 1e-8,
            max_evals: 20_000,
        }
    }
}

fn refine(w: &GaussianSum, x0: &[f64], step: f64, opts: &BellOptions) -> (Vec<f64>, f64) {
    let nm = NelderMeadOptions {
        f_tol: opts.tol,
        x_tol: opts.tol.sqrt() * 1e-2,
        max_evals: opts.max_evals,
    };
    let f = |x: &[f64]| bell_value(w, &BellSettings::from_params(w, x));
    let first = nelder_mead_max(f, x0, step, &nm);
    // one restart shakes the simplex out of premature collapse
    let second = nelder_mead_max(f, &first.x, step.min(1e-2).max(1e-6), &nm);
    if second.value >= first.value {
        (second.x, second.value)
    } else {
        (first.x, first.value)
    }
}

/// Multi-start simplex maximisation of 𝓑 over the eight real parameters.
pub fn bell_optimize(w: &GaussianSum, opts: &BellOptions) -> BellSettings {
    bell_optimize_warm(w, opts, &[])
}

/// As [`bell_optimize`], additionally refining from the given settings.
pub fn bell_optimize_warm(w: &GaussianSum, opts: &BellOptions, warm: &[BellSettings]) -> BellSettings {
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut consider = |cand: (Vec<f64>, f64)| {
        if best.as_ref().map_or(true, |b| cand.1 > b.1) {
            best = Some(cand);
        }
    };
    for s in warm {
        let x = s.to_params();
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
        consider(refine(w, &x, 0.05 * scale, opts));
    }
    let points = scrambled_halton(opts.starts, 8, opts.seed);
    let n = opts.starts.max(2) - 1;
    for (k, u) in points.iter().enumerate() {
        let frac = opts.min_radius_fraction.powf(1.0 - k as f64 / n as f64);
        let r = opts.radius * frac;
        let x: Vec<f64> = u.iter().map(|v| r * (2.0 * v - 1.0)).collect();
        consider(refine(w, &x, 0.5 * r, opts));
    }
    let (x, _) = best.unwrap_or_else(|| (alloc::vec![0.0; 8], 0.0));
    BellSettings::from_params(w, &x)
}

/// `𝓑_max = 2√2/(1 + 2n(T))²`, the large-time decoherence-free maximum.
pub fn bell_max_formula(temperature: f64) -> f64 {
    let n = thermal_occupation(temperature);
    TSIRELSON / ((1.0 + 2.0 * n) * (1.0 + 2.0 * n))
}

/// Temperature at which [`bell_max_formula`] equals 2, by bisection to 1e-6.
pub fn critical_temperature() -> f64 {
    let (mut lo, mut hi) = (0.05, 2.0);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if bell_max_formula(mid) > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Algebraic inversion of `(1 + 2n)² = √2`.
pub fn critical_temperature_closed_form() -> f64 {
    let n = 0.5 * (2f64.powf(0.25) - 1.0);
    1.0 / (1.0 + 1.0 / n).ln()
}

/// Optimal settings for the decoherence-free state at temperature `T` and
/// time `t`.
pub fn ideal_settings(temperature: f64, t: f64, outcome: Outcome, opts: &BellOptions) -> Result<BellSettings> {
    let c = conditioned_state(&SystemParams::ideal(temperature)?, t, outcome)?;
    Ok(bell_optimize(&c.wigner, opts))
}

/// Ideal-limit settings for the effective time of `params` at `t`, the
/// frozen settings entering [`bell_lower_bound`].
pub fn frozen_settings(params: &SystemParams, t: f64, outcome: Outcome, opts: &BellOptions) -> Result<BellSettings> {
    let t_eff = params.with_kappa(params.entangling_kappa()).effective_time(t);
    ideal_settings(params.temperature, t_eff, outcome, opts)
}

/// 𝓑 of the decohered state at `t`, evaluated at `frozen` settings.
pub fn bell_lower_bound(params: &SystemParams, t: f64, outcome: Outcome, frozen: &BellSettings) -> Result<f64> {
    let c = conditioned_state(params, t, outcome)?;
    Ok(bell_value(&c.wigner, frozen))
}

/// `⟨ψ⁺|ρ|ψ⁺⟩` with `|ψ⁺⟩ = (|ge⟩ + |eg⟩)/√2`.
pub fn fidelity_psi_plus(rho: &TwoQubitState) -> f64 {
    let m = rho.matrix();
    0.5 * (m[(1, 1)] + m[(2, 2)] + m[(1, 2)] + m[(2, 1)]).re
}

pub fn psi_plus() -> TwoQubitState {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    TwoQubitState::pure([z, h, h, z])
}

/// Sum of the magnitudes of the negative eigenvalues of `ρ^{T_B}`.
pub fn negativity(rho: &TwoQubitState) -> f64 {
    let m = rho.matrix();
    // ⟨a b|ρ^{T_B}|a' b'⟩ = ⟨a b'|ρ|a' b⟩
    let pt = Matrix4::from_fn(|i, j| m[((i & 2) | (j & 1), (j & 2) | (i & 1))]);
    pt.symmetric_eigen()
        .eigenvalues
        .iter()
        .filter(|&&e| e < 0.0)
        .map(|e| -e)
        .sum()
}

/// Summary of one conditioned two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementReport {
    pub fidelity_psi_plus: f64,
    pub negativity: f64,
    pub outcome_probability: f64,
}

impl EntanglementReport {
    pub fn new(rho: &TwoQubitState, outcome_probability: f64) -> Self {
        Self {
            fidelity_psi_plus: fidelity_psi_plus(rho),
            negativity: negativity(rho),
            outcome_probability,
        }
    }
}

/// Momentum marginals of every Pauli component of a 4×4 Wigner matrix.
#[derive(Debug, Clone)]
pub struct MomentumConditioner {
    components: Vec<(PauliLabel, MomentumSum)>,
}

/// Rectangle around the origin bounded by the first minima of the axis
/// marginals, and the probability it holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralPeak {
    pub a_bounds: (f64, f64),
    pub b_bounds: (f64, f64),
    pub mass: f64,
}

impl MomentumConditioner {
    pub fn new(w4: &WignerMatrix) -> Result<Self> {
        if w4.qubits() != 2 || w4.modes() != 2 {
            return Err(Error::InvalidParameter("momentum conditioning needs two qubits and two modes"));
        }
        let components = w4
            .components()
            .map(|(l, s)| Ok((l, s.marginal_x()?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    /// Joint probability density of `(p_a, p_b)`.
    pub fn density(&self, pa: f64, pb: f64) -> f64 {
        let id = PauliLabel::identity(2);
        self.components
            .iter()
            .filter(|(l, _)| *l == id)
            .map(|(_, m)| 4.0 * m.evaluate(&[pa, pb]).re)
            .sum()
    }

    /// Qubit state conditioned on `(p_a, p_b)` and the outcome density.
    pub fn state(&self, pa: f64, pb: f64) -> Result<(TwoQubitState, f64)> {
        let coeffs = self
            .components
            .iter()
            .map(|(l, m)| (*l, m.evaluate(&[pa, pb])))
            .collect();
        TwoQubitState::from_pauli(&coeffs)
    }

    /// Segments the peak around the origin on `[−half_width, half_width]²`
    /// sampled with `points` nodes per axis.
    pub fn central_peak(&self, half_width: f64, points: usize) -> CentralPeak {
        let points = points.max(5) | 1;
        let h = 2.0 * half_width / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|i| -half_width + i as f64 * h).collect();
        let marginal = |along_a: bool| -> Vec<f64> {
            grid.iter()
                .map(|&p| {
                    let g = |q: f64| if along_a { self.density(p, q) } else { self.density(q, p) };
                    simpson(g, -half_width, half_width, points - 1)
                })
                .collect()
        };
        let bounds = |m: &[f64]| {
            let mid = points / 2;
            let mut hi = mid;
            while hi + 1 < points && m[hi + 1] <= m[hi] {
                hi += 1;
            }
            while hi + 1 < points && m[hi + 1] < m[hi] {
                hi += 1;
            }
            let mut lo = mid;
            while lo > 0 && m[lo - 1] <= m[lo] {
                lo -= 1;
            }
            (grid[lo], grid[hi])
        };
        let a_bounds = bounds(&marginal(true));
        let b_bounds = bounds(&marginal(false));
        let n = 200;
        let mass = simpson(
            |pa| simpson(|pb| self.density(pa, pb), b_bounds.0, b_bounds.1, n),
            a_bounds.0,
            a_bounds.1,
            n,
        );
        CentralPeak {
            a_bounds,
            b_bounds,
            mass,
        }
    }
}

/// Qubit state after both momenta are measured.
pub fn reciprocate_momentum(w4: &WignerMatrix, pa: f64, pb: f64) -> Result<(TwoQubitState, f64)> {
    MomentumConditioner::new(w4)?.state(pa, pb)
}

/// Composite Simpson rule with `n` (rounded up to even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Parity outcome pair `(Π_a, Π_b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParityOutcome {
    pub pi_a: i8,
    pub pi_b: i8,
}

impl ParityOutcome {
    pub const ALL: [ParityOutcome; 4] = [
        ParityOutcome { pi_a: 1, pi_b: 1 },
        ParityOutcome { pi_a: 1, pi_b: -1 },
        ParityOutcome { pi_a: -1, pi_b: 1 },
        ParityOutcome { pi_a: -1, pi_b: -1 },
    ];
}

/// Per Pauli component: `∫∫W`, `∫W(α,0)d²α`, `∫W(0,β)d²β` and `W(0,0)`.
#[derive(Debug, Clone)]
pub struct ParityFunctionals {
    values: Vec<(PauliLabel, [C64; 4])>,
}

impl ParityFunctionals {
    pub fn new(w4: &WignerMatrix) -> Result<Self> {
        if w4.qubits() != 2 || w4.modes() != 2 {
            return Err(Error::InvalidParameter("parity conditioning needs two qubits and two modes"));
        }
        let zero = C64::new(0.0, 0.0);
        let values = w4
            .components()
            .map(|(l, s)| {
                let full = s.integrate_full()?;
                let b_at_origin = s.evaluate_mode(1, zero).integrate_full()?;
                let a_at_origin = s.evaluate_mode(0, zero).integrate_full()?;
                let point = s.evaluate(&[zero, zero]);
                Ok((l, [full, b_at_origin, a_at_origin, point]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { values })
    }

    fn coefficients(&self, o: ParityOutcome) -> alloc::collections::BTreeMap<PauliLabel, C64> {
        let (pa, pb) = (o.pi_a as f64, o.pi_b as f64);
        self.values
            .iter()
            .map(|(l, [full, b0, a0, point])| {
                let c = full + b0 * (0.5 * PI * pb) + a0 * (0.5 * PI * pa) + point * (0.25 * PI * PI * pa * pb);
                (*l, c * 0.25)
            })
            .collect()
    }

    /// Probability of `o`.
    pub fn probability(&self, o: ParityOutcome) -> f64 {
        let id = PauliLabel::identity(2);
        4.0 * self.coefficients(o).get(&id).map_or(0.0, |c| c.re)
    }

    pub fn state(&self, o: ParityOutcome) -> Result<(TwoQubitState, f64)> {
        TwoQubitState::from_pauli(&self.coefficients(o))
    }
}

/// Qubit state after the parities `(Π_a, Π_b)` are found, and its probability.
pub fn reciprocate_parity(w4: &WignerMatrix, pi_a: i8, pi_b: i8) -> Result<(TwoQubitState, f64)> {
    if pi_a.abs() != 1 || pi_b.abs() != 1 {
        return Err(Error::InvalidParameter("parities are ±1"));
    }
    ParityFunctionals::new(w4)?.state(ParityOutcome { pi_a, pi_b })
}

/// Weights of the four parity sectors in [`averaged_negativity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Probability,
    Uniform,
}

/// Conditioned state of every parity sector; `None` for sectors with
/// vanishing probability.
pub fn parity_sectors(w4: &WignerMatrix) -> Result<Vec<(ParityOutcome, Option<TwoQubitState>, f64)>> {
    let f = ParityFunctionals::new(w4)?;
    ParityOutcome::ALL
        .iter()
        .map(|&o| match f.state(o) {
            Ok((s, p)) => Ok((o, Some(s), p)),
            Err(Error::ZeroProbability(p)) => Ok((o, None, p.max(0.0))),
            Err(e) => Err(e),
        })
        .collect()
}

/// Negativity averaged over the parity sectors.
pub fn averaged_negativity(sectors: &[(ParityOutcome, Option<TwoQubitState>, f64)], weighting: Weighting) -> f64 {
    match weighting {
        Weighting::Probability => sectors
            .iter()
            .filter_map(|(_, s, p)| s.as_ref().map(|s| p * negativity(s)))
            .sum(),
        Weighting::Uniform => {
            let n: Vec<f64> = sectors.iter().filter_map(|(_, s, _)| s.as_ref().map(negativity)).collect();
            if n.is_empty() {
                0.0
            } else {
                n.iter().sum::<f64>() / n.len() as f64
            }
        }
    }
}
