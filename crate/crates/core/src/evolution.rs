//! Closed-form time evolution of the qubit-oscillator Wigner matrix.
//!
//! Under `H = σ₁(a + a†)` with amplitude damping at rate κ towards a thermal
//! bath and σ₁-dephasing at rate γ, each σ₁-basis block of the Wigner matrix
//! obeys a decoupled linear equation. With thermal initial data the four
//! normal modes stay single Gaussian forms:
//!
//! ```text
//! v₁ = W_T(α + λ),  v₂ = W_T(α − λ),
//! v₃ = i W_T(α) e^{ μ(α+α*) + ν},  v₄ = −i W_T(α) e^{−μ(α+α*) + ν},
//! λ(t) = (2i/κ)(1 − e^{−κt/2}),  μ(t) = 2λ(t),
//! ν(t) = −γt + κΔ ∫₀ᵗ μ(τ)² dτ.
//! ```
//!
//! `λ` is fixed by the drift `λ̇ = i − κλ/2`, so that κ, γ → 0 reproduces the
//! unitary `U(t) = D(−iσ₁t)` exactly. The generic solution convolves the
//! initial data with the kernels returned by [`kernels`].

use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::pauli_wigner::{BranchMatrix, NormalModeVector, WignerMatrix};
use crate::phase_space::{GaussianForm, GaussianKernel, GaussianSum, DEFAULT_PRUNE_EPS};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// How the entangling qubit meets the two oscillators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interaction {
    #[default]
    Simultaneous,
    /// Flying qubit; modelled by doubling the oscillator damping rate.
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub kappa: f64,
    pub gamma: f64,
    /// In units of ω/k_B.
    pub temperature: f64,
    pub interaction: Interaction,
    /// Multiplies λ(t). Only a diagnostic knob: the physical value is 1 and
    /// anything else breaks the unitary limit.
    pub lambda_scale: f64,
}

impl SystemParams {
    pub fn new(kappa: f64, gamma: f64, temperature: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter("kappa must be finite and >= 0"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be finite and >= 0"));
        }
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidParameter("temperature must be finite and >= 0"));
        }
        Ok(Self {
            kappa,
            gamma,
            temperature,
            interaction: Interaction::Simultaneous,
            lambda_scale: 1.0,
        })
    }

    /// κ = γ = 0.
    pub fn ideal(temperature: f64) -> Result<Self> {
        Self::new(0.0, 0.0, temperature)
    }

    pub fn with_interaction(mut self, interaction: Interaction) -> Self {
        self.interaction = interaction;
        self
    }

    pub fn with_lambda_scale(mut self, scale: f64) -> Self {
        self.lambda_scale = scale;
        self
    }

    /// Mean thermal occupation `n(T) = 1/(e^{1/T} − 1)`, with `n(0) = 0`.
    pub fn occupation(&self) -> f64 {
        thermal_occupation(self.temperature)
    }

    /// `Δ(T) = n(T) + 1/2`.
    pub fn delta(&self) -> f64 {
        self.occupation() + 0.5
    }

    /// Damping rate seen by the oscillators during the entangling stage.
    pub fn entangling_kappa(&self) -> f64 {
        match self.interaction {
            Interaction::Simultaneous => self.kappa,
            Interaction::Sequential => 2.0 * self.kappa,
        }
    }

    /// Same parameters with the damping rate replaced.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// `(2/κ)(1 − e^{−κt/2})`, the displacement magnitude reached at time t.
    pub fn effective_time(&self, t: f64) -> f64 {
        effective_time(self.kappa, t)
    }

    pub fn functions(&self) -> EvolutionFunctions {
        EvolutionFunctions {
            kappa: self.kappa,
            gamma: self.gamma,
            delta: self.delta(),
            lambda_scale: self.lambda_scale,
        }
    }
}

pub fn thermal_occupation(temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (1.0 / temperature).exp_m1()
}

/// `(2/κ)(1 − e^{−κt/2})`, continuous at κ = 0.
pub fn effective_time(kappa: f64, t: f64) -> f64 {
    if kappa == 0.0 {
        t
    } else {
        -2.0 / kappa * (-0.5 * kappa * t).exp_m1()
    }
}

/// `x − 2(1 − e^{−x}) + (1 − e^{−2x})/2`, series near zero.
fn cubic_remainder(x: f64) -> f64 {
    if x < 0.5 {
        // Σ_{k≥3} (−1)^{k+1} (2^{k−1} − 2) x^k / k!
        let mut sum = 0.0;
        let mut power = x * x / 2.0; // x^k / k! at k = 2
        for k in 3..40 {
            power *= x / k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let term = sign * (2f64.powi(k - 1) - 2.0) * power;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        x + 2.0 * (-x).exp_m1() - 0.5 * (-2.0 * x).exp_m1()
    }
}

/// `1 − tanh(y)/y`, series near zero.
fn tanh_remainder(y: f64) -> f64 {
    if y < 0.05 {
        let y2 = y * y;
        y2 * (1.0 / 3.0 + y2 * (-2.0 / 15.0 + y2 * (17.0 / 315.0 + y2 * (-62.0 / 2835.0 + y2 * 1382.0 / 155925.0))))
    } else {
        1.0 - y.tanh() / y
    }
}

/// Scalar functions entering the closed-form solution and the kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionFunctions {
    pub kappa: f64,
    pub gamma: f64,
    pub delta: f64,
    pub lambda_scale: f64,
}

impl EvolutionFunctions {
    /// `λ(t) = (2i/κ)(1 − e^{−κt/2})`.
    pub fn lambda(&self, t: f64) -> C64 {
        I * (self.lambda_scale * effective_time(self.kappa, t))
    }

    /// `μ(t) = (4i/κ)(1 − e^{−κt/2})`.
    pub fn mu(&self, t: f64) -> C64 {
        I * (2.0 * effective_time(self.kappa, t))
    }

    /// `κΔ ∫₀ᵗ μ² dτ`, the per-mode part of ν without dephasing.
    pub fn nu_mode(&self, t: f64) -> C64 {
        let k = self.kappa;
        if k == 0.0 {
            return ZERO;
        }
        C64::new(-32.0 * self.delta / (k * k) * cubic_remainder(0.5 * k * t), 0.0)
    }

    /// `ν(t) = −γt + κΔ ∫₀ᵗ μ² dτ`.
    pub fn nu(&self, t: f64) -> C64 {
        self.nu_mode(t) - self.gamma * t
    }

    /// Kernel exponent `μ_K(t) = (4i/κ) tanh(κt/4)`.
    pub fn mu_kernel(&self, t: f64) -> C64 {
        let k = self.kappa;
        if k == 0.0 {
            I * t
        } else {
            I * (4.0 / k * (0.25 * k * t).tanh())
        }
    }

    /// `κΔ ∫₀ᵗ μ_K² dτ`.
    pub fn nu_kernel_mode(&self, t: f64) -> C64 {
        let k = self.kappa;
        if k == 0.0 {
            return ZERO;
        }
        C64::new(-16.0 * self.delta * t / k * tanh_remainder(0.25 * k * t), 0.0)
    }

    pub fn nu_kernel(&self, t: f64) -> C64 {
        self.nu_kernel_mode(t) - self.gamma * t
    }

    /// Contraction `e^{−κt/2}` of the damping kernel K₀.
    pub fn damping_scale(&self, t: f64) -> f64 {
        (-0.5 * self.kappa * t).exp()
    }

    /// Width `Δ(1 − e^{−κt})` of the damping kernel K₀.
    pub fn damping_variance(&self, t: f64) -> f64 {
        -self.delta * (-self.kappa * t).exp_m1()
    }
}

/// Normal-mode label `j` of the kernel `V_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelId {
    V1,
    V2,
    V3,
    V4,
}

impl TryFrom<u8> for KernelId {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        match id {
            1 => Ok(KernelId::V1),
            2 => Ok(KernelId::V2),
            3 => Ok(KernelId::V3),
            4 => Ok(KernelId::V4),
            _ => Err(Error::InvalidKernelId(id)),
        }
    }
}

/// `K₀` and `V₁…V₄` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSet {
    pub k0: GaussianKernel,
    pub v: [GaussianKernel; 4],
}

impl KernelSet {
    pub fn get(&self, id: KernelId) -> &GaussianKernel {
        &self.v[id as usize]
    }
}

fn kernel_set(f: &EvolutionFunctions, t: f64, dephasing: bool) -> KernelSet {
    let k0 = GaussianKernel {
        scale: f.damping_scale(t),
        variance: f.damping_variance(t),
        ..GaussianKernel::IDENTITY
    };
    if t == 0.0 {
        return KernelSet {
            k0: GaussianKernel::IDENTITY,
            v: [GaussianKernel::IDENTITY; 4],
        };
    }
    let lambda = f.lambda(t);
    let mu = f.mu_kernel(t);
    let nu = if dephasing { f.nu_kernel(t) } else { f.nu_kernel_mode(t) };
    KernelSet {
        k0,
        v: [
            GaussianKernel { shift: lambda, ..k0 },
            GaussianKernel { shift: -lambda, ..k0 },
            GaussianKernel {
                exp_coeff: mu,
                log_factor: nu,
                ..k0
            },
            GaussianKernel {
                exp_coeff: -mu,
                log_factor: nu,
                ..k0
            },
        ],
    }
}

/// Integral kernels of the four normal-mode equations (dephasing included in
/// `V₃`, `V₄`). At `t = 0` every kernel is the identity.
pub fn kernels(params: &SystemParams, t: f64) -> KernelSet {
    kernel_set(&params.functions(), t, true)
}

/// `∫ V_j(α, α₀, t) f(α₀) d²α₀` for a single-mode sum.
pub fn convolve_kernel(form: &GaussianSum, kernel_id: u8, params: &SystemParams, t: f64) -> Result<GaussianSum> {
    let id = KernelId::try_from(kernel_id)?;
    if t < 0.0 {
        return Err(Error::InvalidParameter("time must be >= 0"));
    }
    assert_eq!(form.modes(), 1, "convolve_kernel acts on single-mode sums");
    form.convolve(0, kernels(params, t).get(id))
}

/// Closed-form normal modes for the qubit in `|g⟩` and a thermal oscillator.
pub fn thermal_normal_modes(params: &SystemParams, t: f64) -> NormalModeVector {
    let f = params.functions();
    let wt = GaussianForm::thermal(params.delta());
    let lambda = f.lambda(t);
    let mu = f.mu(t);
    let nu = f.nu(t);
    NormalModeVector {
        v: [
            GaussianSum::single(wt.shift(lambda)),
            GaussianSum::single(wt.shift(-lambda)),
            GaussianSum::single(wt.multiply_exponential(mu, mu, I).add_offset(nu)),
            GaussianSum::single(wt.multiply_exponential(-mu, -mu, -I).add_offset(nu)),
        ],
    }
}

/// One qubit, one mode, starting from `|g⟩⟨g| ⊗ W_T`.
pub fn evolve_single(params: &SystemParams, t: f64) -> Result<WignerMatrix> {
    if t < 0.0 {
        return Err(Error::InvalidParameter("time must be >= 0"));
    }
    Ok(thermal_normal_modes(params, t).to_wigner())
}

/// Applies `V_j` to each `v_j`.
pub fn evolve_generic(initial: &NormalModeVector, params: &SystemParams, t: f64) -> Result<NormalModeVector> {
    if t < 0.0 {
        return Err(Error::InvalidParameter("time must be >= 0"));
    }
    let ks = kernels(params, t);
    let mut v = initial.v.clone();
    for (j, vj) in v.iter_mut().enumerate() {
        let mut out = vj.clone();
        for mode in 0..vj.modes() {
            out = out.convolve(mode, &ks.v[j])?;
        }
        *vj = out;
    }
    Ok(NormalModeVector { v })
}

/// Mode-local kernel for the σ₁-block `(s, s')` of the qubit the mode couples to.
///
/// `(+,+) → V₁`, `(−,−) → V₂`, `(+,−) → V₄`, `(−,+) → V₃`, without the
/// dephasing factor, which belongs to the qubit and is applied once per block.
fn branch_kernel(set: &KernelSet, s: usize, s_prime: usize) -> GaussianKernel {
    match (s, s_prime) {
        (0, 0) => set.v[0],
        (1, 1) => set.v[1],
        (0, 1) => set.v[3],
        _ => set.v[2],
    }
}

/// Evolves σ₁-basis blocks where mode `m` couples to qubit `coupling[m]`.
///
/// Modes and qubits only interact pairwise through `σ₁(a + a†)`, so every
/// block factorises into independent per-mode convolutions times the
/// dephasing factor `e^{−γt}` for each qubit with `s ≠ s'`.
pub fn evolve_branches(
    branches: &BranchMatrix,
    coupling: &[usize],
    params: &SystemParams,
    t: f64,
) -> Result<BranchMatrix> {
    if t < 0.0 {
        return Err(Error::InvalidParameter("time must be >= 0"));
    }
    assert_eq!(coupling.len(), branches.modes());
    let f = params.functions();
    let set = kernel_set(&f, t, false);
    let mut out = branches.clone();
    for idx in 0..out.blocks.len() {
        let (rows, cols) = out.split(idx);
        let mut block = out.blocks[idx].clone();
        for (mode, &qubit) in coupling.iter().enumerate() {
            block = block.convolve(mode, &branch_kernel(&set, rows[qubit], cols[qubit]))?;
        }
        let flips = rows.iter().zip(&cols).filter(|(a, b)| a != b).count();
        let dephase = (-params.gamma * t * flips as f64).exp();
        out.blocks[idx] = block.scale(C64::new(dephase, 0.0)).prune(DEFAULT_PRUNE_EPS);
    }
    Ok(out)
}

/// Per-mode σ₁-block functions `f_{ss'}` with thermal initial data, so that a
/// block of the one-mode solution is `½ f_{ss'}` (dephasing excluded).
fn thermal_block_forms(params: &SystemParams, t: f64) -> [GaussianForm; 4] {
    let f = params.functions();
    let wt = GaussianForm::thermal(params.delta());
    let lambda = f.lambda(t);
    let mu = f.mu(t);
    let g = f.nu_mode(t);
    [
        wt.shift(lambda),
        wt.multiply_exponential(-mu, -mu, ONE).add_offset(g),
        wt.multiply_exponential(mu, mu, ONE).add_offset(g),
        wt.shift(-lambda),
    ]
}

/// One qubit coupled to two identical modes, from `|g⟩⟨g| ⊗ W_T ⊗ W_T`.
///
/// Each σ₁ block is the product of the one-mode block functions in α and β;
/// the qubit dephasing factor enters once. Sequential interaction uses the
/// doubled damping rate.
pub fn evolve_two_mode(params: &SystemParams, t: f64) -> Result<WignerMatrix> {
    if t < 0.0 {
        return Err(Error::InvalidParameter("time must be >= 0"));
    }
    let p = params.with_kappa(params.entangling_kappa());
    let forms = thermal_block_forms(&p, t);
    let mut b = BranchMatrix::zero(1, 2);
    for (idx, form) in forms.iter().enumerate() {
        let off_diagonal = idx == 1 || idx == 2;
        let dephase = if off_diagonal { (-p.gamma * t).exp() } else { 1.0 };
        b.blocks[idx] = GaussianSum::product(alloc::vec![*form, *form]).scale(C64::new(0.5 * dephase, 0.0));
    }
    Ok(b.to_wigner())
}

/// Second protocol stage: qubits A, B start in `|gg⟩`, mode a couples to A
/// and mode b to B, for a further time `t`.
pub fn reciprocation_evolve(conditioned: &GaussianSum, params: &SystemParams, t: f64) -> Result<WignerMatrix> {
    assert_eq!(conditioned.modes(), 2, "reciprocation needs a two-mode state");
    let initial = WignerMatrix::ground(2, conditioned).to_branches();
    Ok(evolve_branches(&initial, &[0, 1], params, t)?.to_wigner())
}

/// Sampled scalar functions, for reporting.
pub fn function_table(params: &SystemParams, times: &[f64]) -> Vec<(f64, C64, C64, C64)> {
    let f = params.functions();
    times.iter().map(|&t| (t, f.lambda(t), f.mu(t), f.nu(t))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli_wigner::{Pauli, PauliLabel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn occupation_and_delta() {
        assert_eq!(thermal_occupation(0.0), 0.0);
        let p = SystemParams::new(0.0, 0.0, 1.0).unwrap();
        assert!((p.occupation() - 1.0 / (1f64.exp() - 1.0)).abs() < 1e-15);
        assert!((p.delta() - p.occupation() - 0.5).abs() < 1e-15);
        let mut last = 0.0;
        for k in 1..50 {
            let n = thermal_occupation(k as f64 * 0.05);
            assert!(n > last);
            last = n;
        }
        assert!(SystemParams::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn functions_vanish_at_zero() {
        let f = SystemParams::new(0.3, 0.1, 0.7).unwrap().functions();
        assert_eq!(f.lambda(0.0), ZERO);
        assert_eq!(f.mu(0.0), ZERO);
        assert!(f.nu(0.0).norm() < 1e-300);
    }

    #[test]
    fn unitary_limits() {
        let f = SystemParams::ideal(0.5).unwrap().functions();
        assert_eq!(f.lambda(1.3), c(0.0, 1.3));
        assert_eq!(f.mu(1.3), c(0.0, 2.6));
        let small = SystemParams::new(1e-9, 0.0, 0.5).unwrap().functions();
        assert!((small.lambda(2.0) - c(0.0, 2.0)).norm() < 1e-8);
        // ν ≈ −(4/3)κΔt³ for small κ
        let nu = small.nu(2.0).re;
        let leading = -4.0 / 3.0 * 1e-9 * small.delta * 8.0;
        assert!((nu - leading).abs() < 1e-6 * leading.abs());
    }

    #[test]
    fn nu_closed_form_matches_quadrature() {
        for (kappa, t) in [(0.01, 3.0), (0.3, 1.7), (2.0, 4.0), (1e-4, 2.0)] {
            let f = SystemParams::new(kappa, 0.05, 0.8).unwrap().functions();
            let mu2 = |tau: f64| (f.mu(tau) * f.mu(tau)).re;
            let quad = kappa * f.delta * simpson(mu2, 0.0, t, 2000) - 0.05 * t;
            assert!((f.nu(t).re - quad).abs() < 1e-10 * quad.abs().max(1.0), "{kappa} {t}");
            let muk2 = |tau: f64| (f.mu_kernel(tau) * f.mu_kernel(tau)).re;
            let quad_k = kappa * f.delta * simpson(muk2, 0.0, t, 2000) - 0.05 * t;
            assert!((f.nu_kernel(t).re - quad_k).abs() < 1e-10 * quad_k.abs().max(1.0));
        }
    }

    #[test]
    fn series_branches_are_continuous() {
        for x in [0.4999999, 0.5000001] {
            let direct = x + 2.0 * (-x).exp_m1() - 0.5 * (-2.0 * x).exp_m1();
            assert!((cubic_remainder(x) - direct).abs() < 1e-15);
        }
        for y in [0.0499999, 0.0500001] {
            assert!((tanh_remainder(y) - (1.0 - y.tanh() / y)).abs() < 1e-14);
        }
    }

    #[test]
    fn lambda_solves_drift_equation() {
        let f = SystemParams::new(0.4, 0.0, 0.2).unwrap().functions();
        let h = 1e-6;
        for t in [0.3, 1.0, 2.5] {
            let deriv = (f.lambda(t + h) - f.lambda(t - h)) / (2.0 * h);
            assert!((deriv - (I - 0.2 * f.lambda(t))).norm() < 1e-8);
            let dmu = (f.mu(t + h) - f.mu(t - h)) / (2.0 * h);
            assert!((dmu - (2.0 * I - 0.2 * f.mu(t))).norm() < 1e-8);
        }
    }

    #[test]
    fn initial_state_is_ground_thermal() {
        let p = SystemParams::new(0.1, 0.2, 0.6).unwrap();
        let w = evolve_single(&p, 0.0).unwrap();
        let wt = GaussianForm::thermal(p.delta());
        let pt = [c(0.2, -0.3)];
        let m = w.matrix_at(&pt);
        assert!((m[0][0] - wt.evaluate(pt[0])).norm() < 1e-14);
        assert!(m[1][1].norm() < 1e-14 && m[0][1].norm() < 1e-14);
    }

    #[test]
    fn normalization_and_hermiticity_over_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p = SystemParams::new(rng.random_range(0.0..0.5), rng.random_range(0.0..0.5), rng.random_range(0.0..1.5)).unwrap();
            let t = rng.random_range(0.0..4.0);
            let w = evolve_single(&p, t).unwrap();
            assert!((w.norm().unwrap() - 1.0).abs() < 1e-10);
            let pt = [c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))];
            let m = w.matrix_at(&pt);
            assert!((m[0][1] - m[1][0].conj()).norm() < 1e-10);
            assert!(m[0][0].im.abs() < 1e-12 && m[1][1].im.abs() < 1e-12);
        }
    }

    #[test]
    fn k0_is_normalised_and_equilibrates() {
        let p = SystemParams::new(0.3, 0.0, 0.9).unwrap();
        let k = kernels(&p, 1.5).k0;
        for a0 in [c(0.0, 0.0), c(1.0, -2.0)] {
            // as a function of α, K₀ is a thermal-shaped form of width σ² centred at s·α₀
            let form = GaussianForm::thermal(k.variance).shift(-k.scale * a0);
            assert!((form.evaluate(c(0.4, 0.1)) - k.evaluate(c(0.4, 0.1), a0)).norm() < 1e-14);
            assert!((form.integrate().unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let late = kernels(&p, 40.0 / 0.3).k0;
        let wt = GaussianForm::thermal(p.delta());
        for a in [c(0.0, 0.0), c(0.5, 0.3)] {
            let v = late.evaluate(a, c(3.0, -1.0));
            assert!((v - wt.evaluate(a)).norm() < 1e-6);
        }
    }

    #[test]
    fn kernel_route_reproduces_thermal_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for (kappa, gamma, temp, t) in [(0.3, 0.1, 0.5, 1.7), (0.0, 0.2, 1.0, 2.0), (0.01, 0.01, 1.0, 2.0)] {
            let p = SystemParams::new(kappa, gamma, temp).unwrap();
            let init = thermal_normal_modes(&p, 0.0);
            let via_kernel = evolve_generic(&init, &p, t).unwrap();
            let closed = thermal_normal_modes(&p, t);
            for _ in 0..10 {
                let pt = [c(rng.random_range(-2.0..2.0), rng.random_range(-3.0..3.0))];
                let a = via_kernel.evaluate(&pt);
                let b = closed.evaluate(&pt);
                for j in 0..4 {
                    assert!((a[j] - b[j]).norm() < 1e-10, "{j}: {} vs {}", a[j], b[j]);
                }
            }
        }
    }

    #[test]
    fn kernel_id_validation() {
        let p = SystemParams::ideal(0.0).unwrap();
        let f = GaussianSum::single(GaussianForm::thermal(0.5));
        assert!(matches!(convolve_kernel(&f, 0, &p, 1.0), Err(Error::InvalidKernelId(0))));
        assert!(matches!(convolve_kernel(&f, 5, &p, 1.0), Err(Error::InvalidKernelId(5))));
        let same = convolve_kernel(&f, 3, &p, 0.0).unwrap();
        assert_eq!(same.evaluate(&[c(0.3, 0.2)]), f.evaluate(&[c(0.3, 0.2)]));
    }

    #[test]
    fn unitary_semigroup() {
        let p = SystemParams::ideal(0.4).unwrap();
        let init = thermal_normal_modes(&p, 0.0);
        let half = evolve_generic(&evolve_generic(&init, &p, 0.8).unwrap(), &p, 0.8).unwrap();
        let full = evolve_generic(&init, &p, 1.6).unwrap();
        let pt = [c(0.3, -1.2)];
        let (a, b) = (half.evaluate(&pt), full.evaluate(&pt));
        for j in 0..4 {
            assert!((a[j] - b[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn two_mode_initial_and_symmetry() {
        let p = SystemParams::new(0.02, 0.01, 0.5).unwrap();
        let w0 = evolve_two_mode(&p, 0.0).unwrap();
        let wt = GaussianForm::thermal(p.delta());
        let pt = [c(0.1, 0.2), c(-0.3, 0.4)];
        let m = w0.matrix_at(&pt);
        assert!((m[0][0] - wt.evaluate(pt[0]) * wt.evaluate(pt[1])).norm() < 1e-14);
        assert!(m[1][1].norm() < 1e-14);

        let w = evolve_two_mode(&p, 2.0).unwrap();
        let swapped = [pt[1], pt[0]];
        let (a, b) = (w.matrix_at(&pt), w.matrix_at(&swapped));
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j]).norm() < 1e-14);
            }
        }
        assert!((w.norm().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sequential_is_doubled_damping() {
        let base = SystemParams::new(0.02, 0.01, 0.5).unwrap();
        let seq = evolve_two_mode(&base.with_interaction(Interaction::Sequential), 1.5).unwrap();
        let sim = evolve_two_mode(&base.with_kappa(0.04), 1.5).unwrap();
        assert_eq!(seq, sim);
    }

    #[test]
    fn dephasing_damps_coherences() {
        let a = SystemParams::new(0.05, 0.0, 0.3).unwrap();
        let b = SystemParams::new(0.05, 0.2, 0.3).unwrap();
        let t = 1.3;
        let pt = [c(0.2, 0.1)];
        let va = thermal_normal_modes(&a, t).evaluate(&pt);
        let vb = thermal_normal_modes(&b, t).evaluate(&pt);
        assert!((vb[2].norm() / va[2].norm() - (-0.2 * t).exp()).abs() < 1e-12);
    }

    #[test]
    fn reciprocation_starts_in_ground_state() {
        let p = SystemParams::new(0.01, 0.01, 0.5).unwrap();
        let w2 = evolve_two_mode(&p, 1.0).unwrap();
        let (wf, _) = w2.project_qubit(crate::Outcome::E, 0).unwrap();
        let wf = wf.into_scalar().unwrap();
        let w4 = reciprocation_evolve(&wf, &p, 0.0).unwrap();
        let pt = [c(0.1, 0.7), c(-0.3, -0.5)];
        let m = w4.matrix_at(&pt);
        let v = wf.evaluate(&pt);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == 0 && j == 0 { v } else { ZERO };
                assert!((m[i][j] - expected).norm() < 1e-13);
            }
        }
        let later = reciprocation_evolve(&wf, &p, 1.0).unwrap();
        assert!((later.norm().unwrap() - 1.0).abs() < 1e-10);
        assert!(later.component(PauliLabel::new(&[Pauli::X, Pauli::X])).is_some());
    }
}
