//! Qubit-operator-valued Wigner functions.
//!
//! A [`WignerMatrix`] over `q` qubits (1 or 2) is stored in the Pauli tensor
//! basis, `W = Σ_P c_P(α…) P`, with every coefficient a [`GaussianSum`].
//! Basis ordering is `|g⟩ = 0`, `|e⟩ = 1`, qubit 0 most significant, and
//!
//! ```text
//! σ₁ = |e⟩⟨g| + |g⟩⟨e|,  σ₂ = i(|e⟩⟨g| − |g⟩⟨e|),  σ₃ = |g⟩⟨g| − |e⟩⟨e|.
//! ```
//!
//! The dynamics are diagonal in the σ₁ eigenbasis `|±⟩ = (|g⟩ ± |e⟩)/√2`;
//! [`BranchMatrix`] holds the blocks `⟨s|W|s'⟩` in that basis.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::phase_space::{GaussianSum, DEFAULT_PRUNE_EPS};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Eigenvalues above `-POSITIVITY_TOL` are treated as numerical noise.
pub const POSITIVITY_TOL: f64 = 1e-9;
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Conditioning probabilities below this are rejected.
pub const MIN_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn index(self) -> u8 {
        self as u8
    }

    fn from_index(i: u8) -> Self {
        Self::ALL[i as usize]
    }

    /// Matrix in the `(g, e)` basis.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    /// `⟨s|P|s'⟩` with `s, s' ∈ {0: +, 1: −}`.
    pub fn branch_element(self, s: usize, s_prime: usize) -> C64 {
        match (self, s, s_prime) {
            (Pauli::I, a, b) if a == b => ONE,
            (Pauli::X, 0, 0) => ONE,
            (Pauli::X, 1, 1) => -ONE,
            (Pauli::Y, 0, 1) => I,
            (Pauli::Y, 1, 0) => -I,
            (Pauli::Z, a, b) if a != b => ONE,
            _ => ZERO,
        }
    }
}

/// Computational basis outcome of a qubit measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    G,
    E,
}

impl Outcome {
    pub fn index(self) -> usize {
        match self {
            Outcome::G => 0,
            Outcome::E => 1,
        }
    }

    /// `⟨f|σ₃|f⟩`
    fn z_sign(self) -> f64 {
        match self {
            Outcome::G => 1.0,
            Outcome::E => -1.0,
        }
    }
}

impl core::fmt::Display for Outcome {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Outcome::G => "g",
            Outcome::E => "e",
        })
    }
}

impl core::str::FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" | "G" => Ok(Outcome::G),
            "e" | "E" => Ok(Outcome::E),
            _ => Err(Error::InvalidParameter("outcome must be g or e")),
        }
    }
}

/// Tensor product of Paulis over up to two qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliLabel {
    qubits: u8,
    code: u8,
}

impl PauliLabel {
    pub fn new(paulis: &[Pauli]) -> Self {
        assert!((1..=2).contains(&paulis.len()), "1 or 2 qubits supported");
        let code = paulis.iter().fold(0u8, |acc, p| acc * 4 + p.index());
        Self {
            qubits: paulis.len() as u8,
            code,
        }
    }

    pub fn identity(qubits: usize) -> Self {
        Self::new(&[Pauli::I, Pauli::I][..qubits])
    }

    pub fn qubits(self) -> usize {
        self.qubits as usize
    }

    pub fn get(self, qubit: usize) -> Pauli {
        let shift = (self.qubits() - 1 - qubit) * 2;
        Pauli::from_index((self.code >> shift) & 3)
    }

    pub fn paulis(self) -> impl Iterator<Item = Pauli> {
        (0..self.qubits()).map(move |q| self.get(q))
    }

    pub fn all(qubits: usize) -> impl Iterator<Item = PauliLabel> {
        (0..4u8.pow(qubits as u32)).map(move |code| PauliLabel {
            qubits: qubits as u8,
            code,
        })
    }

    /// Label with `qubit` removed.
    fn without(self, qubit: usize) -> Self {
        let rest: Vec<Pauli> = (0..self.qubits())
            .filter(|&q| q != qubit)
            .map(|q| self.get(q))
            .collect();
        Self::new(&rest)
    }

    /// Matrix element `⟨i|P|j⟩` over the full qubit register.
    pub fn element(self, i: usize, j: usize) -> C64 {
        let n = self.qubits();
        (0..n).fold(ONE, |acc, q| {
            let bit = n - 1 - q;
            let m = self.get(q).matrix();
            acc * m[(i >> bit) & 1][(j >> bit) & 1]
        })
    }
}

/// Qubit-operator-valued phase-space function.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerMatrix {
    qubits: usize,
    modes: usize,
    components: BTreeMap<PauliLabel, GaussianSum>,
}

impl WignerMatrix {
    pub fn new(qubits: usize, modes: usize) -> Self {
        assert!((1..=2).contains(&qubits), "1 or 2 qubits supported");
        Self {
            qubits,
            modes,
            components: BTreeMap::new(),
        }
    }

    /// `|g…g⟩⟨g…g| ⊗ f`.
    pub fn ground(qubits: usize, f: &GaussianSum) -> Self {
        let mut w = Self::new(qubits, f.modes());
        let weight = C64::new(0.5f64.powi(qubits as i32), 0.0);
        // |g⟩⟨g| = (1 + σ₃)/2 per qubit
        for label in PauliLabel::all(qubits) {
            if label.paulis().all(|p| matches!(p, Pauli::I | Pauli::Z)) {
                w.set(label, f.scale(weight));
            }
        }
        w
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn set(&mut self, label: PauliLabel, value: GaussianSum) {
        assert_eq!(label.qubits(), self.qubits);
        assert_eq!(value.modes(), self.modes);
        if value.is_empty() {
            self.components.remove(&label);
        } else {
            self.components.insert(label, value);
        }
    }

    pub fn component(&self, label: PauliLabel) -> Option<&GaussianSum> {
        self.components.get(&label)
    }

    pub fn components(&self) -> impl Iterator<Item = (PauliLabel, &GaussianSum)> {
        self.components.iter().map(|(k, v)| (*k, v))
    }

    /// Pauli coefficients `c_P` evaluated at a phase-space point.
    pub fn coefficients_at(&self, point: &[C64]) -> BTreeMap<PauliLabel, C64> {
        self.map_components(|s| Ok(s.evaluate(point))).expect("evaluation is infallible")
    }

    /// Applies a scalar functional to every Pauli coefficient.
    pub fn map_components(
        &self,
        mut f: impl FnMut(&GaussianSum) -> Result<C64>,
    ) -> Result<BTreeMap<PauliLabel, C64>> {
        let mut out = BTreeMap::new();
        for (label, sum) in &self.components {
            out.insert(*label, f(sum)?);
        }
        Ok(out)
    }

    /// Qubit-space matrix `W_{ij}(point)` in the `(g, e)` basis, row-major.
    pub fn matrix_at(&self, point: &[C64]) -> Vec<Vec<C64>> {
        assemble(self.qubits, &self.coefficients_at(point))
    }

    /// Qubit trace `Σ_i W_ii`, a phase-space function.
    pub fn trace(&self) -> GaussianSum {
        match self.component(PauliLabel::identity(self.qubits)) {
            Some(s) => s.scale(C64::new(self.dim() as f64, 0.0)),
            None => GaussianSum::zero(self.modes),
        }
    }

    /// `∫ Tr W`; equals 1 for an unconditioned state.
    pub fn norm(&self) -> Result<f64> {
        Ok(self.trace().integrate_full()?.re)
    }

    /// Projects one qubit onto `outcome`, renormalising the remainder.
    ///
    /// Returns the conditioned Wigner function and the outcome probability.
    /// For a single-qubit matrix the result is a scalar phase-space function.
    pub fn project_qubit(&self, outcome: Outcome, qubit: usize) -> Result<(Projected, f64)> {
        assert!(qubit < self.qubits);
        // ⟨f|P|f⟩ is 1 for P = 1, ±1 for σ₃ and 0 otherwise
        let sign = C64::new(outcome.z_sign(), 0.0);
        let mut reduced: BTreeMap<PauliLabel, GaussianSum> = BTreeMap::new();
        let mut scalar = GaussianSum::zero(self.modes);
        for (label, sum) in &self.components {
            let weight = match label.get(qubit) {
                Pauli::I => ONE,
                Pauli::Z => sign,
                _ => continue,
            };
            if self.qubits == 1 {
                scalar.add_scaled(sum, weight);
            } else {
                reduced
                    .entry(label.without(qubit))
                    .or_insert_with(|| GaussianSum::zero(self.modes))
                    .add_scaled(sum, weight);
            }
        }
        if self.qubits == 1 {
            let p = scalar.integrate_full()?.re;
            check_probability(p)?;
            return Ok((Projected::Scalar(scalar.scale(C64::new(1.0 / p, 0.0))), p));
        }
        let mut w = Self::new(self.qubits - 1, self.modes);
        for (label, sum) in reduced {
            w.set(label, sum);
        }
        let p = w.norm()?;
        check_probability(p)?;
        let inv = C64::new(1.0 / p, 0.0);
        w.components.values_mut().for_each(|s| *s = s.scale(inv));
        Ok((Projected::Matrix(w), p))
    }

    /// Blocks `⟨s|W|s'⟩` in the σ₁ eigenbasis.
    pub fn to_branches(&self) -> BranchMatrix {
        let mut b = BranchMatrix::zero(self.qubits, self.modes);
        for idx in 0..b.blocks.len() {
            let (rows, cols) = b.split(idx);
            for (label, sum) in &self.components {
                let w = (0..self.qubits).fold(ONE, |acc, q| {
                    acc * label.get(q).branch_element(rows[q], cols[q])
                });
                b.blocks[idx].add_scaled(sum, w);
            }
        }
        b
    }

    /// Convenience for the single-qubit case.
    pub fn to_normal_modes(&self) -> NormalModeVector {
        assert_eq!(self.qubits, 1, "normal modes are defined for one qubit");
        NormalModeVector::from_branches(&self.to_branches())
    }

    pub fn prune(&mut self, eps: f64) {
        self.components.values_mut().for_each(|s| *s = s.prune(eps));
        self.components.retain(|_, s| !s.is_empty());
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p < MIN_PROBABILITY {
        Err(Error::ZeroProbability(p))
    } else {
        Ok(())
    }
}

/// Output of [`WignerMatrix::project_qubit`].
#[derive(Debug, Clone, PartialEq)]
pub enum Projected {
    Scalar(GaussianSum),
    Matrix(WignerMatrix),
}

impl Projected {
    pub fn into_scalar(self) -> Option<GaussianSum> {
        match self {
            Projected::Scalar(s) => Some(s),
            Projected::Matrix(_) => None,
        }
    }

    pub fn into_matrix(self) -> Option<WignerMatrix> {
        match self {
            Projected::Matrix(m) => Some(m),
            Projected::Scalar(_) => None,
        }
    }
}

/// `Σ_P c_P P` as a dense `2^q × 2^q` matrix.
pub fn assemble(qubits: usize, coeffs: &BTreeMap<PauliLabel, C64>) -> Vec<Vec<C64>> {
    let dim = 1 << qubits;
    let mut m = alloc::vec![alloc::vec![ZERO; dim]; dim];
    for (label, c) in coeffs {
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry += c * label.element(i, j);
            }
        }
    }
    m
}

/// Wigner matrix blocks in the σ₁ eigenbasis, `B[s, s'] = ⟨s|W|s'⟩`.
///
/// Block index: for qubit `q` (most significant first) the pair `(s_q, s'_q)`
/// contributes the base-4 digit `2·s_q + s'_q`, with `0 = +` and `1 = −`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchMatrix {
    qubits: usize,
    modes: usize,
    pub blocks: Vec<GaussianSum>,
}

impl BranchMatrix {
    pub fn zero(qubits: usize, modes: usize) -> Self {
        Self {
            qubits,
            modes,
            blocks: (0..4usize.pow(qubits as u32)).map(|_| GaussianSum::zero(modes)).collect(),
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `(s, s')` per qubit for a block index.
    pub fn split(&self, idx: usize) -> (Vec<usize>, Vec<usize>) {
        let mut rows = alloc::vec![0; self.qubits];
        let mut cols = alloc::vec![0; self.qubits];
        for q in 0..self.qubits {
            let digit = (idx >> (2 * (self.qubits - 1 - q))) & 3;
            rows[q] = digit >> 1;
            cols[q] = digit & 1;
        }
        (rows, cols)
    }

    pub fn to_wigner(&self) -> WignerMatrix {
        let mut w = WignerMatrix::new(self.qubits, self.modes);
        let norm = C64::new(0.5f64.powi(self.qubits as i32), 0.0);
        for label in PauliLabel::all(self.qubits) {
            let mut sum = GaussianSum::zero(self.modes);
            for (idx, block) in self.blocks.iter().enumerate() {
                let (rows, cols) = self.split(idx);
                // c_P = 2^{-q} Σ ⟨s'|P|s⟩ B[s, s']
                let w = (0..self.qubits).fold(ONE, |acc, q| {
                    acc * label.get(q).branch_element(cols[q], rows[q])
                });
                if w != ZERO {
                    sum.add_scaled(block, w * norm);
                }
            }
            w.set(label, sum.prune(DEFAULT_PRUNE_EPS));
        }
        w
    }
}

/// Single-qubit normal modes,
/// `W = ¼[v₁(1+σ₁) + v₂(1−σ₁) + v₃(σ₂−iσ₃) + v₄(σ₂+iσ₃)]`.
///
/// In terms of σ₁-basis blocks: `B₊₊ = v₁/2`, `B₋₋ = v₂/2`,
/// `B₊₋ = i v₄/2`, `B₋₊ = −i v₃/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeVector {
    pub v: [GaussianSum; 4],
}

impl NormalModeVector {
    pub fn from_branches(b: &BranchMatrix) -> Self {
        assert_eq!(b.qubits(), 1);
        let two = C64::new(2.0, 0.0);
        Self {
            v: [
                b.blocks[0].scale(two),
                b.blocks[3].scale(two),
                b.blocks[2].scale(2.0 * I),
                b.blocks[1].scale(-2.0 * I),
            ],
        }
    }

    pub fn to_branches(&self) -> BranchMatrix {
        let mut b = BranchMatrix::zero(1, self.v[0].modes());
        let half = C64::new(0.5, 0.0);
        b.blocks[0] = self.v[0].scale(half);
        b.blocks[3] = self.v[1].scale(half);
        b.blocks[1] = self.v[3].scale(0.5 * I);
        b.blocks[2] = self.v[2].scale(-0.5 * I);
        b
    }

    pub fn to_wigner(&self) -> WignerMatrix {
        self.to_branches().to_wigner()
    }

    pub fn evaluate(&self, point: &[C64]) -> [C64; 4] {
        [0, 1, 2, 3].map(|j| self.v[j].evaluate(point))
    }
}

/// Normalised two-qubit density matrix in the `(gg, ge, eg, ee)` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4<C64>,
}

impl TwoQubitState {
    /// Validates and normalises `m`, returning the state and its trace.
    ///
    /// Hermiticity is checked against `1e-10` relative to the trace and
    /// eigenvalues down to `−1e-9` are clipped to zero.
    pub fn from_matrix(m: Matrix4<C64>) -> Result<(Self, f64)> {
        let trace = m.trace().re;
        check_probability(trace)?;
        let dev = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > HERMITICITY_TOL * trace.max(1.0) {
            return Err(Error::NonHermitian(dev));
        }
        let herm = (m + m.adjoint()) * C64::new(0.5 / trace, 0.0);
        let eig = herm.symmetric_eigen();
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -POSITIVITY_TOL {
            return Err(Error::NonPositive(min));
        }
        let rho = if min < 0.0 {
            let clipped = eig.eigenvalues.map(|e| C64::new(e.max(0.0), 0.0));
            let v = &eig.eigenvectors;
            let r = v * Matrix4::from_diagonal(&clipped) * v.adjoint();
            let t = r.trace().re;
            r * C64::new(1.0 / t, 0.0)
        } else {
            herm
        };
        Ok((Self { rho }, trace))
    }

    /// `ρ = Σ_P c_P P_A ⊗ P_B`, normalised.
    pub fn from_pauli(coeffs: &BTreeMap<PauliLabel, C64>) -> Result<(Self, f64)> {
        let m = assemble(2, coeffs);
        Self::from_matrix(Matrix4::from_fn(|i, j| m[i][j]))
    }

    pub fn pure(psi: [C64; 4]) -> Self {
        let v = nalgebra::Vector4::from(psi);
        let n = v.norm_squared();
        Self {
            rho: v * v.adjoint() * C64::new(1.0 / n, 0.0),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            rho: Matrix4::identity() * C64::new(0.25, 0.0),
        }
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.rho
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let e = self.rho.symmetric_eigen().eigenvalues;
        [e[0], e[1], e[2], e[3]]
    }

    /// Pauli coefficients `Tr(P ρ)/4`.
    pub fn pauli_coefficients(&self) -> BTreeMap<PauliLabel, C64> {
        let mut out = BTreeMap::new();
        for label in PauliLabel::all(2) {
            let mut c = ZERO;
            for i in 0..4 {
                for j in 0..4 {
                    c += label.element(j, i) * self.rho[(i, j)];
                }
            }
            out.insert(label, c * 0.25);
        }
        out
    }

    /// `U ρ U†` for a local unitary `U = U_A ⊗ U_B`.
    pub fn conjugate_local(&self, ua: [[C64; 2]; 2], ub: [[C64; 2]; 2]) -> Self {
        let u = Matrix4::from_fn(|i, j| ua[i >> 1][j >> 1] * ub[i & 1][j & 1]);
        Self {
            rho: u * self.rho * u.adjoint(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::GaussianForm;

    fn approx(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn pauli_label_roundtrip() {
        let l = PauliLabel::new(&[Pauli::Y, Pauli::Z]);
        assert_eq!(l.get(0), Pauli::Y);
        assert_eq!(l.get(1), Pauli::Z);
        assert_eq!(PauliLabel::all(2).count(), 16);
        // σ₂⊗σ₃ ⟨ge|·|ee⟩ = ⟨g|σ₂|e⟩⟨e|σ₃|e⟩ = (−i)(−1)
        assert!(approx(l.element(1, 3), I, 1e-15));
    }

    #[test]
    fn branch_elements_match_matrices() {
        let s2 = core::f64::consts::FRAC_1_SQRT_2;
        let plus = [s2, s2];
        let minus = [s2, -s2];
        let basis = [plus, minus];
        for p in Pauli::ALL {
            let m = p.matrix();
            for s in 0..2 {
                for sp in 0..2 {
                    let mut v = ZERO;
                    for i in 0..2 {
                        for j in 0..2 {
                            v += basis[s][i] * m[i][j] * basis[sp][j];
                        }
                    }
                    assert!(approx(v, p.branch_element(s, sp), 1e-15), "{p:?} {s} {sp}");
                }
            }
        }
    }

    #[test]
    fn pauli_commutator_identities() {
        // [σ₁, σ₂ ± iσ₃] = ±2(σ₂ ± iσ₃), {σ₁, 1 ± σ₁} = ±2(1 ± σ₁)
        let mul = |a: [[C64; 2]; 2], b: [[C64; 2]; 2]| {
            let mut r = [[ZERO; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        r[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
            r
        };
        let lin = |a: [[C64; 2]; 2], ca: C64, b: [[C64; 2]; 2], cb: C64| {
            let mut r = [[ZERO; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] = ca * a[i][j] + cb * b[i][j];
                }
            }
            r
        };
        let (one, s1, s2, s3) = (
            Pauli::I.matrix(),
            Pauli::X.matrix(),
            Pauli::Y.matrix(),
            Pauli::Z.matrix(),
        );
        for sign in [1.0, -1.0] {
            let m = lin(s2, ONE, s3, I * sign);
            let comm = lin(mul(s1, m), ONE, mul(m, s1), -ONE);
            let n = lin(one, ONE, s1, C64::new(sign, 0.0));
            let anti = lin(mul(s1, n), ONE, mul(n, s1), ONE);
            for i in 0..2 {
                for j in 0..2 {
                    assert!(approx(comm[i][j], 2.0 * sign * m[i][j], 1e-15));
                    assert!(approx(anti[i][j], 2.0 * sign * n[i][j], 1e-15));
                }
            }
        }
    }

    #[test]
    fn ground_state_normal_modes() {
        let wt = GaussianSum::single(GaussianForm::thermal(0.8));
        let w = WignerMatrix::ground(1, &wt);
        let nm = w.to_normal_modes();
        let a = [C64::new(0.3, -0.2)];
        let t = wt.evaluate(&a);
        let v = nm.evaluate(&a);
        assert!(approx(v[0], t, 1e-14));
        assert!(approx(v[1], t, 1e-14));
        assert!(approx(-I * v[2], t, 1e-14));
        assert!(approx(I * v[3], t, 1e-14));
        let back = nm.to_wigner();
        for label in PauliLabel::all(1) {
            let x = back.component(label).map_or(ZERO, |s| s.evaluate(&a));
            let y = w.component(label).map_or(ZERO, |s| s.evaluate(&a));
            assert!(approx(x, y, 1e-14));
        }
    }

    #[test]
    fn maximally_mixed_normal_modes() {
        let wt = GaussianSum::single(GaussianForm::thermal(0.6));
        let mut w = WignerMatrix::new(1, 1);
        w.set(PauliLabel::identity(1), wt.scale(C64::new(0.5, 0.0)));
        let v = w.to_normal_modes().evaluate(&[C64::new(0.1, 0.4)]);
        let t = wt.evaluate(&[C64::new(0.1, 0.4)]);
        assert!(approx(v[0], t, 1e-14) && approx(v[1], t, 1e-14));
        assert!(v[2].norm() < 1e-15 && v[3].norm() < 1e-15);
    }

    #[test]
    fn projection_of_ground_state() {
        let wt = GaussianSum::single(GaussianForm::thermal(0.8));
        let w = WignerMatrix::ground(1, &wt);
        let (f, p) = w.project_qubit(Outcome::G, 0).unwrap();
        assert!((p - 1.0).abs() < 1e-14);
        let f = f.into_scalar().unwrap();
        assert!(approx(f.evaluate(&[C64::new(0.2, 0.1)]), wt.evaluate(&[C64::new(0.2, 0.1)]), 1e-14));
        assert!(matches!(w.project_qubit(Outcome::E, 0), Err(Error::ZeroProbability(_))));
    }

    #[test]
    fn identity_coefficient_gives_maximally_mixed() {
        let mut c = BTreeMap::new();
        c.insert(PauliLabel::identity(2), ONE);
        let (rho, tr) = TwoQubitState::from_pauli(&c).unwrap();
        assert!((tr - 4.0).abs() < 1e-15);
        assert!((rho.matrix() - TwoQubitState::maximally_mixed().matrix()).norm() < 1e-15);
    }

    #[test]
    fn bell_state_pauli_roundtrip() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let psi = TwoQubitState::pure([ZERO, C64::new(s, 0.0), C64::new(s, 0.0), ZERO]);
        let (back, tr) = TwoQubitState::from_pauli(&psi.pauli_coefficients()).unwrap();
        assert!((tr - 1.0).abs() < 1e-14);
        assert!((back.matrix() - psi.matrix()).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_positive_states() {
        let mut m = Matrix4::<C64>::zeros();
        m[(0, 0)] = C64::new(1.2, 0.0);
        m[(3, 3)] = C64::new(-0.2, 0.0);
        assert!(matches!(TwoQubitState::from_matrix(m), Err(Error::NonPositive(_))));
        m[(3, 3)] = C64::new(-1e-11, 0.0);
        let (s, _) = TwoQubitState::from_matrix(m).unwrap();
        assert!(s.eigenvalues().iter().all(|&e| e >= -1e-15));
    }

    #[test]
    fn two_qubit_ground_projection() {
        let wt = GaussianForm::thermal(0.7);
        let f = GaussianSum::product(alloc::vec![wt, wt]);
        let w = WignerMatrix::ground(2, &f);
        assert!((w.norm().unwrap() - 1.0).abs() < 1e-14);
        let (proj, p) = w.project_qubit(Outcome::G, 1).unwrap();
        assert!((p - 1.0).abs() < 1e-14);
        let m = proj.into_matrix().unwrap();
        assert_eq!(m.qubits(), 1);
        let mat = m.matrix_at(&[C64::new(0.1, 0.0), C64::new(0.0, 0.2)]);
        let val = f.evaluate(&[C64::new(0.1, 0.0), C64::new(0.0, 0.2)]);
        assert!(approx(mat[0][0], val, 1e-14) && mat[1][1].norm() < 1e-15);
    }

    #[test]
    fn branches_roundtrip_two_qubits() {
        let wt = GaussianForm::thermal(0.7);
        let f = GaussianSum::product(alloc::vec![wt, wt.shift(C64::new(0.2, 0.3))]);
        let w = WignerMatrix::ground(2, &f);
        let back = w.to_branches().to_wigner();
        let pt = [C64::new(0.3, 0.1), C64::new(-0.2, 0.5)];
        let (a, b) = (w.matrix_at(&pt), back.matrix_at(&pt));
        for i in 0..4 {
            for j in 0..4 {
                assert!(approx(a[i][j], b[i][j], 1e-14));
            }
        }
        // |gg⟩⟨gg| has every σ₁-basis block equal to ¼ f
        let br = w.to_branches();
        for blk in &br.blocks {
            assert!(approx(blk.evaluate(&pt), 0.25 * f.evaluate(&pt), 1e-14));
        }
    }
}
