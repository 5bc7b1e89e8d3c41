//! Truncated Fock-space oracle: density matrices of qubits ⊗ oscillators,
//! fixed-step RK4 integration of the master equation, and Wigner / parity /
//! momentum read-out, all independent of the Gaussian algebra.
//!
//! Basis order: qubits first (most significant, `g = 0`, `e = 1`), then the
//! modes, each truncated to `cutoff` levels.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::evolution::SystemParams;
use crate::pauli_wigner::{Outcome, Pauli, MIN_PROBABILITY};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Cutoff that keeps a thermal state displaced by up to `max_displacement`
/// well inside the ladder: mean plus eight standard deviations of the
/// photon number, plus a margin.
pub fn suggested_cutoff(temperature: f64, max_displacement: f64) -> usize {
    let n = crate::evolution::thermal_occupation(temperature);
    let d2 = max_displacement * max_displacement;
    let mean = n + d2;
    let sd = (n * (n + 1.0) + d2 * (2.0 * n + 1.0)).sqrt();
    ((mean + 8.0 * sd).ceil() as usize + 12).max(16)
}

/// Population allowed in the top two levels of any mode.
pub const TAIL_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub qubits: usize,
    pub modes: usize,
    pub cutoff: usize,
}

impl FockSpace {
    pub fn new(qubits: usize, modes: usize, cutoff: usize) -> Self {
        assert!(cutoff >= 3, "cutoff too small");
        Self { qubits, modes, cutoff }
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn mode_dim(&self) -> usize {
        self.cutoff.pow(self.modes as u32)
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.mode_dim()
    }

    /// Splits a basis index into the qubit index and the per-mode levels.
    pub fn split(&self, idx: usize) -> (usize, Vec<usize>) {
        let md = self.mode_dim();
        let mut rest = idx % md;
        let mut levels = vec![0; self.modes];
        for k in (0..self.modes).rev() {
            levels[k] = rest % self.cutoff;
            rest /= self.cutoff;
        }
        (idx / md, levels)
    }

    fn slot_dims(&self) -> Vec<usize> {
        let mut d = vec![2; self.qubits];
        d.extend(core::iter::repeat(self.cutoff).take(self.modes));
        d
    }

    /// `⊗` of the given single-slot operators (identity elsewhere). Slots are
    /// numbered qubits first, then modes.
    pub fn embed(&self, factors: &[(usize, SparseOp)]) -> SparseOp {
        let mut entries = vec![(0usize, 0usize, ONE)];
        let mut dim = 1;
        for (slot, d) in self.slot_dims().into_iter().enumerate() {
            let f = factors
                .iter()
                .find(|(s, _)| *s == slot)
                .map(|(_, op)| op.clone())
                .unwrap_or_else(|| SparseOp::identity(d));
            assert_eq!(f.dim, d, "factor dimension mismatch");
            let mut next = Vec::with_capacity(entries.len() * f.entries.len());
            for &(i, j, v) in &entries {
                for &(k, l, w) in &f.entries {
                    next.push((i * d + k, j * d + l, v * w));
                }
            }
            entries = next;
            dim *= d;
        }
        SparseOp { dim, entries }
    }

    pub fn annihilation(&self, mode: usize) -> SparseOp {
        self.embed(&[(self.qubits + mode, SparseOp::annihilation(self.cutoff))])
    }

    pub fn pauli(&self, qubit: usize, p: Pauli) -> SparseOp {
        let m = p.matrix();
        let mut entries = Vec::new();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v != ZERO {
                    entries.push((i, j, *v));
                }
            }
        }
        self.embed(&[(qubit, SparseOp { dim: 2, entries })])
    }
}

/// Sparse square operator as `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, ONE)).collect(),
        }
    }

    pub fn annihilation(cutoff: usize) -> Self {
        Self {
            dim: cutoff,
            entries: (1..cutoff).map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0))).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, v * c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Self { dim: self.dim, entries }.compress()
    }

    /// Merges duplicate positions and drops zeros.
    pub fn compress(mut self) -> Self {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut out: Vec<(usize, usize, C64)> = Vec::with_capacity(self.entries.len());
        for (i, j, v) in self.entries {
            match out.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => out.push((i, j, v)),
            }
        }
        out.retain(|e| e.2 != ZERO);
        Self {
            dim: self.dim,
            entries: out,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim];
        for &(k, l, w) in &other.entries {
            rows[k].push((l, w));
        }
        let mut entries = Vec::new();
        for &(i, k, v) in &self.entries {
            for &(l, w) in &rows[k] {
                entries.push((i, l, v * w));
            }
        }
        Self { dim: self.dim, entries }.compress()
    }

    /// `self · m` for a dense `m`.
    pub fn apply(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, m.ncols());
        for c in 0..m.ncols() {
            let src = m.column(c);
            let mut dst = out.column_mut(c);
            for &(i, j, v) in &self.entries {
                dst[i] += v * src[j];
            }
        }
        out
    }

    /// `m · self†` for a dense `m`, as column updates.
    pub fn apply_right_adjoint(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let n = m.nrows();
        let mut out = DMatrix::zeros(n, self.dim);
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for &(i, j, v) in &self.entries {
            let w = v.conj();
            for (d, s) in dst[i * n..(i + 1) * n].iter_mut().zip(&src[j * n..(j + 1) * n]) {
                *d += w * s;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }
}

/// Density matrix on a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    pub space: FockSpace,
    pub rho: DMatrix<C64>,
}

/// Thermal populations `(1 − q) qⁿ`, `q = n̄/(n̄ + 1)`, renormalised on the
/// truncated ladder.
pub fn thermal_populations(occupation: f64, cutoff: usize) -> Vec<f64> {
    let q = occupation / (occupation + 1.0);
    let mut p: Vec<f64> = (0..cutoff).map(|n| q.powi(n as i32)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    p
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

impl FockDensityMatrix {
    /// All qubits in `g`, every mode thermal at `temperature`.
    pub fn thermal(space: FockSpace, temperature: f64) -> Self {
        let n = crate::evolution::thermal_occupation(temperature);
        let pops = thermal_populations(n, space.cutoff);
        let mode = DMatrix::from_fn(space.cutoff, space.cutoff, |i, j| {
            if i == j {
                C64::new(pops[i], 0.0)
            } else {
                ZERO
            }
        });
        let mut qubit = DMatrix::zeros(space.qubit_dim(), space.qubit_dim());
        qubit[(0, 0)] = ONE;
        let mut rho = qubit;
        for _ in 0..space.modes {
            rho = kron(&rho, &mode);
        }
        Self { space, rho }
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// Population of levels `≥ cutoff − 2` in `mode`.
    pub fn tail_population(&self, mode: usize) -> f64 {
        let n = self.space.cutoff;
        (0..self.space.dim())
            .filter(|&i| self.space.split(i).1[mode] >= n - 2)
            .map(|i| self.rho[(i, i)].re)
            .sum()
    }

    pub fn check_tail(&self) -> Result<()> {
        for k in 0..self.space.modes {
            let tail = self.tail_population(k);
            if tail > TAIL_TOLERANCE {
                return Err(Error::TruncationOverflow {
                    tail,
                    cutoff: self.space.cutoff,
                });
            }
        }
        Ok(())
    }

    /// Prepends `extra` qubits in `g`.
    pub fn with_ground_qubits(&self, extra: usize) -> Self {
        let d = 1 << extra;
        let mut g = DMatrix::zeros(d, d);
        g[(0, 0)] = ONE;
        Self {
            space: FockSpace::new(self.space.qubits + extra, self.space.modes, self.space.cutoff),
            rho: kron(&g, &self.rho),
        }
    }

    /// Conditions `qubit` on `outcome`; returns the normalised remainder and
    /// the outcome probability.
    pub fn project_qubit(&self, qubit: usize, outcome: Outcome) -> Result<(Self, f64)> {
        let s = self.space;
        let new_space = FockSpace::new(s.qubits - 1, s.modes, s.cutoff);
        let md = s.mode_dim();
        let shift = s.qubits - 1 - qubit;
        let lift = |q: usize| {
            let high = q >> shift;
            let low = q & ((1 << shift) - 1);
            (((high << 1) | outcome.index()) << shift) | low
        };
        let rho = DMatrix::from_fn(new_space.dim(), new_space.dim(), |i, j| {
            let (qi, mi) = (i / md, i % md);
            let (qj, mj) = (j / md, j % md);
            self.rho[(lift(qi) * md + mi, lift(qj) * md + mj)]
        });
        let p = rho.trace().re;
        if p < MIN_PROBABILITY {
            return Err(Error::ZeroProbability(p));
        }
        Ok((
            Self {
                space: new_space,
                rho: rho / C64::new(p, 0.0),
            },
            p,
        ))
    }

    /// Qubit-valued Wigner function `(2/π)^m Tr_modes[ρ Π_k D_k(α_k) Π̂_k D_k(α_k)†]`.
    pub fn wigner(&self, point: &[C64]) -> DMatrix<C64> {
        let s = self.space;
        assert_eq!(point.len(), s.modes);
        let n = s.cutoff;
        // G_k[ν][μ] = ⟨ν|D(2α_k)|μ⟩ (−1)^μ
        let g: Vec<DMatrix<C64>> = point
            .iter()
            .map(|&a| {
                let mut d = displacement_matrix(n, 2.0 * a);
                for mu in (1..n).step_by(2) {
                    d.column_mut(mu).neg_mut();
                }
                d
            })
            .collect();
        let weight = |mu: &[usize], nu: &[usize]| -> C64 {
            mu.iter().zip(nu).zip(&g).fold(ONE, |acc, ((&m, &v), gk)| acc * gk[(v, m)])
        };
        self.mode_contraction(weight) * C64::new((2.0 / PI).powi(s.modes as i32), 0.0)
    }

    /// `M_ij = Σ_{μν} ρ[(i,μ),(j,ν)] w(μ, ν)` over mode multi-indices.
    fn mode_contraction(&self, weight: impl Fn(&[usize], &[usize]) -> C64) -> DMatrix<C64> {
        let s = self.space;
        let md = s.mode_dim();
        let levels: Vec<Vec<usize>> = (0..md).map(|i| s.split(i).1).collect();
        let mut w = DMatrix::zeros(md, md);
        for mu in 0..md {
            for nu in 0..md {
                w[(mu, nu)] = weight(&levels[mu], &levels[nu]);
            }
        }
        let qd = s.qubit_dim();
        DMatrix::from_fn(qd, qd, |i, j| {
            let mut acc = ZERO;
            for mu in 0..md {
                for nu in 0..md {
                    let wv = w[(mu, nu)];
                    if wv != ZERO {
                        acc += self.rho[(i * md + mu, j * md + nu)] * wv;
                    }
                }
            }
            acc
        })
    }

    /// Unnormalised qubit matrix for the parity outcomes `pi[k] = ±1`.
    pub fn parity_project(&self, pi: &[i8]) -> DMatrix<C64> {
        assert_eq!(pi.len(), self.space.modes);
        self.mode_contraction(|mu, nu| {
            let keep = mu == nu
                && mu
                    .iter()
                    .zip(pi)
                    .all(|(&m, &p)| (if m % 2 == 0 { 1 } else { -1 }) == p as i32);
            if keep {
                ONE
            } else {
                ZERO
            }
        })
    }

    /// Qubit-valued joint momentum density at `p` (eigenvalues of
    /// `(a − a†)/(2i)` per mode).
    pub fn momentum_density(&self, p: &[f64]) -> DMatrix<C64> {
        assert_eq!(p.len(), self.space.modes);
        let phi: Vec<Vec<C64>> = p.iter().map(|&pk| momentum_wavefunctions(self.space.cutoff, pk)).collect();
        self.mode_contraction(|mu, nu| {
            mu.iter()
                .zip(nu)
                .zip(&phi)
                .fold(ONE, |acc, ((&m, &v), f)| acc * f[m] * f[v].conj())
        })
    }

    /// Reduced qubit density matrix.
    pub fn qubit_marginal(&self) -> DMatrix<C64> {
        self.mode_contraction(|mu, nu| if mu == nu { ONE } else { ZERO })
    }
}

/// `⟨p|n⟩` for `n < cutoff`, with `P = (a − a†)/(2i)`.
pub fn momentum_wavefunctions(cutoff: usize, p: f64) -> Vec<C64> {
    // ψ_n(p) = 2^{1/4} h_n(√2 p), h_n the normalised Hermite functions
    let y = core::f64::consts::SQRT_2 * p;
    let mut h = vec![0.0; cutoff];
    h[0] = PI.powf(-0.25) * (-0.5 * y * y).exp();
    if cutoff > 1 {
        h[1] = core::f64::consts::SQRT_2 * y * h[0];
    }
    for n in 1..cutoff.saturating_sub(1) {
        let nf = n as f64;
        h[n + 1] = (2.0 / (nf + 1.0)).sqrt() * y * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
    }
    let norm = 2f64.powf(0.25);
    let mut phase = ONE;
    h.iter()
        .map(|&v| {
            let out = phase * (norm * v);
            phase *= -I;
            out
        })
        .collect()
}

/// `⟨n|D(β)|m⟩` for `n, m < cutoff`, from the associated-Laguerre form
/// of the matrix elements (exact, no truncation artefacts).
pub fn displacement_matrix(cutoff: usize, beta: C64) -> DMatrix<C64> {
    let x = beta.norm_sqr();
    let damp = (-0.5 * x).exp();
    let mut d = DMatrix::zeros(cutoff, cutoff);
    for k in 0..cutoff {
        // g_m = sqrt(m!/(m+k)!) L_m^{(k)}(x)
        let mut bk = ONE; // β^k / sqrt(k!)
        for j in 1..=k {
            bk *= beta / (j as f64).sqrt();
        }
        let bk_conj = {
            let mut v = ONE;
            for j in 1..=k {
                v *= -beta.conj() / (j as f64).sqrt();
            }
            v
        };
        let kf = k as f64;
        let (mut g_prev, mut g) = (0.0, 1.0);
        for m in 0..cutoff - k {
            d[(m + k, m)] = bk * (damp * g);
            if k > 0 {
                d[(m, m + k)] = bk_conj * (damp * g);
            }
            let mf = m as f64;
            let next = ((2.0 * mf + 1.0 + kf - x) * g - (mf * (mf + kf)).sqrt() * g_prev)
                / ((mf + 1.0) * (mf + 1.0 + kf)).sqrt();
            g_prev = g;
            g = next;
        }
    }
    d
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / C64::new(2f64.powi(s), 0.0);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
        if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// `D(β)` from [`expm`] on a ladder enlarged by `guard`, then cropped.
pub fn displacement_expm(cutoff: usize, beta: C64, guard: usize) -> DMatrix<C64> {
    let big = cutoff + guard;
    let a = SparseOp::annihilation(big).to_dense();
    let gen = a.adjoint() * beta - &a * beta.conj();
    expm(&gen).view((0, 0), (cutoff, cutoff)).into_owned()
}

/// Which mode couples to which qubit through `σ₁(a + a†)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coupling {
    pub qubit: usize,
    pub mode: usize,
}

/// `Σ_{pairs} σ₁(a + a†)` plus damping and dephasing as jump operators.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    h_eff: SparseOp,
    jumps: Vec<SparseOp>,
}

impl Lindbladian {
    pub fn new(space: FockSpace, params: &SystemParams, couplings: &[Coupling]) -> Self {
        let mut h = SparseOp {
            dim: space.dim(),
            entries: Vec::new(),
        };
        for c in couplings {
            let a = space.annihilation(c.mode);
            let x = a.add(&a.adjoint());
            h = h.add(&space.pauli(c.qubit, Pauli::X).mul(&x));
        }
        let n = params.occupation();
        let mut jumps = Vec::new();
        if params.kappa > 0.0 {
            for k in 0..space.modes {
                let a = space.annihilation(k);
                jumps.push(a.scale(C64::new((params.kappa * (n + 1.0)).sqrt(), 0.0)));
                if n > 0.0 {
                    jumps.push(a.adjoint().scale(C64::new((params.kappa * n).sqrt(), 0.0)));
                }
            }
        }
        if params.gamma > 0.0 {
            for q in 0..space.qubits {
                jumps.push(space.pauli(q, Pauli::X).scale(C64::new((0.5 * params.gamma).sqrt(), 0.0)));
            }
        }
        let mut h_eff = h;
        for l in &jumps {
            h_eff = h_eff.add(&l.adjoint().mul(l).scale(C64::new(0.0, -0.5)));
        }
        Self { h_eff, jumps }
    }

    /// `dρ/dt` for Hermitian `ρ`.
    pub fn rhs(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        // with A = ρ H_eff†: −i(H_eff ρ − ρ H_eff†) = −i(A† − A)
        let a = self.h_eff.apply_right_adjoint(rho);
        let mut out = (a.adjoint() - a) * -I;
        for l in &self.jumps {
            // L ρ L† = (ρ L†)† L†
            let b = l.apply_right_adjoint(rho);
            out += l.apply_right_adjoint(&b.adjoint());
        }
        out
    }

    /// Fixed-step RK4 from `rho0` over `t`.
    pub fn integrate(&self, rho0: &FockDensityMatrix, t: f64, dt: f64) -> Result<FockDensityMatrix> {
        if !(t >= 0.0 && dt > 0.0) {
            return Err(Error::InvalidParameter("time must be >= 0 and dt > 0"));
        }
        let steps = (t / dt).ceil() as usize;
        let h = if steps == 0 { 0.0 } else { t / steps as f64 };
        let mut rho = rho0.rho.clone();
        for _ in 0..steps {
            let k1 = self.rhs(&rho);
            let k2 = self.rhs(&(&rho + &k1 * C64::new(0.5 * h, 0.0)));
            let k3 = self.rhs(&(&rho + &k2 * C64::new(0.5 * h, 0.0)));
            let k4 = self.rhs(&(&rho + &k3 * C64::new(h, 0.0)));
            rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
        }
        let out = FockDensityMatrix {
            space: rho0.space,
            rho,
        };
        out.check_tail()?;
        Ok(out)
    }

    /// Integrates with `dt` and `dt/2`, halving further until the two agree
    /// to `tol` (max-abs on ρ) or `max_halvings` is reached.
    pub fn integrate_converged(
        &self,
        rho0: &FockDensityMatrix,
        t: f64,
        dt: f64,
        tol: f64,
        max_halvings: usize,
    ) -> Result<FockDensityMatrix> {
        let mut dt = dt;
        let mut coarse = self.integrate(rho0, t, dt)?;
        for _ in 0..max_halvings {
            dt *= 0.5;
            let fine = self.integrate(rho0, t, dt)?;
            let diff = (&fine.rho - &coarse.rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
            coarse = fine;
            if diff < tol {
                break;
            }
        }
        Ok(coarse)
    }
}

/// Exact decoherence-free evolution `Π_pairs exp(−iσ₁(a + a†)t)`.
pub fn unitary_evolve(rho0: &FockDensityMatrix, couplings: &[Coupling], t: f64) -> Result<FockDensityMatrix> {
    let s = rho0.space;
    let guard = 10;
    let mut u = DMatrix::<C64>::identity(s.dim(), s.dim());
    for c in couplings {
        // exp(−iσ₁ x t) = P₊ ⊗ D(−it) + P₋ ⊗ D(it)
        let half = C64::new(0.5, 0.0);
        let plus = DMatrix::from_row_slice(2, 2, &[half, half, half, half]);
        let minus = DMatrix::from_row_slice(2, 2, &[half, -half, -half, half]);
        let dm = displacement_matrix(s.cutoff + guard, C64::new(0.0, -t)).view((0, 0), (s.cutoff, s.cutoff)).into_owned();
        let dp = displacement_matrix(s.cutoff + guard, C64::new(0.0, t)).view((0, 0), (s.cutoff, s.cutoff)).into_owned();
        let dense = |m: &DMatrix<C64>| sparse_from_dense(m);
        let mode_slot = s.qubits + c.mode;
        let up = s
            .embed(&[(c.qubit, dense(&plus)), (mode_slot, dense(&dm))])
            .add(&s.embed(&[(c.qubit, dense(&minus)), (mode_slot, dense(&dp))]));
        u = up.apply(&u);
    }
    let out = FockDensityMatrix {
        space: s,
        rho: &u * &rho0.rho * u.adjoint(),
    };
    out.check_tail()?;
    Ok(out)
}

fn sparse_from_dense(m: &DMatrix<C64>) -> SparseOp {
    let mut entries = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != ZERO {
                entries.push((i, j, m[(i, j)]));
            }
        }
    }
    SparseOp { dim: m.nrows(), entries }
}

/// The full protocol in Fock space: entangling stage with one qubit coupled
/// to both modes at once, qubit measurement, then two fresh qubits for the
/// second stage. Returns the conditioned modes, the outcome probability and
/// the final state.
pub fn pipeline(
    params: &SystemParams,
    cutoff: usize,
    t1: f64,
    t2: f64,
    outcome: Outcome,
    dt: f64,
) -> Result<(FockDensityMatrix, f64, FockDensityMatrix)> {
    if params.interaction != crate::evolution::Interaction::Simultaneous {
        return Err(Error::InvalidParameter("the Fock pipeline models simultaneous interaction only"));
    }
    let s1 = FockSpace::new(1, 2, cutoff);
    let l1 = Lindbladian::new(
        s1,
        params,
        &[Coupling { qubit: 0, mode: 0 }, Coupling { qubit: 0, mode: 1 }],
    );
    let rho1 = l1.integrate(&FockDensityMatrix::thermal(s1, params.temperature), t1, dt)?;
    let (modes, prob) = rho1.project_qubit(0, outcome)?;
    let start = modes.with_ground_qubits(2);
    let l2 = Lindbladian::new(
        start.space,
        params,
        &[Coupling { qubit: 0, mode: 0 }, Coupling { qubit: 1, mode: 1 }],
    );
    let rho2 = l2.integrate(&start, t2, dt)?;
    Ok((modes, prob, rho2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn displacement_matches_expm() {
        for beta in [c(0.3, -0.2), c(1.1, 0.7), c(0.0, 2.0)] {
            let a = displacement_matrix(12, beta);
            let b = displacement_expm(12, beta, 40);
            assert!(max_abs(&(&a - &b)) < 1e-10, "{beta}");
        }
    }

    #[test]
    fn displacement_is_unitary_on_large_ladder() {
        let d = displacement_matrix(60, c(0.8, -0.5));
        let top = d.view((0, 0), (20, 20)).into_owned();
        let full = &d * d.adjoint();
        let id = DMatrix::<C64>::identity(20, 20);
        assert!(max_abs(&(full.view((0, 0), (20, 20)).into_owned() - id)) < 1e-10);
        assert!(top[(0, 0)].re > 0.0);
    }

    #[test]
    fn thermal_wigner_origin_and_parity() {
        for temp in [0.3, 1.0] {
            let s = FockSpace::new(0, 1, 40);
            let rho = FockDensityMatrix::thermal(s, temp);
            let n = crate::evolution::thermal_occupation(temp);
            let w = rho.wigner(&[ZERO])[(0, 0)].re;
            assert!((w - 1.0 / (PI * (n + 0.5))).abs() < 1e-10);
            let even = rho.parity_project(&[1])[(0, 0)].re;
            let odd = rho.parity_project(&[-1])[(0, 0)].re;
            assert!((even - odd - 1.0 / (2.0 * n + 1.0)).abs() < 1e-10);
            assert!((even - odd - 0.5 * PI * w).abs() < 1e-10);
        }
        // n = 1 ⇒ P(Π = +1) = 2/3
        let temp = 1.0 / 2f64.ln();
        let rho = FockDensityMatrix::thermal(FockSpace::new(0, 1, 60), temp);
        assert!((rho.parity_project(&[1])[(0, 0)].re - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn vacuum_wigner_two_truncations() {
        for n in [10, 20] {
            let rho = FockDensityMatrix::thermal(FockSpace::new(0, 1, n), 0.0);
            for a in [c(0.0, 0.0), c(0.4, -0.3), c(-0.9, 0.2)] {
                let w = rho.wigner(&[a])[(0, 0)].re;
                assert!((w - 2.0 / PI * (-2.0 * a.norm_sqr()).exp()).abs() < 1e-12);
            }
            assert!((rho.parity_project(&[1])[(0, 0)].re - 1.0).abs() < 1e-15);
        }
    }

    fn coherent(n: usize, alpha: C64) -> FockDensityMatrix {
        let d = displacement_matrix(n, alpha);
        let psi = d.column(0).into_owned();
        FockDensityMatrix {
            space: FockSpace::new(0, 1, n),
            rho: &psi * psi.adjoint(),
        }
    }

    #[test]
    fn coherent_state_peaks_at_amplitude() {
        let alpha = c(0.7, 1.2);
        let rho = coherent(40, alpha);
        let at = rho.wigner(&[alpha])[(0, 0)].re;
        assert!((at - 2.0 / PI).abs() < 1e-10);
        for d in [c(0.1, 0.0), c(0.0, -0.1), c(-0.2, 0.2)] {
            assert!(rho.wigner(&[alpha + d])[(0, 0)].re < at);
        }
        // momentum density is a Gaussian of variance 1/4 centred at Im α
        for p in [0.5, 1.2, 1.9] {
            let got = rho.momentum_density(&[p])[(0, 0)].re;
            let want = (2.0 / PI).sqrt() * (-2.0 * (p - alpha.im).powi(2)).exp();
            assert!((got - want).abs() < 1e-10, "{p} {got} {want}");
        }
    }

    #[test]
    fn stationary_without_coupling() {
        let s = FockSpace::new(0, 1, 30);
        let p = SystemParams::new(0.2, 0.0, 0.8).unwrap();
        let l = Lindbladian::new(s, &p, &[]);
        let rho0 = FockDensityMatrix::thermal(s, 0.8);
        let rho = l.integrate(&rho0, 2.0, 1e-2).unwrap();
        assert!(max_abs(&(&rho.rho - &rho0.rho)) < 1e-12);
    }

    #[test]
    fn ground_state_relaxes_to_thermal_occupation() {
        let s = FockSpace::new(0, 1, 30);
        let temp = 0.9;
        let p = SystemParams::new(0.3, 0.0, temp).unwrap();
        let l = Lindbladian::new(s, &p, &[]);
        let rho0 = FockDensityMatrix::thermal(s, 0.0);
        let t = 2.5;
        let rho = l.integrate(&rho0, t, 1e-3).unwrap();
        let mean: f64 = (0..30).map(|k| k as f64 * rho.rho[(k, k)].re).sum();
        // dn/dt = −κ(n − n̄)
        let nbar = p.occupation();
        let want = nbar * (1.0 - (-p.kappa * t).exp());
        assert!((mean - want).abs() < 1e-9, "{mean} {want}");
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rk4_matches_exact_unitary() {
        let s = FockSpace::new(1, 1, 24);
        let rho0 = FockDensityMatrix::thermal(s, 0.0);
        let p = SystemParams::ideal(0.0).unwrap();
        let cpl = [Coupling { qubit: 0, mode: 0 }];
        let l = Lindbladian::new(s, &p, &cpl);
        let a = l.integrate(&rho0, 0.8, 1e-3).unwrap();
        let b = unitary_evolve(&rho0, &cpl, 0.8).unwrap();
        assert!(max_abs(&(&a.rho - &b.rho)) < 1e-8);
    }

    #[test]
    fn suggested_cutoff_passes_tail_rule() {
        for (temp, t) in [(0.0, 2.0), (0.5, 2.0), (1.0, 3.0)] {
            let s = FockSpace::new(1, 1, suggested_cutoff(temp, t));
            let rho0 = FockDensityMatrix::thermal(s, temp);
            assert!(unitary_evolve(&rho0, &[Coupling { qubit: 0, mode: 0 }], t).is_ok());
        }
        assert!(suggested_cutoff(1.0, 3.0) <= 60);
    }

    #[test]
    fn truncation_overflow_detected() {
        let s = FockSpace::new(1, 1, 6);
        let rho0 = FockDensityMatrix::thermal(s, 0.0);
        let r = unitary_evolve(&rho0, &[Coupling { qubit: 0, mode: 0 }], 2.0);
        assert!(matches!(r, Err(Error::TruncationOverflow { .. })));
    }

    #[test]
    fn qubit_projection_probabilities_sum_to_one() {
        let s = FockSpace::new(1, 1, 20);
        let rho0 = FockDensityMatrix::thermal(s, 0.3);
        let rho = unitary_evolve(&rho0, &[Coupling { qubit: 0, mode: 0 }], 0.6).unwrap();
        let (_, pg) = rho.project_qubit(0, Outcome::G).unwrap();
        let (_, pe) = rho.project_qubit(0, Outcome::E).unwrap();
        assert!((pg + pe - 1.0).abs() < 1e-12);
        let parity: f64 = [1, -1].iter().map(|&p| rho.parity_project(&[p]).trace().re).sum();
        assert!((parity - 1.0).abs() < 1e-12);
    }
}
