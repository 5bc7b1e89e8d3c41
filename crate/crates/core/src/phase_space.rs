//! Exact algebra of complex Gaussian exponentials on phase space.
//!
//! A single-mode [`GaussianForm`] is `c·exp(q|α|² + uα + vα*)` with all four
//! coefficients complex. Products, affine shifts, multiplication by
//! `exp(uα + vα*)`, plane integrals, x-marginals and convolution against the
//! damping kernels all map forms to forms, so every analytic Wigner function
//! in this crate is a finite [`GaussianSum`] of per-mode products.
//!
//! Writing `α = x + ip`, a form reads
//! `c·exp(q(x² + p²) + (u + v)x + i(u − v)p)`. The two identities everything
//! else rests on are
//!
//! ```text
//! ∫ dx exp(q x² + b x)          = sqrt(π/−q) · exp(−b²/(4q))      (Re q < 0)
//! ∫ d²z exp(Q|z|² + U z + V z*) = (π/−Q) · exp(−U V / Q)          (Re Q < 0)
//! ```
//!
//! where `U` and `V` are independent complex numbers.
//!
//! Forms also carry an additive constant `offset` in the exponent, so that
//! far-shifted Gaussians (weights like `e^{−3000}`) combine with their
//! matching growth factors before anything is exponentiated.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Default relative peak-magnitude threshold below which terms are pruned.
pub const DEFAULT_PRUNE_EPS: f64 = 1e-14;

/// `coeff · exp(offset + quad·|α|² + lin_a·α + lin_astar·α*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianForm {
    pub coeff: C64,
    pub quad: C64,
    pub lin_a: C64,
    pub lin_astar: C64,
    pub offset: C64,
}

impl GaussianForm {
    pub const fn new(coeff: C64, quad: C64, lin_a: C64, lin_astar: C64) -> Self {
        Self {
            coeff,
            quad,
            lin_a,
            lin_astar,
            offset: ZERO,
        }
    }

    /// Multiplies by `exp(offset)` without forming the exponential.
    pub fn add_offset(&self, offset: C64) -> Self {
        Self {
            offset: self.offset + offset,
            ..*self
        }
    }

    pub const fn constant(coeff: C64) -> Self {
        Self::new(coeff, ZERO, ZERO, ZERO)
    }

    /// Thermal Wigner function `W_T(α) = exp(−|α|²/Δ)/(πΔ)`.
    pub fn thermal(delta: f64) -> Self {
        Self::new(
            C64::new(1.0 / (PI * delta), 0.0),
            C64::new(-1.0 / delta, 0.0),
            ZERO,
            ZERO,
        )
    }

    #[inline]
    pub fn exponent(&self, alpha: C64) -> C64 {
        self.offset + self.quad * alpha.norm_sqr() + self.lin_a * alpha + self.lin_astar * alpha.conj()
    }

    #[inline]
    pub fn evaluate(&self, alpha: C64) -> C64 {
        self.coeff * self.exponent(alpha).exp()
    }

    pub fn is_integrable(&self) -> bool {
        self.quad.re < 0.0
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            coeff: self.coeff * c,
            ..*self
        }
    }

    /// The form with its argument replaced by `α + λ`.
    pub fn shift(&self, lambda: C64) -> Self {
        let q = self.quad;
        let constant = q * lambda.norm_sqr() + self.lin_a * lambda + self.lin_astar * lambda.conj();
        Self {
            coeff: self.coeff,
            quad: q,
            lin_a: self.lin_a + q * lambda.conj(),
            lin_astar: self.lin_astar + q * lambda,
            offset: self.offset + constant,
        }
    }

    /// Multiplies by `c·exp(uα + vα*)`.
    pub fn multiply_exponential(&self, u: C64, v: C64, c: C64) -> Self {
        Self {
            coeff: self.coeff * c,
            lin_a: self.lin_a + u,
            lin_astar: self.lin_astar + v,
            ..*self
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            coeff: self.coeff * other.coeff,
            quad: self.quad + other.quad,
            lin_a: self.lin_a + other.lin_a,
            lin_astar: self.lin_astar + other.lin_astar,
            offset: self.offset + other.offset,
        }
    }

    fn require_integrable(&self) -> Result<()> {
        if self.is_integrable() {
            Ok(())
        } else {
            Err(Error::NonIntegrable(self.quad.re))
        }
    }

    /// `∫ d²α` over the whole plane (`d²α = dx dp`).
    pub fn integrate(&self) -> Result<C64> {
        let (pre, e) = self.integral_parts()?;
        Ok(pre * e.exp())
    }

    /// The plane integral as `prefactor · exp(exponent)`.
    pub fn integral_parts(&self) -> Result<(C64, C64)> {
        self.require_integrable()?;
        let q = self.quad;
        Ok((self.coeff * (PI / -q), self.offset - (self.lin_a * self.lin_astar) / q))
    }

    /// Integrates out `x = Re α`, leaving a Gaussian in `p = Im α`.
    pub fn marginal_x(&self) -> Result<MomentumGaussian> {
        self.require_integrable()?;
        let q = self.quad;
        let bx = self.lin_a + self.lin_astar;
        Ok(MomentumGaussian {
            coeff: self.coeff * (C64::new(PI, 0.0) / -q).sqrt(),
            quad: q,
            lin: C64::i() * (self.lin_a - self.lin_astar),
            offset: self.offset - (bx * bx) / (4.0 * q),
        })
    }

    /// Scaled Gaussian blur
    /// `g(w) = ∫ d²z exp(−|w − s z|²/σ²)/(πσ²) · f(z)`.
    ///
    /// With `D = s² − qσ²` the result is
    /// `(c/D)·exp((q/D)|w|² + (s u/D) w + (s v/D) w* + σ² u v/D)`, which stays
    /// finite as `σ² → 0` (where it reduces to `f(w/s)/s²`).
    pub fn blur(&self, scale: f64, variance: f64) -> Result<Self> {
        let q = self.quad;
        let d = scale * scale - q * variance;
        if variance > 0.0 && d.re <= 0.0 {
            return Err(Error::NonIntegrable(q.re - scale * scale / variance));
        }
        let (u, v) = (self.lin_a, self.lin_astar);
        Ok(Self {
            coeff: self.coeff / d,
            quad: q / d,
            lin_a: scale * u / d,
            lin_astar: scale * v / d,
            offset: self.offset + variance * u * v / d,
        })
    }

    /// `sup_α |f(α)|` for integrable forms, `+∞` otherwise.
    pub fn peak_magnitude(&self) -> f64 {
        self.log_peak().exp()
    }

    /// `ln sup_α |f(α)|`.
    pub fn log_peak(&self) -> f64 {
        if !self.is_integrable() {
            return f64::INFINITY;
        }
        // Re exponent = Re q (x² + p²) + bx·x + bp·p
        let bx = (self.lin_a + self.lin_astar).re;
        let bp = -(self.lin_a - self.lin_astar).im;
        self.coeff.norm().ln() + self.offset.re - (bx * bx + bp * bp) / (4.0 * self.quad.re)
    }
}

/// `coeff · exp(offset + quad·p² + lin·p)`, the x-marginal of a [`GaussianForm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGaussian {
    pub coeff: C64,
    pub quad: C64,
    pub lin: C64,
    pub offset: C64,
}

impl MomentumGaussian {
    #[inline]
    pub fn exponent(&self, p: f64) -> C64 {
        self.offset + self.quad * p * p + self.lin * p
    }

    #[inline]
    pub fn evaluate(&self, p: f64) -> C64 {
        self.coeff * self.exponent(p).exp()
    }

    pub fn integrate(&self) -> Result<C64> {
        let (pre, e) = self.integral_parts()?;
        Ok(pre * e.exp())
    }

    fn integral_parts(&self) -> Result<(C64, C64)> {
        if self.quad.re >= 0.0 {
            return Err(Error::NonIntegrable(self.quad.re));
        }
        let q = self.quad;
        Ok((
            self.coeff * (C64::new(PI, 0.0) / -q).sqrt(),
            self.offset - (self.lin * self.lin) / (4.0 * q),
        ))
    }
}

/// Single-mode kernel of the damping family
///
/// `V(α, α₀) = exp(−|α + shift − s·α₀|²/σ²)/(πσ²) · exp(m(α + α* + α₀ + α₀*) + log_factor)`
///
/// with `s = scale`, `σ² = variance` and `m = exp_coeff`. At `σ² = 0` the
/// Gaussian factor is the distribution `δ(α + shift − s·α₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    pub scale: f64,
    pub variance: f64,
    pub shift: C64,
    pub exp_coeff: C64,
    pub log_factor: C64,
}

impl GaussianKernel {
    pub const IDENTITY: Self = Self {
        scale: 1.0,
        variance: 0.0,
        shift: ZERO,
        exp_coeff: ZERO,
        log_factor: ZERO,
    };

    /// Pointwise kernel value; only meaningful for `variance > 0`.
    pub fn evaluate(&self, alpha: C64, alpha0: C64) -> C64 {
        let w = alpha + self.shift - self.scale * alpha0;
        let gauss = (-w.norm_sqr() / self.variance).exp() / (PI * self.variance);
        let lin = self.exp_coeff * (2.0 * alpha.re + 2.0 * alpha0.re) + self.log_factor;
        gauss * lin.exp()
    }

    /// `∫ d²α₀ V(α, α₀) f(α₀)` in closed form.
    pub fn apply(&self, form: &GaussianForm) -> Result<GaussianForm> {
        let m = self.exp_coeff;
        let out = form
            .multiply_exponential(m, m, ONE)
            .blur(self.scale, self.variance)?
            .shift(self.shift)
            .multiply_exponential(m, m, ONE)
            .add_offset(self.log_factor);
        Ok(out)
    }
}

/// One term of a multi-mode sum: `coeff · Π_k factors[k](α_k)`.
///
/// Factor coefficients are folded into `coeff` on construction, so every
/// factor carries `coeff = 1`; exponent offsets stay with the factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub factors: Vec<GaussianForm>,
}

impl Term {
    pub fn new(coeff: C64, factors: Vec<GaussianForm>) -> Self {
        let mut t = Self { coeff, factors };
        t.normalize();
        t
    }

    fn normalize(&mut self) {
        for f in &mut self.factors {
            self.coeff *= f.coeff;
            f.coeff = ONE;
        }
    }

    pub fn evaluate(&self, point: &[C64]) -> C64 {
        let exponent: C64 = self
            .factors
            .iter()
            .zip(point)
            .map(|(f, &a)| f.exponent(a))
            .sum();
        self.coeff * exponent.exp()
    }

    pub fn peak_magnitude(&self) -> f64 {
        self.log_peak().exp()
    }

    pub fn log_peak(&self) -> f64 {
        self.factors
            .iter()
            .fold(self.coeff.norm().ln(), |acc, f| acc + f.log_peak())
    }

    /// Multiplies by `pre · exp(e)`, keeping `e` in the exponent when a
    /// factor is available to hold it.
    fn absorb(&mut self, pre: C64, e: C64) {
        self.coeff *= pre;
        match self.factors.first_mut() {
            Some(f) => f.offset += e,
            None => self.coeff *= e.exp(),
        }
    }
}

/// Finite sum of per-mode Gaussian products over `modes` phase-space variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSum {
    modes: usize,
    terms: Vec<Term>,
}

impl GaussianSum {
    pub fn zero(modes: usize) -> Self {
        Self {
            modes,
            terms: Vec::new(),
        }
    }

    /// A constant (zero-mode) value.
    pub fn scalar(value: C64) -> Self {
        Self {
            modes: 0,
            terms: alloc::vec![Term::new(value, Vec::new())],
        }
    }

    pub fn single(form: GaussianForm) -> Self {
        Self::product(alloc::vec![form])
    }

    pub fn product(forms: Vec<GaussianForm>) -> Self {
        Self {
            modes: forms.len(),
            terms: alloc::vec![Term::new(ONE, forms)],
        }
    }

    pub fn from_terms(modes: usize, terms: Vec<Term>) -> Self {
        assert!(terms.iter().all(|t| t.factors.len() == modes), "term mode count mismatch");
        Self { modes, terms }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn evaluate(&self, point: &[C64]) -> C64 {
        debug_assert_eq!(point.len(), self.modes);
        self.terms.iter().map(|t| t.evaluate(point)).sum()
    }

    fn map_factors(&self, mode: usize, f: impl Fn(&GaussianForm) -> GaussianForm) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut factors = t.factors.clone();
                factors[mode] = f(&factors[mode]);
                Term::new(t.coeff, factors)
            })
            .collect();
        Self {
            modes: self.modes,
            terms,
        }
    }

    fn try_map_factors(
        &self,
        mode: usize,
        f: impl Fn(&GaussianForm) -> Result<GaussianForm>,
    ) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut factors = t.factors.clone();
            factors[mode] = f(&factors[mode])?;
            terms.push(Term::new(t.coeff, factors));
        }
        Ok(Self {
            modes: self.modes,
            terms,
        })
    }

    /// Replaces `α_k` by `α_k + λ_k` for every mode.
    pub fn shift(&self, lambdas: &[C64]) -> Self {
        assert_eq!(lambdas.len(), self.modes);
        lambdas
            .iter()
            .enumerate()
            .fold(self.clone(), |acc, (k, &l)| acc.map_factors(k, |f| f.shift(l)))
    }

    /// Multiplies every term by `c·exp(u α_k + v α_k*)`.
    pub fn multiply_exponential(&self, mode: usize, u: C64, v: C64, c: C64) -> Self {
        self.map_factors(mode, |f| f.multiply_exponential(u, v, c))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            modes: self.modes,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * c,
                    factors: t.factors.clone(),
                })
                .collect(),
        }
    }

    /// `self += c · other`.
    pub fn add_scaled(&mut self, other: &Self, c: C64) {
        assert_eq!(self.modes, other.modes, "mode count mismatch");
        if c == ZERO {
            return;
        }
        self.terms.extend(other.terms.iter().map(|t| Term {
            coeff: t.coeff * c,
            factors: t.factors.clone(),
        }));
    }

    /// Pointwise product of two sums over the same modes.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.modes, other.modes, "mode count mismatch");
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                let factors = a.factors.iter().zip(&b.factors).map(|(x, y)| x.mul(y)).collect();
                terms.push(Term::new(a.coeff * b.coeff, factors));
            }
        }
        Self {
            modes: self.modes,
            terms,
        }
    }

    /// Product over disjoint mode sets: the result has `self.modes + other.modes` modes.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut factors = a.factors.clone();
                factors.extend_from_slice(&b.factors);
                terms.push(Term::new(a.coeff * b.coeff, factors));
            }
        }
        Self {
            modes: self.modes + other.modes,
            terms,
        }
    }

    /// Integral over all modes. Zero-mode sums return their constant value.
    pub fn integrate_full(&self) -> Result<C64> {
        let mut total = ZERO;
        for t in &self.terms {
            let mut v = t.coeff;
            let mut e = ZERO;
            for f in &t.factors {
                let (pre, ef) = f.integral_parts()?;
                v *= pre;
                e += ef;
            }
            total += v * e.exp();
        }
        Ok(total)
    }

    /// Integrates out a single mode.
    pub fn integrate_mode(&self, mode: usize) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut factors = t.factors.clone();
            let f = factors.remove(mode);
            let (pre, e) = f.integral_parts()?;
            let mut term = Term::new(t.coeff, factors);
            term.absorb(pre, e);
            terms.push(term);
        }
        Ok(Self {
            modes: self.modes - 1,
            terms,
        })
    }

    /// Fixes one mode at `alpha`, dropping it from the variable list.
    pub fn evaluate_mode(&self, mode: usize, alpha: C64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut factors = t.factors.clone();
                let f = factors.remove(mode);
                let mut term = Term::new(t.coeff, factors);
                term.absorb(f.coeff, f.exponent(alpha));
                term
            })
            .collect();
        Self {
            modes: self.modes - 1,
            terms,
        }
    }

    /// Integrates out `x_k = Re α_k` for every mode.
    pub fn marginal_x(&self) -> Result<MomentumSum> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut coeff = t.coeff;
            let mut factors = Vec::with_capacity(t.factors.len());
            for f in &t.factors {
                let m = f.marginal_x()?;
                coeff *= m.coeff;
                factors.push(MomentumGaussian { coeff: ONE, ..m });
            }
            terms.push((coeff, factors));
        }
        Ok(MomentumSum {
            modes: self.modes,
            terms,
        })
    }

    /// Applies `kernel` to one mode of every term.
    pub fn convolve(&self, mode: usize, kernel: &GaussianKernel) -> Result<Self> {
        self.try_map_factors(mode, |f| kernel.apply(f))
    }

    /// Drops terms whose peak magnitude is below `eps` times the largest
    /// peak magnitude in the sum. Non-integrable terms are always kept.
    pub fn prune(&self, eps: f64) -> Self {
        let peaks: Vec<f64> = self.terms.iter().map(Term::log_peak).collect();
        let max = peaks
            .iter()
            .copied()
            .filter(|p| *p < f64::INFINITY)
            .fold(f64::NEG_INFINITY, f64::max);
        let cut = max + eps.ln();
        let terms = self
            .terms
            .iter()
            .zip(&peaks)
            .filter(|(_, &p)| p == f64::INFINITY || (p > f64::NEG_INFINITY && p >= cut))
            .map(|(t, _)| t.clone())
            .collect();
        Self {
            modes: self.modes,
            terms,
        }
    }
}

/// Sum of per-mode Gaussians in the momentum variables `p_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSum {
    modes: usize,
    terms: Vec<(C64, Vec<MomentumGaussian>)>,
}

impl MomentumSum {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn evaluate(&self, p: &[f64]) -> C64 {
        self.terms
            .iter()
            .map(|(c, fs)| {
                let e: C64 = fs.iter().zip(p).map(|(g, &pk)| g.exponent(pk)).sum();
                c * e.exp()
            })
            .sum()
    }

    pub fn integrate_full(&self) -> Result<C64> {
        let mut total = ZERO;
        for (c, fs) in &self.terms {
            let mut v = *c;
            let mut e = ZERO;
            for g in fs {
                let (pre, eg) = g.integral_parts()?;
                v *= pre;
                e += eg;
            }
            total += v * e.exp();
        }
        Ok(total)
    }
}
