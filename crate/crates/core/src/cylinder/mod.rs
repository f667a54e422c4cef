//! Cylinder functions on the space of probability measures and their
//! differential calculus.
//!
//! A test function `f̂ = f ⊗ ρ` pairs a trigonometric `f` on the torus with
//! a weight profile `ρ` on `(0, 1]`, and acts on atomic measures by
//! `f̂★η = Σ_i s_i f(x_i) ρ(s_i)`. A cylinder function is
//! `u(η) = F(f̂₁★η, …, f̂ₖ★η)` with `F` a polynomial.
//!
//! Conventions, for `η = Σ s_i δ_{x_i}`:
//!
//! - gradient: `∇u(η)(x_i) = Σ_j ∂_jF · ρ_j(s_i) · ∇f_j(x_i)`;
//! - carré du champ: `Γ(u, v)(η) = ½ Σ_i s_i ⟨∇u(η)(x_i), ∇v(η)(x_i)⟩`;
//! - generator `𝐋 = 𝐋₁ + 𝐋₂` with
//!   `𝐋₁u = ½ Σ_{j,p} ∂²_{jp}F Σ_i s_i ρ_j ρ_p ⟨∇f_j, ∇f_p⟩(x_i)` and
//!   `𝐋₂u = ½ Σ_j ∂_jF Σ_{i: ρ_j(s_i) ≠ 0} ρ_j(s_i) Δf_j(x_i)`;
//! - drift: `B_ε[w](η) = Σ_{i: s_i > ε} div w(x_i)`;
//! - Radon–Nikodym factor: `R_ε[ψ](η) = Π_{i: s_i > ε} (dψ_♯m̄/dm̄)(x_i)`.
//!
//! These are the generator and square field of the particle system in
//! which atom `i` runs a Brownian motion at speed `1/s_i`; the
//! quadratic-variation density of `u(η_t)` is `2Γ(u)`.
//!
//! Along the flow `ψ^{w,t}` one has `d/dt|₀ R_ε[ψ^{w,t}] = -B_ε[w]`, and
//! integration by parts reads
//! `E[∇_w u · v] = -E[u · ∇_w v] - E[u v B_ε[w]]` for `ε` at most the
//! vanishing thresholds of `u` and `v`.

mod calculus;
mod poly;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::manifold::{Manifold, TrigFunction};

pub use calculus::{
    carre_du_champ, directional_derivative, drift_b, drift_from_divergence, generator, generator_parts, grad, observe,
    rn_derivative, star, Observation,
};
pub use poly::Polynomial;
pub use verify::{verify_b_martingale, verify_generator_symmetry, verify_ibp, verify_pqi};

/// Weight profile `ρ(s) = smooth(s) · p(s)`: zero for `s ≤ ε`, the
/// polynomial `p` for `s ≥ ε + δ`, and a C¹ smoothstep ramp in between.
/// With `δ = 0` the cutoff is sharp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rho {
    #[serde(default = "unit_poly")]
    pub poly: Vec<f64>,
    #[serde(default)]
    pub eps: f64,
    #[serde(default)]
    pub delta: f64,
}

fn unit_poly() -> Vec<f64> {
    vec![1.0]
}

impl Default for Rho {
    fn default() -> Self {
        Rho::one()
    }
}

impl Rho {
    /// `ρ ≡ 1`.
    pub fn one() -> Self {
        Rho { poly: unit_poly(), eps: 0.0, delta: 0.0 }
    }

    pub fn cutoff(eps: f64, delta: f64) -> Self {
        Rho { poly: unit_poly(), eps, delta }
    }

    pub fn with_poly(mut self, poly: Vec<f64>) -> Self {
        self.poly = poly;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(invalid(format!("rho cutoff eps must be nonnegative, got {}", self.eps)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(invalid(format!("rho ramp width delta must be nonnegative, got {}", self.delta)));
        }
        if self.poly.is_empty() || self.poly.iter().any(|c| !c.is_finite()) {
            return Err(invalid("rho polynomial needs at least one finite coefficient"));
        }
        Ok(())
    }

    fn poly_at(&self, s: f64) -> f64 {
        self.poly.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn value(&self, s: f64) -> f64 {
        if s <= self.eps {
            return 0.0;
        }
        let p = self.poly_at(s);
        if s >= self.eps + self.delta {
            p
        } else {
            let tau = (s - self.eps) / self.delta;
            tau * tau * (3.0 - 2.0 * tau) * p
        }
    }

    /// `lim_{s↓0} ρ(s)`.
    pub fn at_zero(&self) -> f64 {
        if self.eps > 0.0 || self.delta > 0.0 {
            0.0
        } else {
            self.poly_at(0.0)
        }
    }

    pub fn is_one(&self) -> bool {
        self.eps == 0.0 && self.delta == 0.0 && self.poly.first() == Some(&1.0) && self.poly[1..].iter().all(|c| *c == 0.0)
    }
}

/// Which test-function family an `f̂` belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FnClass {
    /// `ρ ≡ 1`.
    Tf,
    /// Constant `f`: depends on the weights only.
    HtfMinus,
    /// General profile vanishing below the threshold `eps`.
    Htf { eps: f64 },
}

/// `f̂ = f ⊗ ρ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub f: TrigFunction,
    #[serde(default)]
    pub rho: Rho,
}

impl TestFunction {
    pub fn new(f: TrigFunction, rho: Rho) -> Self {
        TestFunction { f, rho }
    }

    pub fn class(&self) -> FnClass {
        if self.f.is_constant() {
            FnClass::HtfMinus
        } else if self.rho.is_one() {
            FnClass::Tf
        } else {
            FnClass::Htf { eps: self.rho.eps }
        }
    }

    pub fn threshold(&self) -> f64 {
        self.rho.eps
    }

    pub fn eval(&self, m: &Manifold, x: &[f64], s: f64) -> f64 {
        let r = self.rho.value(s);
        if r == 0.0 {
            0.0
        } else {
            r * self.f.value(m, x)
        }
    }
}

/// `u = F(f̂₁★, …, f̂ₖ★)` with symbolic first and second partials of `F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CylinderRecord", into = "CylinderRecord")]
pub struct CylinderFunction {
    outer: Polynomial,
    fhats: Vec<TestFunction>,
    d1: Vec<Polynomial>,
    d2: Vec<Vec<Polynomial>>,
    /// `∂_jF` is not the zero polynomial.
    active: Vec<bool>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CylinderRecord {
    #[serde(rename = "F")]
    outer: Polynomial,
    fhats: Vec<TestFunction>,
}

impl TryFrom<CylinderRecord> for CylinderFunction {
    type Error = crate::Error;

    fn try_from(r: CylinderRecord) -> Result<Self> {
        CylinderFunction::new(r.outer, r.fhats)
    }
}

impl From<CylinderFunction> for CylinderRecord {
    fn from(u: CylinderFunction) -> Self {
        CylinderRecord { outer: u.outer, fhats: u.fhats }
    }
}

impl CylinderFunction {
    pub fn new(outer: Polynomial, fhats: Vec<TestFunction>) -> Result<Self> {
        let k = fhats.len();
        if k == 0 {
            return Err(invalid("a cylinder function needs at least one test function"));
        }
        if outer.terms().is_empty() {
            return Err(invalid("the outer polynomial F has no terms"));
        }
        outer.check_arity(k)?;
        for f in &fhats {
            f.rho.validate()?;
            if let Some(t) = f.f.terms().first() {
                f.f.check_dim(t.1.len())?;
            }
        }
        let d1: Vec<Polynomial> = (0..k).map(|j| outer.partial(j)).collect();
        let d2 = d1.iter().map(|p| (0..k).map(|q| p.partial(q)).collect()).collect();
        let active = d1.iter().map(|p| !p.is_zero()).collect();
        Ok(CylinderFunction { outer, fhats, d1, d2, active })
    }

    /// `u = f̂★`.
    pub fn star(fhat: TestFunction) -> Self {
        CylinderFunction::new(Polynomial::variable(0, 1), vec![fhat]).expect("identity outer function")
    }

    /// `u ≡ c` on a `dim`-dimensional torus.
    pub fn constant(c: f64, dim: usize) -> Self {
        let fhat = TestFunction::new(TrigFunction::constant(1.0, dim), Rho::one());
        CylinderFunction::new(Polynomial::constant(c, 1), vec![fhat]).expect("constant outer function")
    }

    pub fn outer(&self) -> &Polynomial {
        &self.outer
    }

    pub fn fhats(&self) -> &[TestFunction] {
        &self.fhats
    }

    pub fn arity(&self) -> usize {
        self.fhats.len()
    }

    /// `u · v`.
    pub fn product(&self, other: &CylinderFunction) -> CylinderFunction {
        let outer = self.outer.tensor(&other.outer, self.arity(), other.arity());
        let fhats = self.fhats.iter().chain(&other.fhats).cloned().collect();
        CylinderFunction::new(outer, fhats).expect("product of valid cylinder functions")
    }

    /// `a·u + b·v`.
    pub fn linear_combination(&self, a: f64, other: &CylinderFunction, b: f64) -> CylinderFunction {
        let outer = self.outer.clone().scaled(a).direct_sum(&other.outer.clone().scaled(b), self.arity(), other.arity());
        let fhats = self.fhats.iter().chain(&other.fhats).cloned().collect();
        CylinderFunction::new(outer, fhats).expect("sum of valid cylinder functions")
    }

    /// Test functions that make `u` depend on atom locations: nonconstant
    /// `f_j` with `∂_jF ≢ 0`.
    fn location_dependent(&self) -> impl Iterator<Item = (usize, &TestFunction)> {
        self.fhats.iter().enumerate().filter(|(j, f)| self.active[*j] && !f.f.is_constant())
    }

    /// Vanishing threshold `ε_u`: `u(η)` does not depend on the location of
    /// any atom with weight `≤ ε_u`. Infinite when `u` depends on weights only.
    pub fn threshold(&self) -> f64 {
        self.location_dependent().map(|(_, f)| f.threshold()).fold(f64::INFINITY, f64::min)
    }

    /// True when `u` depends on the weights only (every active `f_j` is constant).
    pub fn is_weight_only(&self) -> bool {
        self.location_dependent().next().is_none()
    }

    /// Errors unless every test function is defined on `m`'s dimension.
    pub fn check(&self, m: &Manifold) -> Result<()> {
        m.require_torus("cylinder functions")?;
        self.fhats.iter().try_for_each(|f| f.f.check_dim(m.dim))
    }

    /// `𝐋₂u` is a finite sum only if each active, nonconstant `f̂_j` has a
    /// profile vanishing at `0⁺`.
    pub fn check_generator(&self) -> Result<()> {
        match self.location_dependent().find(|(_, f)| f.rho.eps == 0.0 && f.rho.at_zero() != 0.0) {
            Some((index, _)) => Err(crate::Error::UnboundedDrift { index }),
            None => Ok(()),
        }
    }
}
