//! Closed trigonometric function family on the torus, with exact symbolic
//! derivatives.
//!
//! A [`TrigFunction`] is `f(x) = Σ c_j · trig(2π k_j·x / L)` with integer wave
//! vectors `k_j` and `trig ∈ {cos, sin}`. The JSON form of a term is
//! `[c, [k_1, …, k_d], "cos" | "sin"]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Manifold;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm(pub f64, pub Vec<i64>, pub Phase);

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrigFunction {
    terms: Vec<TrigTerm>,
}

impl TrigFunction {
    pub fn new(terms: Vec<TrigTerm>) -> Self {
        TrigFunction { terms }
    }

    pub fn zero() -> Self {
        TrigFunction::default()
    }

    pub fn constant(c: f64, dim: usize) -> Self {
        TrigFunction::new(vec![TrigTerm(c, vec![0; dim], Phase::Cos)])
    }

    pub fn cos(c: f64, k: &[i64]) -> Self {
        TrigFunction::new(vec![TrigTerm(c, k.to_vec(), Phase::Cos)])
    }

    pub fn sin(c: f64, k: &[i64]) -> Self {
        TrigFunction::new(vec![TrigTerm(c, k.to_vec(), Phase::Sin)])
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn plus(mut self, other: &TrigFunction) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn scaled(mut self, a: f64) -> Self {
        for t in &mut self.terms {
            t.0 *= a;
        }
        self
    }

    /// Every wave vector must have length `dim`.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.terms.iter().find(|t| t.1.len() != dim) {
            Some(t) => Err(invalid(format!(
                "wave vector {:?} has length {}, expected {dim}",
                t.1,
                t.1.len()
            ))),
            None => Ok(()),
        }
    }

    /// Canonical form: like terms merged, `k` sign-normalized so the first
    /// nonzero entry is positive, `sin(0)` dropped, zero coefficients dropped.
    pub fn simplified(&self) -> TrigFunction {
        let mut acc: BTreeMap<(Vec<i64>, Phase), f64> = BTreeMap::new();
        for TrigTerm(c, k, phase) in &self.terms {
            let mut k = k.clone();
            let mut c = *c;
            if let Some(first) = k.iter().find(|&&v| v != 0) {
                if *first < 0 {
                    k.iter_mut().for_each(|v| *v = -*v);
                    if *phase == Phase::Sin {
                        c = -c;
                    }
                }
            } else if *phase == Phase::Sin {
                continue;
            }
            *acc.entry((k, *phase)).or_insert(0.0) += c;
        }
        TrigFunction::new(
            acc.into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|((k, p), c)| TrigTerm(c, k, p))
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.simplified().terms.is_empty()
    }

    /// True when every term has a zero wave vector.
    pub fn is_constant(&self) -> bool {
        self.simplified().terms.iter().all(|t| t.1.iter().all(|&v| v == 0))
    }

    /// Average of `f` under the normalized volume.
    pub fn mean(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.2 == Phase::Cos && t.1.iter().all(|&v| v == 0))
            .map(|t| t.0)
            .sum()
    }

    /// Average of the product `f·h` under the normalized volume.
    pub fn mean_product(&self, other: &TrigFunction) -> f64 {
        let mut total = 0.0;
        for TrigTerm(a, k, p) in &self.terms {
            for TrigTerm(b, l, q) in &other.terms {
                let same = k == l;
                let opposite = k.iter().zip(l).all(|(x, y)| *x == -*y);
                // cos·cos averages to ½(δ_{k,l} + δ_{k,-l}), sin·sin to ½(δ_{k,l} - δ_{k,-l}),
                // mixed products to 0
                let m = match (p, q) {
                    (Phase::Cos, Phase::Cos) => 0.5 * (same as u8 as f64 + opposite as u8 as f64),
                    (Phase::Sin, Phase::Sin) => 0.5 * (same as u8 as f64 - opposite as u8 as f64),
                    _ => 0.0,
                };
                total += a * b * m;
            }
        }
        total
    }

    fn phase_angle(k: &[i64], x: &[f64], side: f64) -> f64 {
        let kx: f64 = k.iter().zip(x).map(|(&kj, &xj)| kj as f64 * xj).sum();
        2.0 * PI * kx / side
    }

    pub fn value(&self, m: &Manifold, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|TrigTerm(c, k, p)| {
                let th = Self::phase_angle(k, x, m.side);
                match p {
                    Phase::Cos => c * th.cos(),
                    Phase::Sin => c * th.sin(),
                }
            })
            .sum()
    }

    /// Value, coordinate differential (written into `df`) and coordinate
    /// Laplacian `Σ_j ∂²f/∂x_j²`, from one sin/cos evaluation per term.
    pub fn jet(&self, m: &Manifold, x: &[f64], df: &mut [f64]) -> (f64, f64) {
        df.iter_mut().for_each(|v| *v = 0.0);
        let w = 2.0 * PI / m.side;
        let (mut val, mut lap) = (0.0, 0.0);
        for TrigTerm(c, k, p) in &self.terms {
            let th = Self::phase_angle(k, x, m.side);
            let (s, co) = th.sin_cos();
            let (v, dv) = match p {
                Phase::Cos => (c * co, -c * s),
                Phase::Sin => (c * s, c * co),
            };
            val += v;
            let k2: i64 = k.iter().map(|kj| kj * kj).sum();
            lap -= w * w * k2 as f64 * v;
            for (d, &kj) in df.iter_mut().zip(k) {
                *d += dv * w * kj as f64;
            }
        }
        (val, lap)
    }

    pub fn differential(&self, m: &Manifold, x: &[f64]) -> Vec<f64> {
        let mut df = vec![0.0; x.len()];
        self.jet(m, x, &mut df);
        df
    }

    /// Laplace–Beltrami `Δ_g f` (the coordinate Laplacian divided by the metric scale).
    pub fn laplacian(&self, m: &Manifold, x: &[f64]) -> f64 {
        let mut df = vec![0.0; x.len()];
        self.jet(m, x, &mut df).1 / m.metric_scale
    }

    /// Symbolic `∂f/∂x_axis`.
    pub fn partial(&self, axis: usize, side: f64) -> TrigFunction {
        let w = 2.0 * PI / side;
        TrigFunction::new(
            self.terms
                .iter()
                .filter(|t| t.1[axis] != 0)
                .map(|TrigTerm(c, k, p)| {
                    let f = c * w * k[axis] as f64;
                    match p {
                        Phase::Cos => TrigTerm(-f, k.clone(), Phase::Sin),
                        Phase::Sin => TrigTerm(f, k.clone(), Phase::Cos),
                    }
                })
                .collect(),
        )
    }
}

/// Smooth vector field with one [`TrigFunction`] per coordinate direction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorField {
    components: Vec<TrigFunction>,
}

impl VectorField {
    pub fn new(components: Vec<TrigFunction>) -> Self {
        VectorField { components }
    }

    pub fn constant(v: &[f64]) -> Self {
        VectorField::new(v.iter().map(|&c| TrigFunction::constant(c, v.len())).collect())
    }

    pub fn components(&self) -> &[TrigFunction] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.components.len() != dim {
            return Err(invalid(format!(
                "vector field has {} components, expected {dim}",
                self.components.len()
            )));
        }
        self.components.iter().try_for_each(|c| c.check_dim(dim))
    }

    pub fn eval(&self, m: &Manifold, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.value(m, x);
        }
    }

    pub fn at(&self, m: &Manifold, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.components.len()];
        self.eval(m, x, &mut out);
        out
    }

    /// Symbolic divergence with respect to the volume measure. Conformal
    /// scaling multiplies the volume by a constant, so this is the plain
    /// coordinate divergence.
    pub fn divergence(&self, m: &Manifold) -> TrigFunction {
        self.components
            .iter()
            .enumerate()
            .fold(TrigFunction::zero(), |acc, (j, c)| acc.plus(&c.partial(j, m.side)))
            .simplified()
    }

    pub fn is_divergence_free(&self, m: &Manifold) -> bool {
        self.divergence(m).is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.components.iter().all(TrigFunction::is_constant)
    }

    /// `‖w‖²_{L²(μ)}` for weighted points `(s_i, x_i)`.
    pub fn sq_norm_weighted<'a>(&self, m: &Manifold, atoms: impl Iterator<Item = (f64, &'a [f64])>) -> f64 {
        let mut v = vec![0.0; self.components.len()];
        atoms
            .map(|(s, x)| {
                self.eval(m, x, &mut v);
                s * m.inner(&v, &v)
            })
            .sum()
    }
}
