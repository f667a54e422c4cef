//! Poisson–Dirichlet weights, the Dirichlet–Ferguson sampler, and
//! Monte-Carlo checks of the Mecke and Sethuraman characterisations.
//!
//! A Dirichlet–Ferguson sample is `η = Σ s_i δ_{x_i}` with `s` the
//! decreasing rearrangement of stick-breaking weights built from i.i.d.
//! `Beta(1, β)` sticks and `x_i` i.i.d. uniform on the manifold. The
//! infinite sequence is truncated after `n_atoms` sticks; the leftover mass
//! is handled by a [`TailPolicy`].

mod measure;
mod verify;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::manifold::Manifold;

pub use measure::AtomicMeasure;
pub use verify::{
    beta_moment, verify_df_sampler, verify_mecke, verify_sethuraman, verify_stick_breaking, MeckeProbe,
    SethuramanMode,
};

/// Tolerance on `Σ s_i + tail = 1` for externally supplied weights.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// `n` i.i.d. sticks `r ~ Beta(1, β)`, drawn as `1 - U^{1/β}` with `U ∈ (0, 1)`.
pub fn sample_sticks<R: Rng + ?Sized>(beta: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            -(u.ln() / beta).exp_m1()
        })
        .collect())
}

/// Stick-breaking map: `Λ_k = r_k Π_{i<k} (1 - r_i)`, tail `Π_i (1 - r_i)`.
pub fn stick_break(r: &[f64]) -> Result<WeightVector> {
    let mut s = Vec::with_capacity(r.len());
    let mut rest = 1.0;
    for &ri in r {
        if !(ri > 0.0 && ri <= 1.0) {
            return Err(invalid(format!("stick {ri} outside (0, 1]")));
        }
        s.push(ri * rest);
        rest *= 1.0 - ri;
    }
    Ok(WeightVector { s, tail: rest, ordered: false })
}

/// Decreasing rearrangement (the map `Υ`).
pub fn reorder(wv: &WeightVector) -> WeightVector {
    let mut s = wv.s.clone();
    s.sort_by(|a, b| b.total_cmp(a));
    WeightVector { s, tail: wv.tail, ordered: true }
}

/// Default truncation: the smallest `n` with `(β/(1+β))^n ≤ 1e-10`.
pub fn default_n_atoms(beta: f64) -> usize {
    let n = (1e-10f64.ln() / (beta / (1.0 + beta)).ln()).ceil();
    (n as usize).max(1)
}

/// Finite list of masses plus the unassigned tail mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    s: Vec<f64>,
    tail: f64,
    ordered: bool,
}

impl WeightVector {
    /// Validates nonnegative finite masses with `Σ s + tail = 1` up to [`MASS_TOLERANCE`].
    pub fn new(s: Vec<f64>, tail: f64) -> Result<Self> {
        if let Some(bad) = s.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!("weight {bad} is not a nonnegative number")));
        }
        if !(tail.is_finite() && tail >= 0.0) {
            return Err(invalid(format!("tail mass {tail} is not a nonnegative number")));
        }
        let total: f64 = s.iter().sum::<f64>() + tail;
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(format!("weights and tail sum to {total}, not 1")));
        }
        let ordered = s.windows(2).all(|w| w[0] >= w[1]);
        Ok(WeightVector { s, tail, ordered })
    }

    pub fn weights(&self) -> &[f64] {
        &self.s
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn is_ordered(&self) -> bool {
        self.ordered
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.s.iter().sum::<f64>() + self.tail
    }

    pub fn reorder(&self) -> WeightVector {
        reorder(self)
    }

    pub fn into_parts(self) -> (Vec<f64>, f64) {
        (self.s, self.tail)
    }
}

/// What to do with the mass left over after truncation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailPolicy {
    /// Divide the kept weights by their sum.
    #[default]
    Renormalize,
    /// Put the tail on one extra atom at a fresh uniform location.
    Lump,
    /// Keep a sub-probability measure and report the tail.
    Keep,
}

/// Truncated Dirichlet–Ferguson sampler on a manifold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DfSampler {
    pub manifold: Manifold,
    pub n_atoms: usize,
    pub tail_policy: TailPolicy,
}

impl DfSampler {
    /// Sampler with [`default_n_atoms`] and [`TailPolicy::Renormalize`].
    pub fn new(manifold: Manifold) -> Self {
        DfSampler { manifold, n_atoms: default_n_atoms(manifold.beta), tail_policy: TailPolicy::Renormalize }
    }

    pub fn with_n_atoms(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n_atoms must be at least 1"));
        }
        self.n_atoms = n;
        Ok(self)
    }

    pub fn with_tail_policy(mut self, policy: TailPolicy) -> Self {
        self.tail_policy = policy;
        self
    }

    pub fn beta(&self) -> f64 {
        self.manifold.beta
    }

    /// Ordered weights after the tail policy; [`TailPolicy::Lump`] appends
    /// the tail as an ordinary weight before sorting.
    pub fn sample_weights<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<WeightVector> {
        let sticks = sample_sticks(self.beta(), self.n_atoms, rng)?;
        let wv = reorder(&stick_break(&sticks)?);
        Ok(match self.tail_policy {
            TailPolicy::Keep => wv,
            TailPolicy::Renormalize => {
                let total: f64 = wv.s.iter().sum();
                WeightVector { s: wv.s.iter().map(|v| v / total).collect(), tail: 0.0, ordered: true }
            }
            TailPolicy::Lump => {
                let mut s = wv.s;
                s.push(wv.tail);
                reorder(&WeightVector { s, tail: 0.0, ordered: false })
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AtomicMeasure> {
        let wv = self.sample_weights(rng)?;
        AtomicMeasure::with_uniform_locations(self.manifold, wv, rng)
    }
}

/// One Dirichlet–Ferguson draw with an explicit truncation level and tail policy.
pub fn sample_dirichlet_ferguson<R: Rng + ?Sized>(
    manifold: &Manifold,
    n_atoms: usize,
    tail_policy: TailPolicy,
    rng: &mut R,
) -> Result<AtomicMeasure> {
    DfSampler::new(*manifold).with_n_atoms(n_atoms)?.with_tail_policy(tail_policy).sample(rng)
}

#[cfg(test)]
mod tests;
