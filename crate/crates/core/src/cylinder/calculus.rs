//! Pointwise evaluation of cylinder functions and their derivatives on an
//! atomic measure.

use serde::{Deserialize, Serialize};

use super::{CylinderFunction, TestFunction};
use crate::error::Result;
use crate::manifold::{Flow, TrigFunction, VectorField};
use crate::random_measures::AtomicMeasure;

/// Per-(test function, atom) jets: `ρ_j(s_i)`, `f_j(x_i)`, the coordinate
/// differential `df_j(x_i)` and `Δ_g f_j(x_i)`. Entries with `ρ_j(s_i) = 0`
/// are left at zero and never evaluated.
struct Jets {
    n: usize,
    d: usize,
    rho: Vec<f64>,
    val: Vec<f64>,
    lap: Vec<f64>,
    df: Vec<f64>,
    /// `y_j = f̂_j★η`.
    y: Vec<f64>,
}

impl Jets {
    fn new(fhats: &[TestFunction], eta: &AtomicMeasure) -> Jets {
        let m = eta.manifold();
        let (k, n, d) = (fhats.len(), eta.len(), eta.dim());
        let mut j = Jets {
            n,
            d,
            rho: vec![0.0; k * n],
            val: vec![0.0; k * n],
            lap: vec![0.0; k * n],
            df: vec![0.0; k * n * d],
            y: vec![0.0; k],
        };
        for (jf, f) in fhats.iter().enumerate() {
            for (i, (s, x)) in eta.atoms().enumerate() {
                let r = f.rho.value(s);
                if r == 0.0 {
                    continue;
                }
                let at = jf * n + i;
                let (v, lap) = f.f.jet(m, x, &mut j.df[at * d..(at + 1) * d]);
                j.rho[at] = r;
                j.val[at] = v;
                j.lap[at] = lap / m.metric_scale;
                j.y[jf] += s * r * v;
            }
        }
        j
    }

    fn df(&self, jf: usize, i: usize) -> &[f64] {
        let at = jf * self.n + i;
        &self.df[at * self.d..(at + 1) * self.d]
    }

    /// Coordinate differentials `Du_i = Σ_j ∂_jF ρ_j(s_i) df_j(x_i)`, flat.
    fn differentials(&self, dfy: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.d];
        for (jf, c) in dfy.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            for i in 0..self.n {
                let r = self.rho[jf * self.n + i];
                if r == 0.0 {
                    continue;
                }
                for (o, g) in out[i * self.d..(i + 1) * self.d].iter_mut().zip(self.df(jf, i)) {
                    *o += c * r * g;
                }
            }
        }
        out
    }
}

impl CylinderFunction {
    pub fn value(&self, eta: &AtomicMeasure) -> f64 {
        let y: Vec<f64> = self.fhats.iter().map(|f| star(f, eta)).collect();
        self.outer.eval(&y)
    }

    fn first_partials(&self, y: &[f64]) -> Vec<f64> {
        self.d1.iter().map(|p| p.eval(y)).collect()
    }
}

/// `f̂★η = Σ_i s_i f(x_i) ρ(s_i)`, tail mass excluded.
pub fn star(fhat: &TestFunction, eta: &AtomicMeasure) -> f64 {
    let m = eta.manifold();
    eta.atoms().map(|(s, x)| s * fhat.eval(m, x, s)).sum()
}

/// `∇u(η)(x_i)` for every atom, as tangent vectors.
pub fn grad(u: &CylinderFunction, eta: &AtomicMeasure) -> Vec<Vec<f64>> {
    let jets = Jets::new(&u.fhats, eta);
    let du = jets.differentials(&u.first_partials(&jets.y));
    du.chunks(eta.dim().max(1))
        .map(|c| {
            let mut v = c.to_vec();
            eta.manifold().raise(&mut v);
            v
        })
        .collect()
}

/// `∇_w u(η) = Σ_j ∂_jF Σ_i s_i ρ_j(s_i) ⟨∇f_j(x_i), w(x_i)⟩`.
pub fn directional_derivative(u: &CylinderFunction, w: &VectorField, eta: &AtomicMeasure) -> f64 {
    let m = eta.manifold();
    let jets = Jets::new(&u.fhats, eta);
    let dfy = u.first_partials(&jets.y);
    let mut wx = vec![0.0; eta.dim()];
    let mut total = 0.0;
    for (i, (s, x)) in eta.atoms().enumerate() {
        let mut wx_ready = false;
        for (jf, c) in dfy.iter().enumerate() {
            let r = jets.rho[jf * jets.n + i];
            if *c == 0.0 || r == 0.0 {
                continue;
            }
            if !wx_ready {
                w.eval(m, x, &mut wx);
                wx_ready = true;
            }
            let dot: f64 = jets.df(jf, i).iter().zip(&wx).map(|(a, b)| a * b).sum();
            total += c * s * r * dot;
        }
    }
    total
}

/// `Γ(u, v)(η) = ½ Σ_i s_i ⟨∇u(η)(x_i), ∇v(η)(x_i)⟩`.
pub fn carre_du_champ(u: &CylinderFunction, v: &CylinderFunction, eta: &AtomicMeasure) -> f64 {
    let m = eta.manifold();
    let ju = Jets::new(&u.fhats, eta);
    let jv = Jets::new(&v.fhats, eta);
    let du = ju.differentials(&u.first_partials(&ju.y));
    let dv = jv.differentials(&v.first_partials(&jv.y));
    let d = eta.dim();
    0.5 * eta
        .weights()
        .iter()
        .enumerate()
        .map(|(i, s)| s * m.gradient_inner(&du[i * d..(i + 1) * d], &dv[i * d..(i + 1) * d]))
        .sum::<f64>()
}

/// `u(η)`, `𝐋u(η)` and `Γ(u, u)(η)` from a single pass over the atoms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub value: f64,
    pub generator: f64,
    pub gamma: f64,
}

fn observe_parts(u: &CylinderFunction, eta: &AtomicMeasure) -> Result<(f64, f64, f64, f64)> {
    u.check_generator()?;
    let m = eta.manifold();
    let jets = Jets::new(&u.fhats, eta);
    let k = u.arity();
    let y = &jets.y;
    let dfy = u.first_partials(y);
    let n = jets.n;

    let mut l1 = 0.0;
    for j in 0..k {
        for p in j..k {
            let c = u.d2[j][p].eval(y);
            if c == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for (i, s) in eta.weights().iter().enumerate() {
                let (rj, rp) = (jets.rho[j * n + i], jets.rho[p * n + i]);
                if rj != 0.0 && rp != 0.0 {
                    acc += s * rj * rp * m.gradient_inner(jets.df(j, i), jets.df(p, i));
                }
            }
            l1 += if p == j { c * acc } else { 2.0 * c * acc };
        }
    }
    l1 *= 0.5;

    let mut l2 = 0.0;
    for (j, c) in dfy.iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let acc: f64 = (0..n).map(|i| jets.rho[j * n + i] * jets.lap[j * n + i]).sum();
        l2 += c * acc;
    }
    l2 *= 0.5;

    let du = jets.differentials(&dfy);
    let d = jets.d;
    let gamma = 0.5
        * eta
            .weights()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let g = &du[i * d..(i + 1) * d];
                s * m.gradient_inner(g, g)
            })
            .sum::<f64>();
    Ok((u.outer.eval(y), l1, l2, gamma))
}

/// `(𝐋₁u(η), 𝐋₂u(η))`.
pub fn generator_parts(u: &CylinderFunction, eta: &AtomicMeasure) -> Result<(f64, f64)> {
    let (_, l1, l2, _) = observe_parts(u, eta)?;
    Ok((l1, l2))
}

/// `𝐋u(η) = 𝐋₁u(η) + 𝐋₂u(η)`.
///
/// Fails with [`crate::Error::UnboundedDrift`] when a location-dependent
/// test function has a profile that does not vanish at `0⁺`.
pub fn generator(u: &CylinderFunction, eta: &AtomicMeasure) -> Result<f64> {
    let (l1, l2) = generator_parts(u, eta)?;
    Ok(l1 + l2)
}

pub fn observe(u: &CylinderFunction, eta: &AtomicMeasure) -> Result<Observation> {
    let (value, l1, l2, gamma) = observe_parts(u, eta)?;
    Ok(Observation { value, generator: l1 + l2, gamma })
}

/// `B_ε[w](η) = Σ_{i: s_i > ε} div w(x_i)`.
pub fn drift_b(w: &VectorField, eps: f64, eta: &AtomicMeasure) -> f64 {
    drift_from_divergence(&w.divergence(eta.manifold()), eps, eta)
}

/// [`drift_b`] with a precomputed divergence.
pub fn drift_from_divergence(div: &TrigFunction, eps: f64, eta: &AtomicMeasure) -> f64 {
    if div.terms().is_empty() {
        return 0.0;
    }
    let m = eta.manifold();
    eta.atoms().filter(|(s, _)| *s > eps).map(|(_, x)| div.value(m, x)).sum()
}

/// `R_ε[ψ^{w,t}](η) = Π_{i: s_i > ε} (dψ_♯m̄/dm̄)(x_i)`; exactly 1 for
/// measure-preserving flows.
pub fn rn_derivative(flow: &Flow, t: f64, eps: f64, eta: &AtomicMeasure) -> f64 {
    if flow.is_measure_preserving() {
        return 1.0;
    }
    eta.atoms().filter(|(s, _)| *s > eps).map(|(_, x)| flow.pushforward_density(t, x)).product()
}
