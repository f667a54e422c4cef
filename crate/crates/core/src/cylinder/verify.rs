//! Monte-Carlo verifiers for integration by parts, partial
//! quasi-invariance, the drift martingale and generator symmetry under the
//! Dirichlet–Ferguson measure.

use rand::Rng;

use super::{directional_derivative, drift_from_divergence, observe, rn_derivative, carre_du_champ, CylinderFunction};
use crate::error::{invalid, Result};
use crate::manifold::{Flow, TrigFunction, VectorField};
use crate::random_measures::{AtomicMeasure, DfSampler};
use crate::stats::try_mc_moments;
use crate::report::{Check, Report};
use crate::rng::draw_seed;

fn check_all(sampler: &DfSampler, us: &[&CylinderFunction]) -> Result<()> {
    us.iter().try_for_each(|u| u.check(&sampler.manifold))
}

/// Integration by parts `E[∇_w u · v] + E[u · ∇_w v] + E[u v B_ε[w]] = 0`
/// for every triple of the basket, on shared draws.
///
/// For the pair `(u, v)` the threshold is `min(ε_u, ε_v, eps)`, where
/// `eps` (if given) caps the automatic choice; pairs of weight-only
/// functions therefore need an explicit `eps`. Checks are named
/// `ibp/u<a>_v<b>_w<c>` and carry the residual with its paired standard
/// error.
pub fn verify_ibp<R: Rng + ?Sized>(
    sampler: &DfSampler,
    us: &[CylinderFunction],
    vs: &[CylinderFunction],
    ws: &[VectorField],
    eps: Option<f64>,
    n: usize,
    k: f64,
    rng: &mut R,
) -> Result<Report> {
    let m = sampler.manifold;
    check_all(sampler, &us.iter().chain(vs).collect::<Vec<_>>())?;
    for w in ws {
        w.check_dim(m.dim)?;
    }
    let cap = eps.unwrap_or(f64::INFINITY);
    let mut eps_pair = Vec::new();
    for (a, u) in us.iter().enumerate() {
        for (b, v) in vs.iter().enumerate() {
            let e = u.threshold().min(v.threshold()).min(cap);
            if !e.is_finite() {
                return Err(invalid(format!("u{a} and v{b} depend on weights only; an explicit eps is required")));
            }
            if !(e > 0.0) {
                return Err(invalid(format!("u{a} and v{b} need positive vanishing thresholds")));
            }
            eps_pair.push(e);
        }
    }
    let divs: Vec<TrigFunction> = ws.iter().map(|w| w.divergence(&m)).collect();
    let (nu, nv, nw) = (us.len(), vs.len(), ws.len());
    let seed = draw_seed(rng);
    let task = "ibp";
    let bank = try_mc_moments(seed, task, n, nu * nv * nw, |rng, bank| {
        let eta = sampler.sample(rng)?;
        let uval: Vec<f64> = us.iter().map(|u| u.value(&eta)).collect();
        let vval: Vec<f64> = vs.iter().map(|v| v.value(&eta)).collect();
        for (c, w) in ws.iter().enumerate() {
            let du: Vec<f64> = us.iter().map(|u| directional_derivative(u, w, &eta)).collect();
            let dv: Vec<f64> = vs.iter().map(|v| directional_derivative(v, w, &eta)).collect();
            for a in 0..nu {
                for b in 0..nv {
                    let drift = drift_from_divergence(&divs[c], eps_pair[a * nv + b], &eta);
                    let residual = du[a] * vval[b] + uval[a] * dv[b] + uval[a] * vval[b] * drift;
                    bank.push((a * nv + b) * nw + c, residual);
                }
            }
        }
        Ok(())
    })?;
    let mut report = Report::new(task, seed);
    for a in 0..nu {
        for b in 0..nv {
            for c in 0..nw {
                let r = bank.get((a * nv + b) * nw + c);
                report.push(Check::sigma(format!("{task}/u{a}_v{b}_w{c}"), r.mean, r.stderr(), 0.0, k));
            }
        }
    }
    Ok(report)
}

/// `η` with only the atoms heavier than `eps` moved by `ψ^{w,t}`.
fn push_heavy(flow: &Flow, t: f64, eps: f64, eta: &AtomicMeasure) -> AtomicMeasure {
    let mut out = eta.clone();
    let d = eta.dim();
    let weights = eta.weights().to_vec();
    let coords = out.coords_mut();
    for (i, s) in weights.iter().enumerate() {
        if *s > eps {
            let (y, _) = flow.map(t, &coords[i * d..(i + 1) * d]);
            coords[i * d..(i + 1) * d].copy_from_slice(&y);
        }
    }
    out
}

/// Partial quasi-invariance `E[u(ψ_♯η)] = E[R_ε[ψ](η) · u(η)]` with
/// `ψ = ψ^{w,t}`, for every `u` with threshold at least `eps`.
///
/// Also reports `E[R_ε[ψ]] = 1` (`pqi/mean_rn`) and, for measure-preserving
/// flows, the number of draws with `R_ε ≠ 1` (`pqi/rn_identically_one`,
/// which must be zero).
pub fn verify_pqi<R: Rng + ?Sized>(
    sampler: &DfSampler,
    flow: &Flow,
    t: f64,
    us: &[CylinderFunction],
    eps: f64,
    n: usize,
    k: f64,
    rng: &mut R,
) -> Result<Report> {
    check_all(sampler, &us.iter().collect::<Vec<_>>())?;
    flow.field().check_dim(sampler.manifold.dim)?;
    if !(eps > 0.0) {
        return Err(invalid("the quasi-invariance threshold must be positive"));
    }
    if let Some((j, u)) = us.iter().enumerate().find(|(_, u)| u.threshold() < eps) {
        return Err(invalid(format!(
            "u{j} has threshold {} below eps = {eps}; it is not measurable at that level",
            u.threshold()
        )));
    }
    let seed = draw_seed(rng);
    let task = "pqi";
    let nu = us.len();
    let bank = try_mc_moments(seed, task, n, nu + 2, |rng, bank| {
        let eta = sampler.sample(rng)?;
        let moved = push_heavy(flow, t, eps, &eta);
        let r = rn_derivative(flow, t, eps, &eta);
        for (j, u) in us.iter().enumerate() {
            bank.push(j, u.value(&moved) - r * u.value(&eta));
        }
        bank.push(nu, r);
        bank.push(nu + 1, if r == 1.0 { 0.0 } else { 1.0 });
        Ok(())
    })?;
    let mut report = Report::new(task, seed);
    for j in 0..nu {
        let d = bank.get(j);
        report.push(Check::sigma(format!("{task}/u{j}"), d.mean, d.stderr(), 0.0, k));
    }
    let r = bank.get(nu);
    report.push(Check::sigma(format!("{task}/mean_rn"), r.mean, r.stderr(), 1.0, k));
    if flow.is_measure_preserving() {
        let off = bank.get(nu + 1);
        report.push(Check::absolute(format!("{task}/rn_identically_one"), off.mean * off.n as f64, 0.0, 0.0));
    }
    Ok(report)
}

/// Martingale structure of the drift in the threshold: `E[B_ε[w]] = 0` and
/// `E[B_δ[w] · u] = E[B_ε[w] · u]` for `ε < δ` and every `u` that does not
/// depend on atoms of weight `≤ δ`.
pub fn verify_b_martingale<R: Rng + ?Sized>(
    sampler: &DfSampler,
    w: &VectorField,
    eps: f64,
    delta: f64,
    us: &[CylinderFunction],
    n: usize,
    k: f64,
    rng: &mut R,
) -> Result<Report> {
    check_all(sampler, &us.iter().collect::<Vec<_>>())?;
    w.check_dim(sampler.manifold.dim)?;
    if !(0.0 < eps && eps < delta) {
        return Err(invalid(format!("need 0 < eps < delta, got eps = {eps}, delta = {delta}")));
    }
    if let Some((j, u)) = us.iter().enumerate().find(|(_, u)| u.threshold() < delta) {
        return Err(invalid(format!(
            "u{j} has threshold {} below delta = {delta}; the tower property needs the coarser level",
            u.threshold()
        )));
    }
    let div = w.divergence(&sampler.manifold);
    let seed = draw_seed(rng);
    let task = "bmart";
    let nu = us.len();
    let bank = try_mc_moments(seed, task, n, nu + 2, |rng, bank| {
        let eta = sampler.sample(rng)?;
        let be = drift_from_divergence(&div, eps, &eta);
        let bd = drift_from_divergence(&div, delta, &eta);
        bank.push(0, be);
        bank.push(1, bd);
        for (j, u) in us.iter().enumerate() {
            bank.push(2 + j, (bd - be) * u.value(&eta));
        }
        Ok(())
    })?;
    let mut report = Report::new(task, seed);
    let (be, bd) = (bank.get(0), bank.get(1));
    report.push(Check::sigma(format!("{task}/mean_eps"), be.mean, be.stderr(), 0.0, k));
    report.push(Check::sigma(format!("{task}/mean_delta"), bd.mean, bd.stderr(), 0.0, k));
    for j in 0..nu {
        let d = bank.get(2 + j);
        report.push(Check::sigma(format!("{task}/u{j}"), d.mean, d.stderr(), 0.0, k));
    }
    Ok(report)
}

/// Symmetry `E[u 𝐋v] = E[v 𝐋u]` for every pair and the energy identity
/// `E[Γ(u, v)] = -E[u 𝐋v]` for every pair including `u = v`.
pub fn verify_generator_symmetry<R: Rng + ?Sized>(
    sampler: &DfSampler,
    us: &[CylinderFunction],
    n: usize,
    k: f64,
    rng: &mut R,
) -> Result<Report> {
    check_all(sampler, &us.iter().collect::<Vec<_>>())?;
    for u in us {
        u.check_generator()?;
    }
    let nu = us.len();
    let pairs: Vec<(usize, usize)> = (0..nu).flat_map(|a| (a..nu).map(move |b| (a, b))).collect();
    let seed = draw_seed(rng);
    let task = "symmetry";
    let np = pairs.len();
    let bank = try_mc_moments(seed, task, n, 2 * np, |rng, bank| {
        let eta = sampler.sample(rng)?;
        let obs = us.iter().map(|u| observe(u, &eta)).collect::<Result<Vec<_>>>()?;
        for (i, &(a, b)) in pairs.iter().enumerate() {
            let (oa, ob) = (obs[a], obs[b]);
            bank.push(2 * i, oa.value * ob.generator - ob.value * oa.generator);
            let gamma = if a == b { oa.gamma } else { carre_du_champ(&us[a], &us[b], &eta) };
            bank.push(2 * i + 1, gamma + oa.value * ob.generator);
        }
        Ok(())
    })?;
    let mut report = Report::new(task, seed);
    for (i, &(a, b)) in pairs.iter().enumerate() {
        if a != b {
            let s = bank.get(2 * i);
            report.push(Check::sigma(format!("symmetry/u{a}_u{b}"), s.mean, s.stderr(), 0.0, k));
        }
        let e = bank.get(2 * i + 1);
        report.push(Check::sigma(format!("energy/u{a}_u{b}"), e.mean, e.stderr(), 0.0, k));
    }
    Ok(report)
}
