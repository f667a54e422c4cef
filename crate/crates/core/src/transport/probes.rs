//! Short-time (Varadhan) and Lipschitz (Rademacher) probes.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{w2, W2Ball};
use crate::diffusion::evolve;
use crate::error::{invalid, Result};
use crate::manifold::{Flow, VectorField};
use crate::random_measures::{AtomicMeasure, DfSampler};
use crate::report::{Check, Criterion, Report};
use crate::rng::draw_seed;
use crate::stats::{merge_results, par_chunks};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VaradhanOptions {
    /// The bound is checked as `t log p̂_t ≤ -½ d̂² (1 - slack)`.
    pub slack: f64,
    /// Width of the confidence band in standard errors.
    pub k: f64,
    /// Stationary draws used to estimate the set masses and collect members.
    pub n_pilot: usize,
    /// Cap on pilot members kept per set for the pairwise distance search.
    pub max_pair_samples: usize,
}

impl Default for VaradhanOptions {
    fn default() -> Self {
        VaradhanOptions { slack: 0.5, k: 3.0, n_pilot: 100_000, max_pair_samples: 128 }
    }
}

/// Estimates of `p_t(A₁, A₂) = P(η₀ ∈ A₁, η_t ∈ A₂)` against the bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VaradhanReport {
    pub t: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `t log p̂_t`; absent when no path hit.
    pub t_log_p: Vec<Option<f64>>,
    pub t_log_p_stderr: Vec<Option<f64>>,
    pub bound: Vec<f64>,
    pub hits: Vec<u64>,
    pub n: usize,
    /// Minimum `W₂` over sampled pilot pairs; absent if a set had no pilot member.
    pub d_hat: Option<f64>,
    /// `max(0, W₂(c₁, c₂) - r₁ - r₂)`, a lower bound for the set distance.
    pub d_lower: f64,
    pub pilot_mass: [f64; 2],
    pub report: Report,
}

struct Pilot {
    counts: [u64; 2],
    members: [Vec<AtomicMeasure>; 2],
}

fn pilot<R: Rng + ?Sized>(
    sampler: &DfSampler,
    sets: [&W2Ball; 2],
    opts: &VaradhanOptions,
    rng: &mut R,
) -> Result<Pilot> {
    let cap = opts.max_pair_samples;
    let empty = || Pilot { counts: [0, 0], members: [Vec::new(), Vec::new()] };
    par_chunks(
        draw_seed(rng),
        "varadhan/pilot",
        opts.n_pilot,
        |rng, count| {
            let mut p = empty();
            for _ in 0..count {
                let eta = sampler.sample(rng)?;
                for (k, set) in sets.iter().enumerate() {
                    if set.contains(&eta)? {
                        p.counts[k] += 1;
                        if p.members[k].len() < cap {
                            p.members[k].push(eta.clone());
                        }
                    }
                }
            }
            Ok(p)
        },
        |a, b| {
            merge_results(a, b, |x, y| {
                for (k, ys) in y.members.into_iter().enumerate() {
                    x.counts[k] += y.counts[k];
                    let room = cap - x.members[k].len();
                    x.members[k].extend(ys.into_iter().take(room));
                }
            })
        },
    )
    .unwrap_or_else(|| Ok(empty()))
}

fn min_pair_distance(a: &[AtomicMeasure], b: &[AtomicMeasure]) -> Result<f64> {
    a.par_iter()
        .map(|x| b.iter().try_fold(f64::INFINITY, |acc, y| Ok(acc.min(w2(x, y)?.w2))))
        .try_reduce(|| f64::INFINITY, |p, q| Ok(p.min(q)))
}

/// Monte-Carlo short-time probe of `t log p_t(A₁, A₂) ≤ -½ d(A₁, A₂)²`.
///
/// Paths start from the stationary law; only paths with `η₀ ∈ A₁` are
/// evolved, through the requested times in increasing order. A time with no
/// hit gives an inconclusive check, as does a set with no pilot member.
pub fn varadhan_probe<R: Rng + ?Sized>(
    sampler: &DfSampler,
    a1: &W2Ball,
    a2: &W2Ball,
    t_list: &[f64],
    n: usize,
    opts: &VaradhanOptions,
    rng: &mut R,
) -> Result<VaradhanReport> {
    if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(invalid("Varadhan times must be positive and finite"));
    }
    if n == 0 {
        return Err(invalid("Varadhan probe needs at least one path"));
    }
    if !(0.0..1.0).contains(&opts.slack) {
        return Err(invalid(format!("slack must lie in [0, 1), got {}", opts.slack)));
    }
    let pilot = pilot(sampler, [a1, a2], opts, rng)?;
    let [m1, m2] = &pilot.members;
    let d_hat = if m1.is_empty() || m2.is_empty() { None } else { Some(min_pair_distance(m1, m2)?) };
    let d_lower = (w2(&a1.center, &a2.center)?.w2 - a1.radius - a2.radius).max(0.0);
    let d = d_hat.unwrap_or(d_lower);
    let bound = -0.5 * d * d * (1.0 - opts.slack);

    let mut order: Vec<usize> = (0..t_list.len()).collect();
    order.sort_by(|&i, &j| t_list[i].total_cmp(&t_list[j]));
    let nt = t_list.len();
    let seed = draw_seed(rng);
    let task = "varadhan";
    let hits = par_chunks(
        seed,
        task,
        n,
        |rng, count| {
            let mut hits = vec![0u64; nt];
            for _ in 0..count {
                let mut eta = sampler.sample(rng)?;
                if !a1.contains(&eta)? {
                    continue;
                }
                let mut now = 0.0;
                for &i in &order {
                    if t_list[i] > now {
                        evolve(&mut eta, t_list[i] - now, rng)?;
                        now = t_list[i];
                    }
                    if a2.contains(&eta)? {
                        hits[i] += 1;
                    }
                }
            }
            Ok(hits)
        },
        |a, b| merge_results(a, b, |x, y| x.iter_mut().zip(y).for_each(|(p, q)| *p += q)),
    )
    .unwrap_or_else(|| Ok(vec![0; nt]))?;

    let nf = n as f64;
    let mut report = Report::new(task, seed);
    let mut out = VaradhanReport {
        t: t_list.to_vec(),
        p_hat: Vec::with_capacity(nt),
        stderr: Vec::with_capacity(nt),
        t_log_p: Vec::with_capacity(nt),
        t_log_p_stderr: Vec::with_capacity(nt),
        bound: vec![bound; nt],
        hits: hits.clone(),
        n,
        d_hat,
        d_lower,
        pilot_mass: [pilot.counts[0] as f64 / opts.n_pilot.max(1) as f64, pilot.counts[1] as f64 / opts.n_pilot.max(1) as f64],
        report: Report::default(),
    };
    for (i, &t) in t_list.iter().enumerate() {
        let p = hits[i] as f64 / nf;
        let se = (p * (1.0 - p) / nf).sqrt();
        out.p_hat.push(p);
        out.stderr.push(se);
        let name = format!("{task}/t={t}");
        let check = if hits[i] == 0 {
            out.t_log_p.push(None);
            out.t_log_p_stderr.push(None);
            Check::new(name, 0.0, 0.0, bound, Criterion::UpperBound { k: opts.k }).inconclusive()
        } else {
            let (tl, tl_se) = (t * p.ln(), t * se / p);
            out.t_log_p.push(Some(tl));
            out.t_log_p_stderr.push(Some(tl_se));
            let c = Check::new(name, tl, tl_se, bound, Criterion::UpperBound { k: opts.k });
            if d_hat.is_none() {
                c.inconclusive()
            } else {
                c
            }
        };
        report.push(check);
    }
    out.report = report;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RademacherOptions {
    /// Flow time of the difference quotient.
    pub h: f64,
    /// Curvature allowance: quotients may reach `‖w‖_{L²(η)} (1 + c h)`.
    pub c: f64,
}

impl Default for RademacherOptions {
    fn default() -> Self {
        RademacherOptions { h: 1e-3, c: 10.0 }
    }
}

/// For `u = W₂(·, μ_ref)`, checks `|u(Ψ^{w,h}η) - u(η)| / h ≤ ‖w‖_{L²(η)} (1 + c h)`
/// on `n` stationary draws, for every reference measure and field. Each
/// check reports the largest normalized quotient against `1 + c h`.
pub fn rademacher_probe<R: Rng + ?Sized>(
    sampler: &DfSampler,
    refs: &[AtomicMeasure],
    fields: &[VectorField],
    n: usize,
    opts: &RademacherOptions,
    rng: &mut R,
) -> Result<Report> {
    let m = sampler.manifold;
    m.require_torus("Rademacher flows")?;
    if refs.is_empty() || fields.is_empty() {
        return Err(invalid("Rademacher probe needs at least one reference measure and one field"));
    }
    if !(opts.h > 0.0) {
        return Err(invalid(format!("flow time h must be positive, got {}", opts.h)));
    }
    for w in fields {
        w.check_dim(m.dim)?;
    }
    let flows: Vec<Flow> = fields.iter().map(|w| Flow::new(&m, w.clone())).collect();
    let width = refs.len() * fields.len();
    let seed = draw_seed(rng);
    let task = "rademacher";
    let max = par_chunks(
        seed,
        task,
        n,
        |rng, count| {
            let mut max = vec![0.0f64; width];
            for _ in 0..count {
                let eta = sampler.sample(rng)?;
                let moved: Vec<AtomicMeasure> = flows.iter().map(|f| eta.pushforward(f, opts.h)).collect();
                let norms: Vec<f64> = fields.iter().map(|w| w.sq_norm_weighted(&m, eta.atoms()).sqrt()).collect();
                for (r, mu) in refs.iter().enumerate() {
                    let u0 = w2(&eta, mu)?.w2;
                    for (f, moved) in moved.iter().enumerate() {
                        let du = (w2(moved, mu)?.w2 - u0).abs();
                        let ratio = if norms[f] > 0.0 {
                            du / (opts.h * norms[f])
                        } else if du == 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        };
                        let slot = &mut max[r * fields.len() + f];
                        *slot = slot.max(ratio);
                    }
                }
            }
            Ok(max)
        },
        |a, b| merge_results(a, b, |x, y| x.iter_mut().zip(y).for_each(|(p, q)| *p = p.max(q))),
    )
    .unwrap_or_else(|| Ok(vec![0.0; width]))?;
    let mut report = Report::new(task, seed);
    let target = 1.0 + opts.c * opts.h;
    for r in 0..refs.len() {
        for f in 0..fields.len() {
            let est = max[r * fields.len() + f];
            report.push(Check::new(format!("{task}/ref{r}/field{f}"), est, 0.0, target, Criterion::UpperBound { k: 0.0 }));
        }
    }
    Ok(report)
}
