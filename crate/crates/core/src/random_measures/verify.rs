//! Monte-Carlo verifiers for the sampler and its characterising identities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_sticks, stick_break, AtomicMeasure, DfSampler};
use crate::error::{invalid, Result};
use crate::manifold::{Manifold, TrigFunction};
use crate::report::{Check, Criterion, Report};
use crate::rng::{draw_seed, SimRng};
use crate::stats::{ks_critical, ks_two_sample, merge_results, par_chunks, try_mc_moments, MomentBank};

/// `E[r^k]` for `r ~ Beta(1, β)`.
pub fn beta_moment(beta: f64, k: u32) -> f64 {
    (1..=k).map(|j| j as f64 / (beta + j as f64)).product()
}

fn poly(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

/// Stick-breaking exactness and truncation control for `n_sticks` sticks.
///
/// `E[tail] = (β/(1+β))^n` is estimated by the product of per-stick means
/// of `1 - r_i`, which is unbiased because sticks are independent; the
/// plain sample mean of the tail has relative variance
/// `(1 + 1/(β(β+2)))^n` and is useless at realistic `n`. The tail produced
/// by [`stick_break`] is checked through `E[ln tail] = -n/β`.
pub fn verify_stick_breaking<R: Rng + ?Sized>(
    beta: f64,
    n_sticks: usize,
    n: usize,
    k: f64,
    rng: &mut R,
) -> Result<Report> {
    if !(beta > 0.0) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    let seed = draw_seed(rng);
    let task = "stick-breaking";
    let width = n_sticks + 1;
    let out = par_chunks(
        seed,
        task,
        n,
        |rng, count| -> Result<(MomentBank, f64)> {
            let mut bank = MomentBank::new(width);
            let mut worst: f64 = 0.0;
            for _ in 0..count {
                let r = sample_sticks(beta, n_sticks, rng)?;
                let wv = stick_break(&r)?;
                worst = worst.max((wv.total() - 1.0).abs());
                for (i, ri) in r.iter().enumerate() {
                    bank.push(i, 1.0 - ri);
                }
                bank.push(n_sticks, wv.tail().ln());
            }
            Ok((bank, worst))
        },
        |a, b| {
            merge_results(a, b, |x, y| {
                x.0.merge(&y.0);
                x.1 = x.1.max(y.1);
            })
        },
    )
    .unwrap_or_else(|| Ok((MomentBank::new(width), 0.0)));
    let (bank, worst) = out?;
    let mut report = Report::new(task, seed);
    report.push(Check::absolute(format!("{task}/sum_identity"), worst, 0.0, 1e-12));
    let (mut est, mut rel_var) = (1.0, 0.0);
    for i in 0..n_sticks {
        let m = bank.get(i);
        est *= m.mean;
        rel_var += (m.stderr() / m.mean).powi(2);
    }
    let target = (beta / (1.0 + beta)).powi(n_sticks as i32);
    report.push(Check::sigma(format!("{task}/mean_tail"), est, est * rel_var.sqrt(), target, k));
    let lt = bank.get(n_sticks);
    report.push(Check::sigma(format!("{task}/mean_log_tail"), lt.mean, lt.stderr(), -(n_sticks as f64) / beta, k));
    Ok(report)
}

/// Mean-zero probe on the manifold used by [`verify_df_sampler`].
fn centered_probe(m: &Manifold, x: &[f64]) -> f64 {
    if m.is_torus() {
        (2.0 * std::f64::consts::PI * x[0] / m.side).cos()
    } else {
        x[2]
    }
}

/// Basic distributional checks of the sampler: mass identity, `E Σ s_i² =
/// 1/(1+β)`, `E[∫ f dη] = m̄ f` for a mean-zero `f`, and strict ordering.
pub fn verify_df_sampler<R: Rng + ?Sized>(sampler: &DfSampler, n: usize, k: f64, rng: &mut R) -> Result<Report> {
    let seed = draw_seed(rng);
    let task = "sample-df";
    let m = sampler.manifold;
    let out = par_chunks(
        seed,
        task,
        n,
        |rng, count| -> Result<(MomentBank, f64, u64)> {
            let mut bank = MomentBank::new(2);
            let (mut worst, mut ties) = (0.0f64, 0u64);
            for _ in 0..count {
                let eta = sampler.sample(rng)?;
                worst = worst.max((eta.mass() + eta.tail() - 1.0).abs());
                ties += eta.weights().windows(2).filter(|w| w[0] <= w[1]).count() as u64;
                bank.push(0, eta.weights().iter().map(|s| s * s).sum());
                bank.push(1, eta.atoms().map(|(s, x)| s * centered_probe(&m, x)).sum());
            }
            Ok((bank, worst, ties))
        },
        |a, b| {
            merge_results(a, b, |x, y| {
                x.0.merge(&y.0);
                x.1 = x.1.max(y.1);
                x.2 += y.2;
            })
        },
    )
    .unwrap_or_else(|| Ok((MomentBank::new(2), 0.0, 0)));
    let (bank, worst, ties) = out?;
    let beta = sampler.beta();
    let mut report = Report::new(task, seed);
    report.push(Check::absolute(format!("{task}/sum_to_one"), worst, 0.0, 1e-12));
    let s2 = bank.get(0);
    report.push(Check::sigma(format!("{task}/second_moment"), s2.mean, s2.stderr(), 1.0 / (1.0 + beta), k));
    let f = bank.get(1);
    report.push(Check::sigma(format!("{task}/mean_probe"), f.mean, f.stderr(), 0.0, k));
    report.push(Check::absolute(format!("{task}/ties"), ties as f64, 0.0, 0.0));
    Ok(report)
}

/// Product-form Mecke probe `u(η, x, r) = f(x) · ρ(r) · G(η)` with
/// `ρ` a polynomial (coefficients in increasing degree) and `G = g★η`, or
/// `G ≡ 1` when `g` is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeckeProbe {
    pub name: String,
    pub f: TrigFunction,
    #[serde(default = "unit_poly")]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub g: Option<TrigFunction>,
}

fn unit_poly() -> Vec<f64> {
    vec![1.0]
}

impl MeckeProbe {
    pub fn new(name: impl Into<String>, f: TrigFunction, rho: Vec<f64>, g: Option<TrigFunction>) -> Self {
        MeckeProbe { name: name.into(), f, rho, g }
    }

    fn outer(&self, eta: &AtomicMeasure) -> f64 {
        self.g.as_ref().map_or(1.0, |g| eta.integrate(g))
    }

    /// `∫ u(η, x, η_x) dη(x)`.
    pub fn lhs(&self, eta: &AtomicMeasure) -> f64 {
        let m = eta.manifold();
        let inner: f64 = eta.atoms().map(|(s, x)| s * self.f.value(m, x) * poly(&self.rho, s)).sum();
        inner * self.outer(eta)
    }

    /// `u(η^x_r, x, r)`.
    pub fn rhs(&self, eta: &AtomicMeasure, x: &[f64], r: f64) -> Result<f64> {
        let m = eta.manifold();
        let g = match &self.g {
            Some(_) => self.outer(&eta.relocate(x, r)?),
            None => 1.0,
        };
        Ok(self.f.value(m, x) * poly(&self.rho, r) * g)
    }

    /// Closed form of the right-hand side for the untruncated measure:
    /// `E[f(x)ρ(r)((1-r) g★η + r g(x))]` with `x`, `r`, `η` independent.
    pub fn closed_form(&self, beta: f64) -> f64 {
        let e_rho = |shift: u32| -> f64 {
            self.rho.iter().enumerate().map(|(j, c)| c * beta_moment(beta, j as u32 + shift)).sum()
        };
        match &self.g {
            None => self.f.mean() * e_rho(0),
            Some(g) => (e_rho(0) - e_rho(1)) * self.f.mean() * g.mean() + e_rho(1) * self.f.mean_product(g),
        }
    }
}

fn check_probe_dims(m: &Manifold, fs: &[&TrigFunction]) -> Result<()> {
    m.require_torus("trigonometric probes")?;
    fs.iter().try_for_each(|f| f.check_dim(m.dim))
}

/// Mecke identity `E ∫ u(η, x, η_x) dη(x) = E ∫∫ u(η^x_r, x, r) dB_β(r) dm̄(x)`
/// for each probe, estimated from paired draws `(η, x, r)`.
///
/// Per probe the report holds the identity check `mecke/<name>` and the
/// agreement of each side with [`MeckeProbe::closed_form`].
pub fn verify_mecke<R: Rng + ?Sized>(
    sampler: &DfSampler,
    probes: &[MeckeProbe],
    n: usize,
    k: f64,
    rng: &mut R,
) -> Result<Report> {
    let m = sampler.manifold;
    let fs: Vec<&TrigFunction> = probes.iter().flat_map(|p| std::iter::once(&p.f).chain(p.g.as_ref())).collect();
    check_probe_dims(&m, &fs)?;
    let seed = draw_seed(rng);
    let task = "mecke";
    let width = 3 * probes.len();
    let sample = |rng: &mut SimRng, bank: &mut MomentBank| -> Result<()> {
        let eta = sampler.sample(rng)?;
        let mut x = vec![0.0; m.coord_len()];
        m.sample_uniform(rng, &mut x);
        let r = sample_sticks(m.beta, 1, rng)?[0];
        for (j, p) in probes.iter().enumerate() {
            let lhs = p.lhs(&eta);
            let rhs = p.rhs(&eta, &x, r)?;
            bank.push(3 * j, lhs);
            bank.push(3 * j + 1, rhs);
            bank.push(3 * j + 2, lhs - rhs);
        }
        Ok(())
    };
    let bank = try_mc_moments(seed, task, n, width, sample)?;
    let mut report = Report::new(task, seed);
    for (j, p) in probes.iter().enumerate() {
        let (l, r, d) = (bank.get(3 * j), bank.get(3 * j + 1), bank.get(3 * j + 2));
        let exact = p.closed_form(m.beta);
        report.push(Check::sigma(format!("{task}/{}", p.name), d.mean, d.stderr(), 0.0, k));
        report.push(Check::sigma(format!("{task}/{}/lhs_closed_form", p.name), l.mean, l.stderr(), exact, k));
        report.push(Check::sigma(format!("{task}/{}/rhs_closed_form", p.name), r.mean, r.stderr(), exact, k));
    }
    Ok(report)
}

/// How [`verify_sethuraman`] draws the relocation weight `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SethuramanMode {
    /// `r ~ Beta(1, β)`: the identity must hold.
    Identity,
    /// `r ~ Beta(1, β')` with `β' ≠ β`: second-moment gaps must be detected
    /// beyond `k` standard errors.
    NegativeControl { relocation_beta: f64 },
}

/// Fixed-point check `f★η =ᵈ f★η^x_r`.
///
/// Moment gaps use the paired differences `f★η - f★η^x_r` and
/// `(f★η)² - (f★η^x_r)²` from the same draw. The KS statistic compares
/// `f★η` from even-indexed draws with `f★η^x_r` from odd-indexed draws, so
/// the two samples are independent.
pub fn verify_sethuraman<R: Rng + ?Sized>(
    sampler: &DfSampler,
    probes: &[TrigFunction],
    n: usize,
    k: f64,
    mode: SethuramanMode,
    rng: &mut R,
) -> Result<Report> {
    let m = sampler.manifold;
    check_probe_dims(&m, &probes.iter().collect::<Vec<_>>())?;
    let reloc_beta = match mode {
        SethuramanMode::Identity => m.beta,
        SethuramanMode::NegativeControl { relocation_beta } => relocation_beta,
    };
    let seed = draw_seed(rng);
    let task = "sethuraman";
    let p = probes.len();
    type Acc = (MomentBank, Vec<Vec<f64>>, Vec<Vec<f64>>);
    let out = par_chunks(
        seed,
        task,
        n,
        |rng, count| -> Result<Acc> {
            let mut bank = MomentBank::new(2 * p);
            let mut even = vec![Vec::with_capacity(count / 2 + 1); p];
            let mut odd = vec![Vec::with_capacity(count / 2 + 1); p];
            let mut x = vec![0.0; m.coord_len()];
            for i in 0..count {
                let eta = sampler.sample(rng)?;
                m.sample_uniform(rng, &mut x);
                let r = sample_sticks(reloc_beta, 1, rng)?[0];
                let moved = eta.relocate(&x, r)?;
                for (j, f) in probes.iter().enumerate() {
                    let a = eta.integrate(f);
                    let b = moved.integrate(f);
                    bank.push(2 * j, a - b);
                    bank.push(2 * j + 1, a * a - b * b);
                    if i % 2 == 0 {
                        even[j].push(a);
                    } else {
                        odd[j].push(b);
                    }
                }
            }
            Ok((bank, even, odd))
        },
        |acc, next| {
            merge_results(acc, next, |a, b| {
                a.0.merge(&b.0);
                for (x, y) in a.1.iter_mut().zip(b.1) {
                    x.extend(y);
                }
                for (x, y) in a.2.iter_mut().zip(b.2) {
                    x.extend(y);
                }
            })
        },
    )
    .unwrap_or_else(|| Ok((MomentBank::new(2 * p), vec![Vec::new(); p], vec![Vec::new(); p])));
    let (bank, even, odd) = out?;
    let mut report = Report::new(task, seed);
    for (j, f) in probes.iter().enumerate() {
        let (d1, d2) = (bank.get(2 * j), bank.get(2 * j + 1));
        match mode {
            SethuramanMode::Identity => {
                report.push(Check::sigma(format!("{task}/probe{j}/mean"), d1.mean, d1.stderr(), 0.0, k));
                report.push(Check::sigma(format!("{task}/probe{j}/second_moment"), d2.mean, d2.stderr(), 0.0, k));
                if !f.is_constant() && !even[j].is_empty() && !odd[j].is_empty() {
                    let (na, nb) = (even[j].len() as f64, odd[j].len() as f64);
                    let stat = ks_two_sample(&even[j], &odd[j]);
                    let crit = ks_critical(na * nb / (na + nb), 1e-3);
                    report.push(Check::new(format!("{task}/probe{j}/ks"), stat, 0.0, crit, Criterion::UpperBound { k: 0.0 }));
                }
            }
            SethuramanMode::NegativeControl { .. } => {
                if !f.is_constant() {
                    report.push(Check::new(
                        format!("{task}/probe{j}/second_moment_detected"),
                        d2.mean,
                        d2.stderr(),
                        0.0,
                        Criterion::Detect { k },
                    ));
                }
            }
        }
    }
    Ok(report)
}
