//! Statistical checks on simulated paths: martingale problem, invariance of
//! the Dirichlet–Ferguson measure, ergodic components and the energy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_grid, map_paths, walk, Initial};
use crate::cylinder::{observe, star, CylinderFunction, TestFunction};
use crate::error::{invalid, Result};
use crate::manifold::TrigFunction;
use crate::random_measures::{AtomicMeasure, DfSampler, WeightVector};
use crate::report::{Check, Criterion, Report, ROUNDOFF};
use crate::rng::draw_seed;
use crate::stats::{try_mc_moments, Moments};

/// Martingale-problem diagnostics on a time grid.
///
/// `M_t = u(η_t) - u(η₀) - ∫₀ᵗ 𝐋u(η_s) ds` with the integral taken by the
/// trapezoid rule on the grid. The realized quadratic variation is
/// `Σ (ΔM)²` over grid steps; the predicted one is `∫₀ᵗ 2Γ(u)(η_s) ds`,
/// i.e. `∫ ⟨∇u, ∇u⟩ dη ds` (Γ carries a factor ½).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub t: Vec<f64>,
    pub mean_m: Vec<f64>,
    pub stderr_m: Vec<f64>,
    pub qv_realized: Vec<f64>,
    pub qv_realized_stderr: Vec<f64>,
    pub qv_predicted: Vec<f64>,
    pub qv_predicted_stderr: Vec<f64>,
    /// Grid index `s` used for `E[(M_T - M_s) g(η_s)]`.
    pub orthogonality_index: usize,
    pub report: Report,
}

struct PathStats {
    m: Vec<f64>,
    qv_real: Vec<f64>,
    qv_pred: Vec<f64>,
    ortho: Vec<f64>,
}

fn collect(stats: impl Iterator<Item = f64>) -> Moments {
    stats.collect()
}

/// Checks `E[M_t] = 0` at every grid time, the realized-vs-predicted
/// quadratic variation at the horizon (relative error at most
/// `qv_tolerance`), and orthogonality of increments against each adapted
/// test function in `adapted`.
#[allow(clippy::too_many_arguments)]
pub fn verify_martingale<R: Rng + ?Sized>(
    sampler: &DfSampler,
    initial: &Initial,
    u: &CylinderFunction,
    adapted: &[CylinderFunction],
    t_grid: &[f64],
    n_paths: usize,
    k: f64,
    qv_tolerance: f64,
    rng: &mut R,
) -> Result<MartingaleReport> {
    check_grid(t_grid)?;
    u.check(&sampler.manifold)?;
    u.check_generator()?;
    for g in adapted {
        g.check(&sampler.manifold)?;
    }
    let seed = draw_seed(rng);
    let task = "martingale";
    let nt = t_grid.len();
    let s_idx = (nt - 1) / 2;
    let paths = map_paths(seed, task, n_paths, |_, rng| {
        let mut state = initial.draw(sampler, rng)?;
        let mut st = PathStats { m: vec![0.0; nt], qv_real: vec![0.0; nt], qv_pred: vec![0.0; nt], ortho: Vec::new() };
        let mut g_at_s = Vec::new();
        let (mut u0, mut prev_l, mut prev_g, mut integral, mut qv_int, mut qv_sum) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        walk(&mut state, t_grid, rng, |i, _, eta| {
            let o = observe(u, eta)?;
            if i == 0 {
                u0 = o.value;
            } else {
                let h = t_grid[i] - t_grid[i - 1];
                integral += 0.5 * h * (prev_l + o.generator);
                qv_int += 0.5 * h * 2.0 * (prev_g + o.gamma);
            }
            st.m[i] = o.value - u0 - integral;
            if i > 0 {
                let dm = st.m[i] - st.m[i - 1];
                qv_sum += dm * dm;
            }
            st.qv_real[i] = qv_sum;
            st.qv_pred[i] = qv_int;
            if i == s_idx {
                g_at_s = adapted.iter().map(|g| g.value(eta)).collect();
            }
            prev_l = o.generator;
            prev_g = o.gamma;
            Ok(())
        })?;
        st.ortho = g_at_s.iter().map(|g| (st.m[nt - 1] - st.m[s_idx]) * g).collect();
        Ok(st)
    })?;

    let per_time = |f: &dyn Fn(&PathStats, usize) -> f64| -> Vec<Moments> {
        (0..nt).map(|i| collect(paths.iter().map(|p| f(p, i)))).collect()
    };
    let m = per_time(&|p, i| p.m[i]);
    let qr = per_time(&|p, i| p.qv_real[i]);
    let qp = per_time(&|p, i| p.qv_pred[i]);

    let mut report = Report::new(task, seed);
    let max_z = m
        .iter()
        .skip(1)
        .map(|mo| {
            if mo.stderr() > 0.0 {
                mo.mean.abs() / mo.stderr()
            } else if mo.mean.abs() <= ROUNDOFF {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    report.push(Check::new(format!("{task}/mean_all_times"), max_z, 0.0, 0.0, Criterion::Absolute { tol: k }));
    let last = &m[nt - 1];
    report.push(Check::sigma(format!("{task}/mean_horizon"), last.mean, last.stderr(), 0.0, k));

    let pred = qp[nt - 1].mean;
    let diff = collect(paths.iter().map(|p| p.qv_real[nt - 1] - p.qv_pred[nt - 1]));
    let (rel, rel_se) = if pred > 0.0 { (diff.mean / pred, diff.stderr() / pred) } else { (diff.mean, diff.stderr()) };
    report.push(Check::new(format!("{task}/qv_relative_error"), rel, rel_se, 0.0, Criterion::Absolute { tol: qv_tolerance }));
    for j in 0..adapted.len() {
        let o = collect(paths.iter().map(|p| p.ortho[j]));
        report.push(Check::sigma(format!("{task}/orthogonality_g{j}"), o.mean, o.stderr(), 0.0, k));
    }
    Ok(MartingaleReport {
        t: t_grid.to_vec(),
        mean_m: m.iter().map(|x| x.mean).collect(),
        stderr_m: m.iter().map(Moments::stderr).collect(),
        qv_realized: qr.iter().map(|x| x.mean).collect(),
        qv_realized_stderr: qr.iter().map(Moments::stderr).collect(),
        qv_predicted: qp.iter().map(|x| x.mean).collect(),
        qv_predicted_stderr: qp.iter().map(Moments::stderr).collect(),
        orthogonality_index: s_idx,
        report,
    })
}

/// Prepends `t = 0` when missing and validates the grid.
fn grid_from_list(t_list: &[f64]) -> Result<Vec<f64>> {
    let mut grid = t_list.to_vec();
    if grid.first() != Some(&0.0) {
        grid.insert(0, 0.0);
    }
    check_grid(&grid)?;
    Ok(grid)
}

/// Stationarity of the Dirichlet–Ferguson measure: for every probe, the
/// first two moments of `f̂★η_t` agree with those at `t = 0` (paired per
/// path), and weights never change.
pub fn verify_invariance<R: Rng + ?Sized>(
    sampler: &DfSampler,
    probes: &[TestFunction],
    t_list: &[f64],
    n_paths: usize,
    k: f64,
    rng: &mut R,
) -> Result<Report> {
    sampler.manifold.require_torus("invariance probes")?;
    for f in probes {
        f.f.check_dim(sampler.manifold.dim)?;
    }
    let grid = grid_from_list(t_list)?;
    let nt = grid.len();
    let np = probes.len();
    let seed = draw_seed(rng);
    let task = "invariance";
    let paths = map_paths(seed, task, n_paths, |_, rng| {
        let mut state = Initial::Stationary.draw(sampler, rng)?;
        let w0 = state.weights().to_vec();
        let mut x0 = vec![0.0; np];
        let mut rows = vec![0.0; 2 * np * nt];
        let mut changed = 0.0;
        walk(&mut state, &grid, rng, |i, _, eta| {
            if eta.weights() != w0.as_slice() {
                changed += 1.0;
            }
            for (j, f) in probes.iter().enumerate() {
                let x = star(f, eta);
                if i == 0 {
                    x0[j] = x;
                }
                rows[2 * (j * nt + i)] = x - x0[j];
                rows[2 * (j * nt + i) + 1] = x * x - x0[j] * x0[j];
            }
            Ok(())
        })?;
        Ok((rows, changed))
    })?;
    let mut report = Report::new(task, seed);
    for (j, _) in probes.iter().enumerate() {
        for (i, t) in grid.iter().enumerate().skip(1) {
            let d1 = collect(paths.iter().map(|p| p.0[2 * (j * nt + i)]));
            let d2 = collect(paths.iter().map(|p| p.0[2 * (j * nt + i) + 1]));
            report.push(Check::sigma(format!("{task}/probe{j}/t={t}/mean"), d1.mean, d1.stderr(), 0.0, k));
            report.push(Check::sigma(format!("{task}/probe{j}/t={t}/second_moment"), d2.mean, d2.stderr(), 0.0, k));
        }
    }
    let changed: f64 = paths.iter().map(|p| p.1).sum();
    report.push(Check::absolute(format!("{task}/weights_frozen"), changed, 0.0, 0.0));
    Ok(report)
}

/// Axis-aligned box `[lo, hi)` in torus coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (l, h))| *l <= *c && *c < *h)
    }

    /// `m̄(A)` on a torus of the given side.
    pub fn volume(&self, side: f64) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l) / side).product()
    }

    fn validate(&self, dim: usize, side: f64) -> Result<()> {
        if self.lo.len() != dim || self.hi.len() != dim {
            return Err(invalid(format!("window corners must have {dim} coordinates")));
        }
        if self.lo.iter().zip(&self.hi).any(|(l, h)| !(0.0 <= *l && l < h && *h <= side)) {
            return Err(invalid(format!("window {:?}..{:?} is not a box inside [0, {side})", self.lo, self.hi)));
        }
        Ok(())
    }
}

/// Ergodic component with fixed weights `s`: starting from i.i.d. uniform
/// locations, `E[η_t A] = |s| m̄(A)` for each window, `E[η_t f] = |s| m̄(f)`
/// for each probe, at every `t`, and weights stay bitwise identical.
#[allow(clippy::too_many_arguments)]
pub fn verify_ergodic_component<R: Rng + ?Sized>(
    sampler: &DfSampler,
    weights: &WeightVector,
    probes: &[TrigFunction],
    windows: &[Window],
    t_list: &[f64],
    n_paths: usize,
    k: f64,
    rng: &mut R,
) -> Result<Report> {
    let m = sampler.manifold;
    m.require_torus("ergodic-component probes")?;
    for f in probes {
        f.check_dim(m.dim)?;
    }
    for w in windows {
        w.validate(m.dim, m.side)?;
    }
    let grid = grid_from_list(t_list)?;
    let nt = grid.len();
    let (np, nw) = (probes.len(), windows.len());
    let width = (np + nw) * nt;
    let seed = draw_seed(rng);
    let task = "ergodic";
    let initial = Initial::FixedWeights(weights.clone());
    let paths = map_paths(seed, task, n_paths, |_, rng| {
        let mut state = initial.draw(sampler, rng)?;
        let mut row = vec![0.0; width];
        let mut changed = 0.0;
        walk(&mut state, &grid, rng, |i, _, eta| {
            if eta.weights() != weights.weights() {
                changed += 1.0;
            }
            for (j, f) in probes.iter().enumerate() {
                row[j * nt + i] = eta.integrate(f);
            }
            for (j, w) in windows.iter().enumerate() {
                row[(np + j) * nt + i] = eta.atoms().filter(|(_, x)| w.contains(x)).map(|(s, _)| s).sum();
            }
            Ok(())
        })?;
        Ok((row, changed))
    })?;
    let mass: f64 = weights.weights().iter().sum();
    let mut report = Report::new(task, seed);
    for (i, t) in grid.iter().enumerate() {
        for (j, f) in probes.iter().enumerate() {
            let mo = collect(paths.iter().map(|p| p.0[j * nt + i]));
            report.push(Check::sigma(format!("{task}/probe{j}/t={t}"), mo.mean, mo.stderr(), mass * f.mean(), k));
        }
        for (j, w) in windows.iter().enumerate() {
            let mo = collect(paths.iter().map(|p| p.0[(np + j) * nt + i]));
            report.push(Check::sigma(format!("{task}/window{j}/t={t}"), mo.mean, mo.stderr(), mass * w.volume(m.side), k));
        }
    }
    let changed: f64 = paths.iter().map(|p| p.1).sum();
    report.push(Check::absolute(format!("{task}/weights_frozen"), changed, 0.0, 0.0));
    Ok(report)
}

/// Monte-Carlo Dirichlet energy `E(u) = E_DF[Γ(u, u)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub energy: f64,
    pub stderr: f64,
    /// `-E_DF[u 𝐋u]`, which must agree with `energy`.
    pub minus_u_lu: f64,
    pub minus_u_lu_stderr: f64,
    pub report: Report,
}

/// Estimates `E(u)` and cross-checks it against `-E[u 𝐋u]` with paired draws.
pub fn dirichlet_energy<R: Rng + ?Sized>(
    sampler: &DfSampler,
    u: &CylinderFunction,
    n: usize,
    k: f64,
    rng: &mut R,
) -> Result<EnergyEstimate> {
    u.check(&sampler.manifold)?;
    u.check_generator()?;
    let seed = draw_seed(rng);
    let task = "energy";
    let bank = try_mc_moments(seed, task, n, 3, |rng, bank| {
        let eta: AtomicMeasure = sampler.sample(rng)?;
        let o = observe(u, &eta)?;
        bank.push(0, o.gamma);
        bank.push(1, -o.value * o.generator);
        bank.push(2, o.gamma + o.value * o.generator);
        Ok(())
    })?;
    let (g, ul, d) = (bank.get(0), bank.get(1), bank.get(2));
    let mut report = Report::new(task, seed);
    report.push(Check::sigma(format!("{task}/cross_check"), d.mean, d.stderr(), 0.0, k));
    Ok(EnergyEstimate {
        energy: g.mean,
        stderr: g.stderr(),
        minus_u_lu: ul.mean,
        minus_u_lu_stderr: ul.stderr(),
        report,
    })
}
