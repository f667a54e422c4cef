//! Pathwise simulation of the truncated Dirichlet–Ferguson diffusion.
//!
//! The state is an atomic measure `η_t = Σ s_i δ_{x_i(t)}` whose masses are
//! frozen while atom `i` runs a Brownian motion observed at time `t/s_i`.
//! On the torus every transition is exact, so the time grid only affects
//! quantities integrated along paths.
//!
//! Each path `p` draws from its own stream `(seed, task, p)`; path results
//! are collected in index order, so outputs do not depend on the thread
//! count.

mod verify;

use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::random_measures::{AtomicMeasure, DfSampler, WeightVector};
use crate::rng::{draw_seed, substream, SimRng};

pub use verify::{
    dirichlet_energy, verify_ergodic_component, verify_invariance, verify_martingale, EnergyEstimate,
    MartingaleReport, Window,
};

/// Advances every atom by a Brownian increment of duration `dt / s_i`, in
/// place. Zero-weight atoms stay where they are.
pub fn evolve<R: Rng + ?Sized>(state: &mut AtomicMeasure, dt: f64, rng: &mut R) -> Result<()> {
    if !(dt > 0.0) {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    let m = *state.manifold();
    let d = state.dim();
    let weights = state.weights().to_vec();
    let coords = state.coords_mut();
    let mut out = vec![0.0; d];
    for (i, s) in weights.iter().enumerate() {
        if *s == 0.0 {
            continue;
        }
        let x = &mut coords[i * d..(i + 1) * d];
        m.brownian_increment(x, dt / s, rng, &mut out)?;
        x.copy_from_slice(&out);
    }
    Ok(())
}

/// One transition of length `dt`.
pub fn step<R: Rng + ?Sized>(state: &AtomicMeasure, dt: f64, rng: &mut R) -> Result<AtomicMeasure> {
    let mut next = state.clone();
    evolve(&mut next, dt, rng)?;
    Ok(next)
}

/// Law of the initial state.
#[derive(Clone, Debug, PartialEq)]
pub enum Initial {
    /// `η₀ ~` Dirichlet–Ferguson, drawn independently per path.
    Stationary,
    /// A fixed measure shared by all paths.
    Fixed(AtomicMeasure),
    /// Fixed weights with i.i.d. uniform locations per path.
    FixedWeights(WeightVector),
}

impl Initial {
    pub fn draw<R: Rng + ?Sized>(&self, sampler: &DfSampler, rng: &mut R) -> Result<AtomicMeasure> {
        match self {
            Initial::Stationary => sampler.sample(rng),
            Initial::Fixed(eta) => Ok(eta.clone()),
            Initial::FixedWeights(w) => AtomicMeasure::with_uniform_locations(sampler.manifold, w.clone(), rng),
        }
    }
}

/// Validates a time grid: starts at 0, strictly increasing, finite.
pub fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.first() != Some(&0.0) {
        return Err(invalid("time grid must start at 0"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(invalid("time grid must be strictly increasing and finite"));
    }
    Ok(())
}

/// Uniform grid `0, dt, 2dt, …` up to `horizon` (the last point is the horizon).
pub fn uniform_grid(dt: f64, horizon: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(invalid("grid step and horizon must be positive"));
    }
    let n = (horizon / dt).round().max(1.0) as usize;
    Ok((0..=n).map(|i| horizon * i as f64 / n as f64).collect())
}

/// Evolves `state` along the grid, calling `visit(index, t, state)` at
/// every grid point including `t = 0`.
pub fn walk<R, F>(state: &mut AtomicMeasure, t_grid: &[f64], rng: &mut R, mut visit: F) -> Result<()>
where
    R: Rng + ?Sized,
    F: FnMut(usize, f64, &AtomicMeasure) -> Result<()>,
{
    for (i, &t) in t_grid.iter().enumerate() {
        if i > 0 {
            evolve(state, t - t_grid[i - 1], rng)?;
        }
        visit(i, t, state)?;
    }
    Ok(())
}

/// Runs `f(path_index, rng)` for every path in parallel and returns the
/// results in path order.
pub fn map_paths<T, F>(seed: u64, task: &str, n_paths: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut SimRng) -> Result<T> + Sync,
{
    (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = substream(seed, task, p as u64);
            f(p, &mut rng)
        })
        .collect()
}

/// Stored trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationPath {
    pub t_grid: Vec<f64>,
    pub states: Vec<AtomicMeasure>,
    /// Base seed of the run.
    pub seed: u64,
    /// Index of the path's random stream.
    pub stream: u64,
}

/// Simulates `n_paths` independent paths on `t_grid`, storing every state.
pub fn simulate<R: Rng + ?Sized>(
    sampler: &DfSampler,
    initial: &Initial,
    t_grid: &[f64],
    n_paths: usize,
    rng: &mut R,
) -> Result<Vec<SimulationPath>> {
    check_grid(t_grid)?;
    let seed = draw_seed(rng);
    map_paths(seed, "simulate", n_paths, |p, rng| {
        let mut state = initial.draw(sampler, rng)?;
        let mut states = Vec::with_capacity(t_grid.len());
        walk(&mut state, t_grid, rng, |_, _, s| {
            states.push(s.clone());
            Ok(())
        })?;
        Ok(SimulationPath { t_grid: t_grid.to_vec(), states, seed, stream: p as u64 })
    })
}

/// Path dump with columns `path_id,t,atom_id,weight,coord_1..coord_d`.
pub fn write_paths_csv<W: Write>(paths: &[SimulationPath], mut w: W) -> Result<()> {
    let d = paths.first().and_then(|p| p.states.first()).map_or(0, AtomicMeasure::dim);
    let coords: Vec<String> = (1..=d).map(|j| format!("coord_{j}")).collect();
    writeln!(w, "path_id,t,atom_id,weight,{}", coords.join(","))?;
    for (pid, path) in paths.iter().enumerate() {
        for (t, state) in path.t_grid.iter().zip(&path.states) {
            for (a, (s, x)) in state.atoms().enumerate() {
                let xs: Vec<String> = x.iter().map(|c| format!("{c:e}")).collect();
                writeln!(w, "{pid},{t:e},{a},{s:e},{}", xs.join(","))?;
            }
        }
    }
    Ok(())
}

/// One row of a path dump.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRow {
    pub path_id: usize,
    pub t: f64,
    pub atom_id: usize,
    pub weight: f64,
    pub coords: Vec<f64>,
}

/// Parses a dump written by [`write_paths_csv`], validating the header.
pub fn read_paths_csv<R: BufRead>(r: R) -> Result<Vec<PathRow>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty path file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let fixed = ["path_id", "t", "atom_id", "weight"];
    if cols.len() < 5 || cols[..4] != fixed {
        return Err(Error::Parse(format!("unexpected path header {header:?}")));
    }
    let d = cols.len() - 4;
    if cols[4..].iter().enumerate().any(|(j, c)| *c != format!("coord_{}", j + 1)) {
        return Err(Error::Parse(format!("unexpected coordinate columns in {header:?}")));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 4 + d {
            return Err(Error::Parse(format!("line {}: expected {} fields, got {}", n + 2, 4 + d, f.len())));
        }
        let bad = |e: String| Error::Parse(format!("line {}: {e}", n + 2));
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(e.to_string()));
        let idx = |s: &str| s.parse::<usize>().map_err(|e| bad(e.to_string()));
        rows.push(PathRow {
            path_id: idx(f[0])?,
            t: num(f[1])?,
            atom_id: idx(f[2])?,
            weight: num(f[3])?,
            coords: f[4..].iter().map(|s| num(s)).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests;
