//! Exact quadratic optimal transport between atomic measures, and the
//! short-time and Lipschitz probes built on it.
//!
//! `W₂(μ, ν)² = min_π Σ π_ij d(x_i, y_j)²` over couplings of the two weight
//! vectors, solved exactly as a transportation linear program. No entropic
//! regularization is involved, so costs are exact to round-off.

mod probes;
pub(crate) mod simplex;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::random_measures::AtomicMeasure;

pub use probes::{rademacher_probe, varadhan_probe, RademacherOptions, VaradhanOptions, VaradhanReport};
pub use simplex::solve as solve_transport;

/// Largest tolerated difference between the two total masses.
pub const MASS_MISMATCH: f64 = 1e-8;

/// Largest support product `m·n` accepted by [`w2`].
pub const MAX_CELLS: usize = 1_000_000;

/// Mass moved from source atom `i` to target atom `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
    /// `mass · d(x_i, y_j)²`.
    pub cost_contrib: f64,
}

/// Optimal coupling with its squared-distance cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    pub cost: f64,
    pub w2: f64,
}

impl TransportPlan {
    fn from_entries(entries: Vec<PlanEntry>) -> Self {
        let cost = entries.iter().map(|e| e.cost_contrib).sum::<f64>().max(0.0);
        TransportPlan { entries, cost, w2: cost.sqrt() }
    }

    pub fn row_sums(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for e in &self.entries {
            out[e.i] += e.mass;
        }
        out
    }

    pub fn col_sums(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for e in &self.entries {
            out[e.j] += e.mass;
        }
        out
    }

    /// Largest deviation of the plan's marginals from the weights of `μ` and `ν`.
    pub fn marginal_error(&self, mu: &AtomicMeasure, nu: &AtomicMeasure) -> f64 {
        let dev = |sums: Vec<f64>, w: &[f64]| sums.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        dev(self.row_sums(mu.len()), mu.weights()).max(dev(self.col_sums(nu.len()), nu.weights()))
    }

    /// CSV with columns `i,j,mass,cost_contrib`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,j,mass,cost_contrib")?;
        for e in &self.entries {
            writeln!(w, "{},{},{:e},{:e}", e.i, e.j, e.mass, e.cost_contrib)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty plan file".into()))??;
        if header.trim() != "i,j,mass,cost_contrib" {
            return Err(Error::Parse(format!("unexpected plan header {header:?}")));
        }
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.trim().split(',').collect();
            let bad = |e: String| Error::Parse(format!("line {}: {e}", n + 2));
            if f.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", f.len())));
            }
            entries.push(PlanEntry {
                i: f[0].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                j: f[1].parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                mass: f[2].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                cost_contrib: f[3].parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            });
        }
        Ok(Self::from_entries(entries))
    }
}

/// Exact `W₂` plan between two atomic measures of equal mass.
///
/// Zero-weight atoms are ignored; plan indices refer to the atoms of the
/// inputs. Target weights are rescaled to the source total before solving,
/// so mismatches up to [`MASS_MISMATCH`] are absorbed in the columns.
pub fn w2(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<TransportPlan> {
    let m = mu.manifold();
    if m != nu.manifold() {
        return Err(invalid("W2 needs both measures on the same manifold"));
    }
    let (ta, tb) = (mu.weights().iter().sum::<f64>(), nu.weights().iter().sum::<f64>());
    if (ta - tb).abs() > MASS_MISMATCH {
        return Err(Error::MassMismatch(ta, tb));
    }
    let rows: Vec<usize> = (0..mu.len()).filter(|&i| mu.weights()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..nu.len()).filter(|&j| nu.weights()[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(invalid("W2 needs at least one atom of positive weight on each side"));
    }
    if rows.len() * cols.len() > MAX_CELLS {
        return Err(invalid(format!("supports {}×{} exceed the dense solver limit", rows.len(), cols.len())));
    }
    let dist = |i: usize, j: usize| m.distance_sq(mu.location(i), nu.location(j));
    let entry = |i: usize, j: usize, mass: f64| PlanEntry { i, j, mass, cost_contrib: mass * dist(i, j) };
    let scale = ta / tb;
    let b: Vec<f64> = cols.iter().map(|&j| nu.weights()[j] * scale).collect();
    let entries = if rows.len() == 1 {
        cols.iter().zip(&b).map(|(&j, &x)| entry(rows[0], j, x)).collect()
    } else if cols.len() == 1 {
        rows.iter().map(|&i| entry(i, cols[0], mu.weights()[i])).collect()
    } else {
        let a: Vec<f64> = rows.iter().map(|&i| mu.weights()[i]).collect();
        let cost: Vec<f64> = rows.iter().flat_map(|&i| cols.iter().map(move |&j| (i, j))).map(|(i, j)| dist(i, j)).collect();
        simplex::solve(&a, &b, &cost)?.into_iter().map(|(i, j, x)| entry(rows[i], cols[j], x)).collect()
    };
    Ok(TransportPlan::from_entries(entries))
}

/// `W₂`-ball `{η : W₂(η, center) ≤ radius}`.
#[derive(Clone, Debug, PartialEq)]
pub struct W2Ball {
    pub center: AtomicMeasure,
    pub radius: f64,
}

impl W2Ball {
    pub fn new(center: AtomicMeasure, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(invalid(format!("ball radius must be finite and nonnegative, got {radius}")));
        }
        Ok(W2Ball { center, radius })
    }

    pub fn contains(&self, eta: &AtomicMeasure) -> Result<bool> {
        Ok(w2(eta, &self.center)?.w2 <= self.radius)
    }
}
