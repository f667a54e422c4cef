//! Finite atomic measures `η = Σ s_i δ_{x_i}` and their file formats.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{WeightVector, MASS_TOLERANCE};
use crate::error::{invalid, Error, Result};
use crate::manifold::{Flow, Manifold, TrigFunction};

/// Weighted atoms on a manifold. Locations are stored flat, `coord_len`
/// numbers per atom; torus coordinates are kept in `[0, side)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    manifold: Manifold,
    weights: Vec<f64>,
    tail: f64,
    coords: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    weights: Vec<f64>,
    #[serde(default)]
    tail: f64,
    locations: Vec<Vec<f64>>,
}

impl AtomicMeasure {
    pub fn new(manifold: Manifold, weights: Vec<f64>, tail: f64, locations: Vec<Vec<f64>>) -> Result<Self> {
        let d = manifold.coord_len();
        if weights.len() != locations.len() {
            return Err(invalid(format!("{} weights but {} locations", weights.len(), locations.len())));
        }
        if let Some(p) = locations.iter().find(|p| p.len() != d) {
            return Err(invalid(format!("location {p:?} does not have {d} coordinates")));
        }
        let wv = WeightVector::new(weights, tail)?;
        let coords = locations.concat();
        Self::from_parts(manifold, wv, coords)
    }

    /// Builds from validated weights and flat coordinates, wrapping torus
    /// coordinates and rejecting repeated locations.
    pub fn from_parts(manifold: Manifold, weights: WeightVector, mut coords: Vec<f64>) -> Result<Self> {
        let d = manifold.coord_len();
        if coords.len() != weights.len() * d {
            return Err(invalid(format!("expected {} coordinates, got {}", weights.len() * d, coords.len())));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        if manifold.is_torus() {
            manifold.wrap(&mut coords);
        } else {
            for p in coords.chunks(d) {
                let r2: f64 = p.iter().map(|c| c * c).sum();
                if (r2 - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("sphere point {p:?} is not a unit vector")));
                }
            }
        }
        if let Some((i, j)) = find_duplicate(&coords, d) {
            return Err(Error::DuplicateLocation(i, j));
        }
        let (weights, tail) = weights.into_parts();
        Ok(AtomicMeasure { manifold, weights, tail, coords })
    }

    pub fn with_uniform_locations<R: Rng + ?Sized>(manifold: Manifold, weights: WeightVector, rng: &mut R) -> Result<Self> {
        let d = manifold.coord_len();
        let mut coords = vec![0.0; weights.len() * d];
        for p in coords.chunks_mut(d) {
            manifold.sample_uniform(rng, p);
        }
        Self::from_parts(manifold, weights, coords)
    }

    pub fn dirac(manifold: Manifold, x: &[f64]) -> Result<Self> {
        Self::new(manifold, vec![1.0], 0.0, vec![x.to_vec()])
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.manifold.coord_len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Mass carried by the atoms (excludes the tail).
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn weight_vector(&self) -> WeightVector {
        WeightVector::new(self.weights.clone(), self.tail).expect("validated on construction")
    }

    pub fn location(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Mutable coordinates for in-place evolution; callers keep points on
    /// the manifold.
    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn locations(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim())
    }

    /// `(s_i, x_i)` pairs.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.weights.iter().copied().zip(self.coords.chunks(self.manifold.coord_len()))
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// `∫ f dη = Σ s_i f(x_i)`.
    pub fn integrate(&self, f: &TrigFunction) -> f64 {
        self.atoms().map(|(s, x)| s * f.value(&self.manifold, x)).sum()
    }

    /// `η^x_r = (1 - r)η + r δ_x`; the new atom is appended last.
    pub fn relocate(&self, x: &[f64], r: f64) -> Result<AtomicMeasure> {
        if !(0.0..=1.0).contains(&r) {
            return Err(invalid(format!("relocation weight {r} outside [0, 1]")));
        }
        let d = self.dim();
        if x.len() != d {
            return Err(invalid(format!("point has {} coordinates, expected {d}", x.len())));
        }
        let mut p = x.to_vec();
        self.manifold.wrap(&mut p);
        if let Some(i) = self.locations().position(|y| y == p.as_slice()) {
            return Err(Error::DuplicateLocation(i, self.len()));
        }
        let mut weights: Vec<f64> = self.weights.iter().map(|s| (1.0 - r) * s).collect();
        weights.push(r);
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&p);
        Ok(AtomicMeasure { manifold: self.manifold, weights, tail: (1.0 - r) * self.tail, coords })
    }

    /// Image measure under the time-`t` flow map: atoms move, masses stay.
    pub fn pushforward(&self, flow: &Flow, t: f64) -> AtomicMeasure {
        let mut out = self.clone();
        let d = self.dim();
        for (i, x) in self.locations().enumerate() {
            let (y, _) = flow.map(t, x);
            out.coords[i * d..(i + 1) * d].copy_from_slice(&y);
        }
        out
    }

    /// Same weights, new flat coordinates.
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<AtomicMeasure> {
        Self::from_parts(self.manifold, self.weight_vector(), coords)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(Record {
            weights: self.weights.clone(),
            tail: self.tail,
            locations: self.locations().map(<[f64]>::to_vec).collect(),
        })
        .expect("plain numeric record")
    }

    pub fn from_json(manifold: Manifold, value: serde_json::Value) -> Result<Self> {
        let r: Record = serde_json::from_value(value)?;
        Self::new(manifold, r.weights, r.tail, r.locations)
    }

    /// CSV rows `index,weight,coord_1,…,coord_d` under a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim();
        let coords: Vec<String> = (1..=d).map(|j| format!("coord_{j}")).collect();
        writeln!(w, "index,weight,{}", coords.join(","))?;
        for (i, (s, x)) in self.atoms().enumerate() {
            let xs: Vec<String> = x.iter().map(|c| format!("{c:e}")).collect();
            writeln!(w, "{i},{s:e},{}", xs.join(","))?;
        }
        Ok(())
    }

    /// Reads the CSV written by [`AtomicMeasure::write_csv`]. The tail is
    /// whatever mass the rows leave unassigned.
    pub fn read_csv<B: BufRead>(manifold: Manifold, input: B) -> Result<Self> {
        let d = manifold.coord_len();
        let mut lines = input.lines();
        let header = lines.next().transpose()?.ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() != d + 2 || cols[0] != "index" || cols[1] != "weight" {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let (mut weights, mut locations) = (Vec::new(), Vec::new());
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", n + 1)))?;
            if vals.len() != d + 2 {
                return Err(Error::Parse(format!("row {} has {} fields, expected {}", n + 1, vals.len(), d + 2)));
            }
            weights.push(vals[1]);
            locations.push(vals[2..].to_vec());
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + MASS_TOLERANCE {
            return Err(invalid(format!("weights sum to {total} > 1")));
        }
        Self::new(manifold, weights, (1.0 - total).max(0.0), locations)
    }
}

/// First pair of atoms with bitwise-identical coordinates.
fn find_duplicate(coords: &[f64], d: usize) -> Option<(usize, usize)> {
    let n = if d == 0 { 0 } else { coords.len() / d };
    let mut idx: Vec<usize> = (0..n).collect();
    let key = |i: usize| &coords[i * d..(i + 1) * d];
    idx.sort_by(|&a, &b| {
        key(a)
            .iter()
            .zip(key(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx.windows(2).find(|w| key(w[0]) == key(w[1])).map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}
