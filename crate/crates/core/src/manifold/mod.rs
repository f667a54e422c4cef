//! Geometry backends.
//!
//! The flat torus `T^d = (ℝ/Lℤ)^d` is the reference backend: its Brownian
//! motion and heat kernel are sampled and evaluated exactly. A metric scale
//! `a` replaces the flat metric `g` by `a·g`; coordinates are unchanged, so a
//! scaled torus is isometric to a torus of side `L√a`.
//!
//! The round unit sphere `S²` is available for Brownian increments, heat
//! kernels and distances only (points are unit vectors in ℝ³). Trigonometric
//! test functions and vector fields are torus-only.
//!
//! Brownian motion always means the diffusion generated by `½Δ`.

mod flow;
mod heat;
mod trig;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use flow::{Flow, DEFAULT_FLOW_STEP};
pub use trig::{Phase, TrigFunction, TrigTerm, VectorField};

pub const DEFAULT_SPHERE_SUBSTEPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    FlatTorus,
    Sphere2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Manifold {
    pub kind: ManifoldKind,
    /// Intrinsic dimension.
    pub dim: usize,
    /// Coordinate period of the torus.
    pub side: f64,
    /// Conformal factor `a` of the metric `a·g`.
    pub metric_scale: f64,
    /// Total intensity `β` of the Dirichlet–Ferguson reference measure `β·m̄`.
    pub beta: f64,
    /// Geodesic random-walk substeps per sphere increment.
    pub sphere_substeps: usize,
}

impl Manifold {
    pub fn flat_torus(dim: usize, beta: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("torus dimension must be at least 1"));
        }
        check_beta(beta)?;
        Ok(Manifold {
            kind: ManifoldKind::FlatTorus,
            dim,
            side: 1.0,
            metric_scale: 1.0,
            beta,
            sphere_substeps: DEFAULT_SPHERE_SUBSTEPS,
        })
    }

    pub fn sphere2(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Manifold {
            kind: ManifoldKind::Sphere2,
            dim: 2,
            side: 1.0,
            metric_scale: 1.0,
            beta,
            sphere_substeps: DEFAULT_SPHERE_SUBSTEPS,
        })
    }

    pub fn with_side(mut self, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid(format!("torus side must be positive, got {side}")));
        }
        self.side = side;
        Ok(self)
    }

    pub fn with_metric_scale(mut self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid(format!("metric scale must be positive, got {a}")));
        }
        self.metric_scale = a;
        Ok(self)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        self.beta = beta;
        Ok(self)
    }

    pub fn with_substeps(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("sphere substeps must be positive"));
        }
        self.sphere_substeps = n;
        Ok(self)
    }

    pub fn is_torus(&self) -> bool {
        self.kind == ManifoldKind::FlatTorus
    }

    /// Number of stored coordinates per point.
    pub fn coord_len(&self) -> usize {
        match self.kind {
            ManifoldKind::FlatTorus => self.dim,
            ManifoldKind::Sphere2 => 3,
        }
    }

    pub fn require_torus(&self, what: &str) -> Result<()> {
        if self.is_torus() {
            Ok(())
        } else {
            Err(crate::Error::Unsupported(format!("the sphere ({what} needs the flat torus)")))
        }
    }

    /// Draws a point from the normalized volume measure `m̄`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self.kind {
            ManifoldKind::FlatTorus => {
                for c in out.iter_mut() {
                    *c = rng.random::<f64>() * self.side;
                }
            }
            ManifoldKind::Sphere2 => loop {
                let v: [f64; 3] = [
                    StandardNormal.sample(rng),
                    StandardNormal.sample(rng),
                    StandardNormal.sample(rng),
                ];
                let n = norm(&v);
                if n > 1e-12 {
                    for (o, c) in out.iter_mut().zip(v) {
                        *o = c / n;
                    }
                    break;
                }
            },
        }
    }

    /// Reduces torus coordinates into `[0, side)`.
    pub fn wrap(&self, x: &mut [f64]) {
        if self.is_torus() {
            for c in x.iter_mut() {
                *c = wrap_coord(*c, self.side);
            }
        }
    }

    /// Brownian motion (generator `½Δ`) started at `x`, observed at time `tau`.
    ///
    /// Exact on the torus: each isometric coordinate receives an independent
    /// `N(0, tau)` displacement, which is then mapped back to coordinates.
    /// On the sphere this is a geodesic random walk with
    /// [`Manifold::sphere_substeps`] steps.
    pub fn brownian_increment<R: Rng + ?Sized>(&self, x: &[f64], tau: f64, rng: &mut R, out: &mut [f64]) -> Result<()> {
        if !(tau > 0.0) {
            return Err(invalid(format!("Brownian increment needs positive time, got {tau}")));
        }
        match self.kind {
            ManifoldKind::FlatTorus => {
                let sd = tau.sqrt();
                let root = self.metric_scale.sqrt();
                for (o, &c) in out.iter_mut().zip(x) {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = wrap_coord(c + sd * z / root, self.side);
                }
            }
            ManifoldKind::Sphere2 => {
                let n = self.sphere_substeps;
                let sd = (tau / self.metric_scale / n as f64).sqrt();
                let mut p = [x[0], x[1], x[2]];
                for _ in 0..n {
                    p = geodesic_step(&p, sd, rng);
                }
                out[..3].copy_from_slice(&p);
            }
        }
        Ok(())
    }

    /// Heat kernel density `h_t(x, y)` with respect to `m̄`.
    pub fn heat_kernel_density(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid(format!("heat kernel needs positive time, got {t}")));
        }
        Ok(match self.kind {
            ManifoldKind::FlatTorus => {
                let period = self.side * self.metric_scale.sqrt();
                let root = self.metric_scale.sqrt();
                x.iter()
                    .zip(y)
                    .map(|(&a, &b)| heat::wrapped_gaussian(root * (a - b), t, period) * period)
                    .product()
            }
            ManifoldKind::Sphere2 => {
                let c = dot(x, y).clamp(-1.0, 1.0);
                heat::sphere_kernel(c, t / self.metric_scale)
            }
        })
    }

    /// Shortest coordinate displacement `y - x` on the torus.
    pub fn displacement(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for ((o, &a), &b) in out.iter_mut().zip(x).zip(y) {
            let mut d = (b - a).rem_euclid(self.side);
            if d > 0.5 * self.side {
                d -= self.side;
            }
            *o = d;
        }
    }

    /// Squared geodesic distance.
    pub fn distance_sq(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            ManifoldKind::FlatTorus => {
                let s = self.side;
                let sum: f64 = x
                    .iter()
                    .zip(y)
                    .map(|(&a, &b)| {
                        let d = (b - a).rem_euclid(s);
                        let d = d.min(s - d);
                        d * d
                    })
                    .sum();
                self.metric_scale * sum
            }
            ManifoldKind::Sphere2 => {
                let th = dot(x, y).clamp(-1.0, 1.0).acos();
                self.metric_scale * th * th
            }
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.distance_sq(x, y).sqrt()
    }

    /// Metric inner product of two coordinate tangent vectors.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.metric_scale * dot(u, v)
    }

    /// Converts a coordinate differential `∂f` to the metric gradient.
    pub fn raise(&self, df: &mut [f64]) {
        let a = self.metric_scale;
        for c in df.iter_mut() {
            *c /= a;
        }
    }

    /// `g(∇f, ∇h)` from the coordinate differentials of `f` and `h`.
    pub fn gradient_inner(&self, df: &[f64], dh: &[f64]) -> f64 {
        dot(df, dh) / self.metric_scale
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("beta must be positive, got {beta}")))
    }
}

pub(crate) fn wrap_coord(c: f64, side: f64) -> f64 {
    let r = c.rem_euclid(side);
    // rem_euclid rounds tiny negatives up to `side`
    if r >= side {
        0.0
    } else {
        r
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn geodesic_step<R: Rng + ?Sized>(p: &[f64; 3], sd: f64, rng: &mut R) -> [f64; 3] {
    // orthonormal tangent frame at p
    let helper = if p[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let mut e1 = cross(p, &helper);
    let n1 = norm(&e1);
    e1.iter_mut().for_each(|c| *c /= n1);
    let e2 = cross(p, &e1);
    let z1: f64 = StandardNormal.sample(rng);
    let z2: f64 = StandardNormal.sample(rng);
    let v = [
        sd * (z1 * e1[0] + z2 * e2[0]),
        sd * (z1 * e1[1] + z2 * e2[1]),
        sd * (z1 * e1[2] + z2 * e2[2]),
    ];
    let len = norm(&v);
    if len == 0.0 {
        return *p;
    }
    let (s, c) = len.sin_cos();
    let mut q = [0.0; 3];
    for i in 0..3 {
        q[i] = c * p[i] + s * v[i] / len;
    }
    let nq = norm(&q);
    q.map(|x| x / nq)
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
