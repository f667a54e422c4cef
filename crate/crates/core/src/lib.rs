//! Simulation and verification toolkit for the Dirichlet–Ferguson diffusion
//! on the space of probability measures over a closed flat torus.
//!
//! The crate is organised bottom-up:
//!
//! - [`manifold`]: flat torus (and an optional round 2-sphere) with exact
//!   Brownian increments, heat kernels, symbolic trigonometric test
//!   functions, vector fields and their flows.
//! - [`random_measures`]: stick-breaking, Poisson–Dirichlet weights, the
//!   Dirichlet–Ferguson sampler and Monte-Carlo checks of its Mecke and
//!   fixed-point characterisations.
//! - [`cylinder`]: cylinder functions `u = F(f̂₁★η, …, f̂ₖ★η)` with their
//!   gradient, carré du champ, generator, drift functional and
//!   Radon–Nikodym derivatives, plus integration-by-parts and
//!   quasi-invariance verifiers.
//! - [`diffusion`]: the massive-particle simulator and its martingale,
//!   invariance and energy checks.
//! - [`transport`]: an exact W₂ solver (transportation simplex) and the
//!   short-time and Lipschitz probes built on top of it.
//!
//! Every Monte-Carlo routine draws a 64-bit base seed from the caller's RNG
//! and splits work into fixed-size chunks with independent ChaCha streams,
//! so results are bit-identical regardless of the rayon pool size.

pub mod cylinder;
pub mod diffusion;
pub mod error;
pub mod manifold;
pub mod random_measures;
pub mod report;
pub mod rng;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use manifold::{Manifold, ManifoldKind};
pub use random_measures::{AtomicMeasure, DfSampler, TailPolicy, WeightVector};
pub use report::{Check, Criterion, Report, Status};
