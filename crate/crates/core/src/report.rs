//! Check records shared by every verifier.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// How a check turns `(estimate, stderr, target)` into a status.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// `|estimate - target| <= k * stderr`.
    Sigma { k: f64 },
    /// `|estimate - target| <= tol`.
    Absolute { tol: f64 },
    /// `estimate <= target + k * stderr`.
    UpperBound { k: f64 },
    /// `|estimate - target| > k * stderr` is required (negative controls).
    Detect { k: f64 },
}

/// Slack absorbing round-off in checks whose standard error is exactly zero.
pub const ROUNDOFF: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub criterion: Criterion,
    pub status: Status,
}

impl Check {
    pub fn new(name: impl Into<String>, estimate: f64, stderr: f64, target: f64, criterion: Criterion) -> Self {
        let gap = estimate - target;
        let ok = match criterion {
            Criterion::Sigma { k } => gap.abs() <= k * stderr + ROUNDOFF,
            Criterion::Absolute { tol } => gap.abs() <= tol,
            Criterion::UpperBound { k } => gap <= k * stderr + ROUNDOFF,
            Criterion::Detect { k } => gap.abs() > k * stderr,
        };
        let status = if ok && estimate.is_finite() { Status::Pass } else { Status::Fail };
        Check { name: name.into(), estimate, stderr, target, criterion, status }
    }

    pub fn sigma(name: impl Into<String>, estimate: f64, stderr: f64, target: f64, k: f64) -> Self {
        Check::new(name, estimate, stderr, target, Criterion::Sigma { k })
    }

    pub fn absolute(name: impl Into<String>, estimate: f64, target: f64, tol: f64) -> Self {
        Check::new(name, estimate, 0.0, target, Criterion::Absolute { tol })
    }

    pub fn inconclusive(mut self) -> Self {
        self.status = Status::Inconclusive;
        self
    }

    /// `k * stderr` for sigma-style criteria, the absolute tolerance otherwise.
    pub fn tolerance(&self) -> f64 {
        match self.criterion {
            Criterion::Sigma { k } | Criterion::UpperBound { k } | Criterion::Detect { k } => k * self.stderr,
            Criterion::Absolute { tol } => tol,
        }
    }
}

/// Outcome of one verifier run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub task: String,
    /// Base seed the chunk streams were derived from.
    pub seed: u64,
    pub chunk_size: usize,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(task: impl Into<String>, seed: u64) -> Self {
        Report { task: task.into(), seed, chunk_size: crate::rng::CHUNK_SIZE, checks: Vec::new() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
