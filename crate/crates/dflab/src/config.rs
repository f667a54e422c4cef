//! Run configuration: JSON schema with defaults, overrides and validation.
//!
//! Every struct rejects unknown keys. Parse errors carry the path of the
//! offending field (`tasks.verify_pqi.eps`, `baskets.cylinder[1].fhats`).

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use dflab_core::cylinder::{CylinderFunction, TestFunction};
use dflab_core::diffusion::Window;
use dflab_core::manifold::{TrigFunction, VectorField};
use dflab_core::random_measures::{default_n_atoms, MeckeProbe};
use dflab_core::transport::VaradhanOptions;
use dflab_core::{AtomicMeasure, DfSampler, Manifold, ManifoldKind, TailPolicy, WeightVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

/// Configuration used when none is given on the command line.
pub const DEFAULT_CONFIG: &str = include_str!("../fixtures/default.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    SampleDf,
    VerifyMecke,
    VerifySethuraman,
    VerifyIbp,
    VerifyPqi,
    VerifyBmart,
    Simulate,
    VerifyMartingale,
    VerifyInvariance,
    VerifyErgodic,
    Energy,
    W2,
    Varadhan,
    Rademacher,
    All,
}

impl Task {
    /// Every concrete task, in the order `all` runs them.
    pub const CONCRETE: [Task; 14] = [
        Task::SampleDf,
        Task::VerifyMecke,
        Task::VerifySethuraman,
        Task::VerifyIbp,
        Task::VerifyPqi,
        Task::VerifyBmart,
        Task::Simulate,
        Task::VerifyMartingale,
        Task::VerifyInvariance,
        Task::VerifyErgodic,
        Task::Energy,
        Task::W2,
        Task::Varadhan,
        Task::Rademacher,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::SampleDf => "sample-df",
            Task::VerifyMecke => "verify-mecke",
            Task::VerifySethuraman => "verify-sethuraman",
            Task::VerifyIbp => "verify-ibp",
            Task::VerifyPqi => "verify-pqi",
            Task::VerifyBmart => "verify-bmart",
            Task::Simulate => "simulate",
            Task::VerifyMartingale => "verify-martingale",
            Task::VerifyInvariance => "verify-invariance",
            Task::VerifyErgodic => "verify-ergodic",
            Task::Energy => "energy",
            Task::W2 => "w2",
            Task::Varadhan => "varadhan",
            Task::Rademacher => "rademacher",
            Task::All => "all",
        }
    }

    pub fn expand(self) -> Vec<Task> {
        match self {
            Task::All => Task::CONCRETE.to_vec(),
            t => vec![t],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldConfig {
    pub kind: ManifoldKind,
    pub dim: usize,
    pub side: f64,
    pub metric_scale: f64,
    pub sphere_substeps: usize,
    /// `dim = 1` is refused unless set.
    pub allow_circle: bool,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        ManifoldConfig {
            kind: ManifoldKind::FlatTorus,
            dim: 2,
            side: 1.0,
            metric_scale: 1.0,
            sphere_substeps: 16,
            allow_circle: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

/// `"auto"` or a fixed atom count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NAtoms {
    Fixed(usize),
    Auto(Auto),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    pub n_atoms: NAtoms,
    pub tail_policy: TailPolicy,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { n_atoms: NAtoms::Auto(Auto::Auto), tail_policy: TailPolicy::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Baskets {
    pub mecke: Vec<MeckeProbe>,
    /// Plain functions `f` (Sethuraman probes, ergodic probes).
    pub probes: Vec<TrigFunction>,
    /// `f̂ = f ⊗ ρ` (invariance probes).
    pub test_functions: Vec<TestFunction>,
    pub cylinder: Vec<CylinderFunction>,
    /// Adapted functionals `g` for the orthogonality-of-increments check.
    pub adapted: Vec<CylinderFunction>,
    pub fields: Vec<VectorField>,
    pub windows: Vec<Window>,
}

macro_rules! task_block {
    ($name:ident { $($field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $(pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                $name { $($field: $default,)* }
            }
        }
    };
}

task_block!(SampleDfTask { n: usize = 10_000, n_sticks: usize = 200, n_dump: usize = 100 });
task_block!(MeckeTask { n: usize = 100_000 });
task_block!(SethuramanTask { n: usize = 100_000, negative_control: Option<f64> = None });
task_block!(IbpTask { n: usize = 100_000, eps: Option<f64> = None });
task_block!(PqiTask { n: usize = 100_000, t: f64 = 1.0, eps: f64 = 0.05, flow_step: f64 = 1e-3 });
task_block!(BmartTask { n: usize = 100_000, eps: f64 = 0.02, delta: f64 = 0.05 });
task_block!(SimulateTask { n_paths: usize = 10, dt: f64 = 0.01, horizon: f64 = 1.0, initial: Option<Value> = None });
task_block!(MartingaleTask { n_paths: usize = 4000, dt: f64 = 1e-3, horizon: f64 = 0.25, qv_tolerance: f64 = 0.05 });
task_block!(InvarianceTask { n_paths: usize = 4000, t_list: Vec<f64> = vec![0.1, 0.5, 1.0] });
task_block!(ErgodicTask { n_paths: usize = 4000, t_list: Vec<f64> = vec![0.1, 0.5, 1.0], weights: Vec<f64> = vec![0.5, 0.3, 0.2] });
task_block!(EnergyTask { n: usize = 100_000 });
task_block!(W2Task { source: Option<Value> = None, target: Option<Value> = None, expected_cost: Option<f64> = None, tolerance: f64 = 1e-9 });
task_block!(VaradhanTask {
    centers: Vec<Value> = Vec::new(),
    radii: Vec<f64> = Vec::new(),
    t_list: Vec<f64> = vec![0.04, 0.02, 0.01],
    n: usize = 1_000_000,
    options: VaradhanOptions = VaradhanOptions::default(),
});
task_block!(RademacherTask { n: usize = 1000, references: Vec<Value> = Vec::new(), h: f64 = 1e-3, c: f64 = 10.0 });

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tasks {
    pub sample_df: SampleDfTask,
    pub verify_mecke: MeckeTask,
    pub verify_sethuraman: SethuramanTask,
    pub verify_ibp: IbpTask,
    pub verify_pqi: PqiTask,
    pub verify_bmart: BmartTask,
    pub simulate: SimulateTask,
    pub verify_martingale: MartingaleTask,
    pub verify_invariance: InvarianceTask,
    pub verify_ergodic: ErgodicTask,
    pub energy: EnergyTask,
    pub w2: W2Task,
    pub varadhan: VaradhanTask,
    pub rademacher: RademacherTask,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldConfig,
    pub beta: f64,
    pub truncation: Truncation,
    /// Tolerance multiplier: checks pass within `k` standard errors.
    pub k: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub baskets: Baskets,
    pub tasks: Tasks,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifold: ManifoldConfig::default(),
            beta: 1.0,
            truncation: Truncation::default(),
            k: 3.0,
            seed: 0,
            out_dir: PathBuf::from("dflab-out"),
            baskets: Baskets::default(),
            tasks: Tasks::default(),
        }
    }
}

impl RunConfig {
    /// Parses JSON text, reporting the path of the first schema violation.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            HarnessError::schema(if path.is_empty() { ".".into() } else { path }, e.into_inner())
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::schema(path.display().to_string(), format!("cannot read config: {e}")))?;
        Self::from_json(&text)
    }

    pub fn manifold(&self) -> Result<Manifold> {
        let mc = &self.manifold;
        let at = |field: &str, e: dflab_core::Error| HarnessError::schema(format!("manifold.{field}"), e);
        let m = match mc.kind {
            ManifoldKind::FlatTorus => {
                if mc.dim == 1 && !mc.allow_circle {
                    return Err(HarnessError::schema("manifold.dim", "dim = 1 needs `allow_circle: true`"));
                }
                Manifold::flat_torus(mc.dim, self.beta)
                    .map_err(|e| at("dim", e))?
                    .with_side(mc.side)
                    .map_err(|e| at("side", e))?
            }
            ManifoldKind::Sphere2 => Manifold::sphere2(self.beta)
                .map_err(|e| HarnessError::schema("beta", e))?
                .with_substeps(mc.sphere_substeps)
                .map_err(|e| at("sphere_substeps", e))?,
        };
        m.with_metric_scale(mc.metric_scale).map_err(|e| at("metric_scale", e))
    }

    pub fn sampler(&self) -> Result<DfSampler> {
        let m = self.manifold()?;
        let n = match self.truncation.n_atoms {
            NAtoms::Fixed(n) => n,
            NAtoms::Auto(_) => default_n_atoms(self.beta),
        };
        Ok(DfSampler::new(m)
            .with_n_atoms(n)
            .map_err(|e| HarnessError::schema("truncation.n_atoms", e))?
            .with_tail_policy(self.truncation.tail_policy))
    }

    /// JSON of the resolved config as written next to the outputs.
    pub fn resolved_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// SHA-256 of the resolved config without `out_dir`, so identical runs
    /// written to different directories share a hash.
    pub fn hash(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Value::Object(map) = &mut v {
            map.remove("out_dir");
        }
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&v)?)))
    }

    /// Schema-level checks for the given tasks, run before any sampling.
    pub fn validate(&self, tasks: &[Task]) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(HarnessError::schema("k", "tolerance multiplier must be positive"));
        }
        let sampler = self.sampler()?;
        for &task in tasks {
            self.validate_task(task, &sampler)?;
        }
        Ok(())
    }

    fn validate_task(&self, task: Task, sampler: &DfSampler) -> Result<()> {
        let m = sampler.manifold;
        let b = &self.baskets;
        let t = &self.tasks;
        let nonempty = |len: usize, path: &str| {
            if len == 0 {
                Err(HarnessError::schema(path, format!("basket must not be empty for {}", task.name())))
            } else {
                Ok(())
            }
        };
        let cylinders = |us: &[CylinderFunction], path: &str, generator: bool| -> Result<()> {
            for (i, u) in us.iter().enumerate() {
                u.check(&m).map_err(|e| HarnessError::schema(format!("{path}[{i}]"), e))?;
                if generator {
                    u.check_generator().map_err(|e| HarnessError::schema(format!("{path}[{i}]"), e))?;
                }
            }
            Ok(())
        };
        let fields = |path: &str| -> Result<()> {
            for (i, w) in b.fields.iter().enumerate() {
                w.check_dim(m.dim).map_err(|e| HarnessError::schema(format!("{path}[{i}]"), e))?;
            }
            Ok(())
        };
        let positive = |x: f64, path: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(HarnessError::schema(path, format!("must be positive, got {x}")))
            }
        };
        let count = |n: usize, path: &str| {
            if n == 0 {
                Err(HarnessError::schema(path, "must be at least 1"))
            } else {
                Ok(())
            }
        };
        match task {
            Task::All => {}
            Task::SampleDf => count(t.sample_df.n, "tasks.sample_df.n")?,
            Task::VerifyMecke => {
                nonempty(b.mecke.len(), "baskets.mecke")?;
                count(t.verify_mecke.n, "tasks.verify_mecke.n")?;
            }
            Task::VerifySethuraman => {
                nonempty(b.probes.len(), "baskets.probes")?;
                count(t.verify_sethuraman.n, "tasks.verify_sethuraman.n")?;
            }
            Task::VerifyIbp => {
                nonempty(b.cylinder.len(), "baskets.cylinder")?;
                nonempty(b.fields.len(), "baskets.fields")?;
                cylinders(&b.cylinder, "baskets.cylinder", false)?;
                fields("baskets.fields")?;
                count(t.verify_ibp.n, "tasks.verify_ibp.n")?;
            }
            Task::VerifyPqi => {
                nonempty(b.cylinder.len(), "baskets.cylinder")?;
                nonempty(b.fields.len(), "baskets.fields")?;
                cylinders(&b.cylinder, "baskets.cylinder", false)?;
                fields("baskets.fields")?;
                positive(t.verify_pqi.flow_step, "tasks.verify_pqi.flow_step")?;
                count(t.verify_pqi.n, "tasks.verify_pqi.n")?;
            }
            Task::VerifyBmart => {
                nonempty(b.cylinder.len(), "baskets.cylinder")?;
                nonempty(b.fields.len(), "baskets.fields")?;
                cylinders(&b.cylinder, "baskets.cylinder", false)?;
                fields("baskets.fields")?;
                count(t.verify_bmart.n, "tasks.verify_bmart.n")?;
            }
            Task::Simulate => {
                positive(t.simulate.dt, "tasks.simulate.dt")?;
                positive(t.simulate.horizon, "tasks.simulate.horizon")?;
                if let Some(v) = &t.simulate.initial {
                    measure(m, v, "tasks.simulate.initial")?;
                }
            }
            Task::VerifyMartingale => {
                nonempty(b.cylinder.len(), "baskets.cylinder")?;
                cylinders(&b.cylinder, "baskets.cylinder", true)?;
                cylinders(&b.adapted, "baskets.adapted", false)?;
                positive(t.verify_martingale.dt, "tasks.verify_martingale.dt")?;
                positive(t.verify_martingale.horizon, "tasks.verify_martingale.horizon")?;
                count(t.verify_martingale.n_paths, "tasks.verify_martingale.n_paths")?;
            }
            Task::VerifyInvariance => {
                nonempty(b.test_functions.len(), "baskets.test_functions")?;
                for (i, f) in b.test_functions.iter().enumerate() {
                    f.f.check_dim(m.dim).map_err(|e| HarnessError::schema(format!("baskets.test_functions[{i}]"), e))?;
                }
                count(t.verify_invariance.n_paths, "tasks.verify_invariance.n_paths")?;
            }
            Task::VerifyErgodic => {
                nonempty(b.probes.len() + b.windows.len(), "baskets.windows")?;
                self.ergodic_weights()?;
                count(t.verify_ergodic.n_paths, "tasks.verify_ergodic.n_paths")?;
            }
            Task::Energy => {
                nonempty(b.cylinder.len(), "baskets.cylinder")?;
                cylinders(&b.cylinder, "baskets.cylinder", true)?;
                count(t.energy.n, "tasks.energy.n")?;
            }
            Task::W2 => {
                let w = &t.w2;
                let src = w.source.as_ref().ok_or_else(|| HarnessError::schema("tasks.w2.source", "missing"))?;
                let dst = w.target.as_ref().ok_or_else(|| HarnessError::schema("tasks.w2.target", "missing"))?;
                measure(m, src, "tasks.w2.source")?;
                measure(m, dst, "tasks.w2.target")?;
            }
            Task::Varadhan => {
                let v = &t.varadhan;
                if v.centers.len() != 2 {
                    return Err(HarnessError::schema("tasks.varadhan.centers", "exactly two center measures are required"));
                }
                if v.radii.len() != 2 {
                    return Err(HarnessError::schema("tasks.varadhan.radii", "exactly two radii are required"));
                }
                for (i, c) in v.centers.iter().enumerate() {
                    measure(m, c, &format!("tasks.varadhan.centers[{i}]"))?;
                }
                count(v.n, "tasks.varadhan.n")?;
            }
            Task::Rademacher => {
                nonempty(b.fields.len(), "baskets.fields")?;
                nonempty(t.rademacher.references.len(), "tasks.rademacher.references")?;
                fields("baskets.fields")?;
                for (i, r) in t.rademacher.references.iter().enumerate() {
                    measure(m, r, &format!("tasks.rademacher.references[{i}]"))?;
                }
                positive(t.rademacher.h, "tasks.rademacher.h")?;
            }
        }
        Ok(())
    }
}

impl RunConfig {
    /// Fixed weights of the ergodic component; any missing mass becomes the tail.
    pub fn ergodic_weights(&self) -> Result<WeightVector> {
        let w = &self.tasks.verify_ergodic.weights;
        let total: f64 = w.iter().sum();
        WeightVector::new(w.clone(), (1.0 - total).max(0.0))
            .map_err(|e| HarnessError::schema("tasks.verify_ergodic.weights", e))
    }
}

/// Parses an embedded atomic measure, attributing errors to `path`.
pub fn measure(m: Manifold, value: &Value, path: &str) -> Result<AtomicMeasure> {
    AtomicMeasure::from_json(m, value.clone()).map_err(|e| HarnessError::schema(path, e))
}
