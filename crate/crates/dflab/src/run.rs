//! Task dispatch and artifact writing.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use dflab_core::diffusion::{self, Initial};
use dflab_core::manifold::Flow;
use dflab_core::random_measures::{verify_df_sampler, verify_mecke, verify_sethuraman, verify_stick_breaking, SethuramanMode};
use dflab_core::report::{Check, Report};
use dflab_core::rng::{substream, CHUNK_SIZE};
use dflab_core::transport::{self, RademacherOptions, W2Ball};
use dflab_core::{cylinder, AtomicMeasure};
use serde::Serialize;
use serde_json::json;

use crate::config::{measure, RunConfig, Task};
use crate::error::Result;
use crate::schema::{qv_rows, weight_rows, write_csv, CheckRow, RunReport, TaskError, Timing};

/// Encoding of tabular artifacts (weights, paths, plans, QV arrays).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub const REPORT_FILE: &str = "report.json";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved.json";
pub const TIMING_FILE: &str = "timing.json";

/// Validates the config, runs the task (every task for `all`) and writes
/// `report.json`, `config.resolved.json` and `timing.json` into `out_dir`.
///
/// Numeric errors inside a task are recorded in the report and the run
/// continues; schema errors abort before anything is sampled.
pub fn run(task: Task, cfg: &RunConfig, format: Format) -> Result<RunReport> {
    let tasks = task.expand();
    cfg.validate(&tasks)?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out)?;
    fs::write(out.join(RESOLVED_CONFIG_FILE), cfg.resolved_json()?)?;
    let mut report = RunReport {
        task: task.name().into(),
        config_hash: cfg.hash()?,
        seed: cfg.seed,
        chunk_size: CHUNK_SIZE,
        checks: Vec::new(),
        errors: Vec::new(),
        passed: false,
    };
    let mut timing = Timing { tasks: Vec::new(), total_seconds: 0.0 };
    let start = Instant::now();
    for t in tasks {
        let dir = if task == Task::All { out.join(t.name()) } else { out.clone() };
        fs::create_dir_all(&dir)?;
        let t0 = Instant::now();
        match run_task(t, cfg, format, &dir) {
            Ok(reports) => {
                for r in reports {
                    report.checks.extend(r.checks.iter().map(|c| CheckRow::from_check(c, r.seed)));
                }
            }
            Err(e) => report.errors.push(TaskError { task: t.name().into(), message: e.to_string() }),
        }
        timing.tasks.push((t.name().into(), t0.elapsed().as_secs_f64()));
    }
    timing.total_seconds = start.elapsed().as_secs_f64();
    report.passed = report.errors.is_empty() && report.failed_checks().next().is_none();
    write_json(&out.join(REPORT_FILE), &report)?;
    write_json(&out.join(TIMING_FILE), &timing)?;
    Ok(report)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_rows<T: Serialize>(dir: &Path, stem: &str, format: Format, rows: &[T]) -> Result<()> {
    match format {
        Format::Csv => write_csv(rows, BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?)),
        Format::Json => write_json(&dir.join(format!("{stem}.json")), rows),
    }
}

/// Renames `task/rest` checks to `task/label/rest` so reports over a basket stay unique.
fn tagged(mut report: Report, label: &str) -> Report {
    for c in &mut report.checks {
        c.name = match c.name.split_once('/') {
            Some((head, rest)) => format!("{head}/{label}/{rest}"),
            None => format!("{}/{label}", c.name),
        };
    }
    report
}

fn run_task(task: Task, cfg: &RunConfig, format: Format, dir: &Path) -> Result<Vec<Report>> {
    let sampler = cfg.sampler()?;
    let m = sampler.manifold;
    let b = &cfg.baskets;
    let t = &cfg.tasks;
    let k = cfg.k;
    let rng = &mut substream(cfg.seed, task.name(), 0);
    let reports = match task {
        Task::All => unreachable!("expanded before dispatch"),
        Task::SampleDf => {
            let c = &t.sample_df;
            let stick = verify_stick_breaking(cfg.beta, c.n_sticks, c.n, k, rng)?;
            let df = verify_df_sampler(&sampler, c.n, k, rng)?;
            let samples = (0..c.n_dump).map(|_| sampler.sample(rng)).collect::<dflab_core::Result<Vec<_>>>()?;
            write_rows(dir, "weights", format, &weight_rows(&samples))?;
            vec![stick, df]
        }
        Task::VerifyMecke => vec![verify_mecke(&sampler, &b.mecke, t.verify_mecke.n, k, rng)?],
        Task::VerifySethuraman => {
            let c = &t.verify_sethuraman;
            let mode = c
                .negative_control
                .map_or(SethuramanMode::Identity, |relocation_beta| SethuramanMode::NegativeControl { relocation_beta });
            vec![verify_sethuraman(&sampler, &b.probes, c.n, k, mode, rng)?]
        }
        Task::VerifyIbp => {
            let c = &t.verify_ibp;
            vec![cylinder::verify_ibp(&sampler, &b.cylinder, &b.cylinder, &b.fields, c.eps, c.n, k, rng)?]
        }
        Task::VerifyPqi => {
            let c = &t.verify_pqi;
            let mut out = Vec::new();
            for (i, w) in b.fields.iter().enumerate() {
                let flow = Flow::with_step(&m, w.clone(), c.flow_step);
                let r = cylinder::verify_pqi(&sampler, &flow, c.t, &b.cylinder, c.eps, c.n, k, rng)?;
                out.push(tagged(r, &format!("field{i}")));
            }
            out
        }
        Task::VerifyBmart => {
            let c = &t.verify_bmart;
            let mut out = Vec::new();
            for (i, w) in b.fields.iter().enumerate() {
                let r = cylinder::verify_b_martingale(&sampler, w, c.eps, c.delta, &b.cylinder, c.n, k, rng)?;
                out.push(tagged(r, &format!("field{i}")));
            }
            out
        }
        Task::Simulate => {
            let c = &t.simulate;
            let initial = match &c.initial {
                Some(v) => Initial::Fixed(measure(m, v, "tasks.simulate.initial")?),
                None => Initial::Stationary,
            };
            let grid = diffusion::uniform_grid(c.dt, c.horizon)?;
            let paths = diffusion::simulate(&sampler, &initial, &grid, c.n_paths, rng)?;
            let moved = paths
                .iter()
                .filter(|p| p.states.iter().any(|s| s.weights() != p.states[0].weights() || s.tail() != p.states[0].tail()))
                .count();
            match format {
                Format::Csv => diffusion::write_paths_csv(&paths, BufWriter::new(File::create(dir.join("paths.csv"))?))?,
                Format::Json => {
                    let states: Vec<Vec<serde_json::Value>> =
                        paths.iter().map(|p| p.states.iter().map(AtomicMeasure::to_json).collect()).collect();
                    write_json(&dir.join("paths.json"), &json!({ "t_grid": grid, "paths": states }))?;
                }
            }
            let mut r = Report::new("simulate", paths.first().map_or(0, |p| p.seed));
            r.push(Check::absolute("simulate/weights_frozen", moved as f64, 0.0, 0.0));
            vec![r]
        }
        Task::VerifyMartingale => {
            let c = &t.verify_martingale;
            let grid = diffusion::uniform_grid(c.dt, c.horizon)?;
            let mut out = Vec::new();
            let mut reports = Vec::new();
            for (i, u) in b.cylinder.iter().enumerate() {
                let r = diffusion::verify_martingale(
                    &sampler,
                    &Initial::Stationary,
                    u,
                    &b.adapted,
                    &grid,
                    c.n_paths,
                    k,
                    c.qv_tolerance,
                    rng,
                )?;
                out.push(tagged(r.report.clone(), &format!("u{i}")));
                reports.push(r);
            }
            write_json(&dir.join("martingale.json"), &reports)?;
            if format == Format::Csv {
                write_csv(&qv_rows(&reports), BufWriter::new(File::create(dir.join("qv.csv"))?))?;
            }
            out
        }
        Task::VerifyInvariance => {
            let c = &t.verify_invariance;
            vec![diffusion::verify_invariance(&sampler, &b.test_functions, &c.t_list, c.n_paths, k, rng)?]
        }
        Task::VerifyErgodic => {
            let c = &t.verify_ergodic;
            let w = cfg.ergodic_weights()?;
            vec![diffusion::verify_ergodic_component(&sampler, &w, &b.probes, &b.windows, &c.t_list, c.n_paths, k, rng)?]
        }
        Task::Energy => {
            let mut out = Vec::new();
            let mut estimates = Vec::new();
            for (i, u) in b.cylinder.iter().enumerate() {
                let e = diffusion::dirichlet_energy(&sampler, u, t.energy.n, k, rng)?;
                out.push(tagged(e.report.clone(), &format!("u{i}")));
                estimates.push(e);
            }
            write_json(&dir.join("energy.json"), &estimates)?;
            out
        }
        Task::W2 => {
            let c = &t.w2;
            let src = measure(m, c.source.as_ref().expect("validated"), "tasks.w2.source")?;
            let dst = measure(m, c.target.as_ref().expect("validated"), "tasks.w2.target")?;
            let plan = transport::w2(&src, &dst)?;
            match format {
                Format::Csv => plan.write_csv(BufWriter::new(File::create(dir.join("plan.csv"))?))?,
                Format::Json => write_json(&dir.join("plan.json"), &plan)?,
            }
            let mut r = Report::new("w2", 0);
            r.push(Check::absolute("w2/marginals", plan.marginal_error(&src, &dst), 0.0, 1e-10));
            if let Some(expected) = c.expected_cost {
                r.push(Check::absolute("w2/expected_cost", plan.cost, expected, c.tolerance));
            }
            vec![r]
        }
        Task::Varadhan => {
            let c = &t.varadhan;
            let ball = |i: usize| -> Result<W2Ball> {
                let center = measure(m, &c.centers[i], &format!("tasks.varadhan.centers[{i}]"))?;
                Ok(W2Ball::new(center, c.radii[i])?)
            };
            let (a1, a2) = (ball(0)?, ball(1)?);
            let r = transport::varadhan_probe(&sampler, &a1, &a2, &c.t_list, c.n, &c.options, rng)?;
            write_json(&dir.join("varadhan.json"), &r)?;
            vec![r.report]
        }
        Task::Rademacher => {
            let c = &t.rademacher;
            let refs = c
                .references
                .iter()
                .enumerate()
                .map(|(i, v)| measure(m, v, &format!("tasks.rademacher.references[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let opts = RademacherOptions { h: c.h, c: c.c };
            vec![transport::rademacher_probe(&sampler, &refs, &b.fields, c.n, &opts, rng)?]
        }
    };
    Ok(reports)
}
