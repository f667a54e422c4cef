//! Artifact formats written by the harness and read back by plotting tools.
//!
//! Readers fail on the first missing or malformed column, naming it.

use std::io::{BufRead, Read, Write};

use dflab_core::diffusion::MartingaleReport;
use dflab_core::report::{Check, Criterion, Status};
use dflab_core::transport::VaradhanReport;
use dflab_core::AtomicMeasure;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::Result;

pub use dflab_core::diffusion::{read_paths_csv, PathRow};
pub use dflab_core::transport::TransportPlan;

/// One report row: the estimate, its standard error, and what it was judged against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRow {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    /// `k · stderr` for statistical criteria, the absolute tolerance otherwise.
    pub tolerance: f64,
    pub criterion: Criterion,
    pub status: Status,
    /// Base seed of the verifier's random streams.
    pub stream_seed: u64,
}

impl CheckRow {
    pub fn from_check(c: &Check, stream_seed: u64) -> Self {
        CheckRow {
            name: c.name.clone(),
            estimate: c.estimate,
            stderr: c.stderr,
            target: c.target,
            tolerance: c.tolerance(),
            criterion: c.criterion,
            status: c.status,
            stream_seed,
        }
    }
}

/// A task that stopped on a numeric error; counted as a failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskError {
    pub task: String,
    pub message: String,
}

/// `report.json`. Wall time lives in `timing.json` so that reports are
/// byte-identical across reruns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub task: String,
    pub config_hash: String,
    pub seed: u64,
    pub chunk_size: usize,
    pub checks: Vec<CheckRow>,
    pub errors: Vec<TaskError>,
    pub passed: bool,
}

impl RunReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckRow> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }
}

/// `timing.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub tasks: Vec<(String, f64)>,
    pub total_seconds: f64,
}

/// One row of `weights.csv`: the `rank`-th largest weight of sample `sample_id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightRow {
    pub sample_id: usize,
    pub rank: usize,
    pub weight: f64,
    /// Mass outside the listed atoms, repeated on every row of the sample.
    pub tail: f64,
}

pub fn weight_rows(samples: &[AtomicMeasure]) -> Vec<WeightRow> {
    samples
        .iter()
        .enumerate()
        .flat_map(|(id, eta)| {
            let tail = eta.tail();
            eta.weights().iter().enumerate().map(move |(rank, &weight)| WeightRow { sample_id: id, rank, weight, tail })
        })
        .collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads typed rows; a missing column is reported by name.
pub fn read_csv<T: DeserializeOwned, R: Read>(r: R) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_reader(r);
    let rows = rd.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

pub fn read_weight_samples<R: Read>(r: R) -> Result<Vec<WeightRow>> {
    read_csv(r)
}

/// Rows of `qv.csv`, the tabular form of the martingale arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvRow {
    pub u: usize,
    pub t: f64,
    pub mean_m: f64,
    pub stderr_m: f64,
    pub qv_realized: f64,
    pub qv_realized_stderr: f64,
    pub qv_predicted: f64,
    pub qv_predicted_stderr: f64,
}

pub fn qv_rows(reports: &[MartingaleReport]) -> Vec<QvRow> {
    reports
        .iter()
        .enumerate()
        .flat_map(|(u, r)| {
            (0..r.t.len()).map(move |i| QvRow {
                u,
                t: r.t[i],
                mean_m: r.mean_m[i],
                stderr_m: r.stderr_m[i],
                qv_realized: r.qv_realized[i],
                qv_realized_stderr: r.qv_realized_stderr[i],
                qv_predicted: r.qv_predicted[i],
                qv_predicted_stderr: r.qv_predicted_stderr[i],
            })
        })
        .collect()
}

fn read_json<T: DeserializeOwned, R: Read>(r: R) -> Result<T> {
    Ok(serde_json::from_reader(r)?)
}

pub fn read_report<R: Read>(r: R) -> Result<RunReport> {
    read_json(r)
}

/// `martingale.json`: one report per cylinder function of the basket.
pub fn read_martingale<R: Read>(r: R) -> Result<Vec<MartingaleReport>> {
    let reports: Vec<MartingaleReport> = read_json(r)?;
    for (u, rep) in reports.iter().enumerate() {
        let n = rep.t.len();
        let arrays = [
            ("mean_m", rep.mean_m.len()),
            ("stderr_m", rep.stderr_m.len()),
            ("qv_realized", rep.qv_realized.len()),
            ("qv_realized_stderr", rep.qv_realized_stderr.len()),
            ("qv_predicted", rep.qv_predicted.len()),
            ("qv_predicted_stderr", rep.qv_predicted_stderr.len()),
        ];
        if let Some((name, len)) = arrays.iter().find(|(_, len)| *len != n) {
            return Err(dflab_core::Error::Parse(format!("martingale report {u}: `{name}` has {len} entries, `t` has {n}")).into());
        }
    }
    Ok(reports)
}

/// `varadhan.json`.
pub fn read_varadhan<R: Read>(r: R) -> Result<VaradhanReport> {
    let rep: VaradhanReport = read_json(r)?;
    let n = rep.t.len();
    let arrays = [
        ("p_hat", rep.p_hat.len()),
        ("stderr", rep.stderr.len()),
        ("t_log_p", rep.t_log_p.len()),
        ("bound", rep.bound.len()),
        ("hits", rep.hits.len()),
    ];
    if let Some((name, len)) = arrays.iter().find(|(_, len)| *len != n) {
        return Err(dflab_core::Error::Parse(format!("varadhan report: `{name}` has {len} entries, `t` has {n}")).into());
    }
    Ok(rep)
}

pub fn read_paths<R: BufRead>(r: R) -> Result<Vec<PathRow>> {
    Ok(read_paths_csv(r)?)
}

pub fn read_plan<R: BufRead>(r: R) -> Result<TransportPlan> {
    Ok(TransportPlan::read_csv(r)?)
}
