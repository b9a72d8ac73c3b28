//! Trace rows (CSV), run reports and manifests (JSON).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use arncg_core::{EvalCounters, FailureReason, IterationRecord, Outcome, RunSummary};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::spec::RunSpec;

/// Flat CSV form of [`IterationRecord`]; counters are cumulative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: u64,
    pub g_k: f64,
    pub eps_k: f64,
    pub omega_t: f64,
    pub omega_f: f64,
    pub m_k: f64,
    pub m_next: f64,
    pub d_type: String,
    pub stepsize_alpha: f64,
    pub linesearch_m: Option<u32>,
    pub used_fallback: bool,
    pub used_secondary_linesearch: bool,
    pub linesearch_exhausted: bool,
    pub value_phi: f64,
    pub value_next: f64,
    pub g_next: f64,
    pub direction_norm: f64,
    pub rho: f64,
    pub cg_iterations: u64,
    pub value_evals: u64,
    pub gradient_evals: u64,
    pub hvp_evals: u64,
    pub hessian_points: u64,
}

impl From<&IterationRecord> for TraceRow {
    fn from(r: &IterationRecord) -> Self {
        TraceRow {
            k: r.k,
            g_k: r.g_k,
            eps_k: r.eps_k,
            omega_t: r.omega_t,
            omega_f: r.omega_f,
            m_k: r.m_k,
            m_next: r.m_next,
            d_type: r.d_type.as_str().to_owned(),
            stepsize_alpha: r.stepsize_alpha,
            linesearch_m: r.linesearch_m,
            used_fallback: r.used_fallback,
            used_secondary_linesearch: r.used_secondary_linesearch,
            linesearch_exhausted: r.linesearch_exhausted,
            value_phi: r.value_phi,
            value_next: r.value_next,
            g_next: r.g_next,
            direction_norm: r.direction_norm,
            rho: r.rho,
            cg_iterations: r.cg_iterations,
            value_evals: r.counters.value_evals,
            gradient_evals: r.counters.gradient_evals,
            hvp_evals: r.counters.hvp_evals,
            hessian_points: r.counters.hessian_points,
        }
    }
}

pub fn write_trace<W: Write>(out: W, trace: &[IterationRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if trace.is_empty() {
        // keep the header even for an empty trace
        w.write_record(TRACE_COLUMNS)?;
    }
    for r in trace {
        w.serialize(TraceRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub const TRACE_COLUMNS: [&str; 23] = [
    "k",
    "g_k",
    "eps_k",
    "omega_t",
    "omega_f",
    "m_k",
    "m_next",
    "d_type",
    "stepsize_alpha",
    "linesearch_m",
    "used_fallback",
    "used_secondary_linesearch",
    "linesearch_exhausted",
    "value_phi",
    "value_next",
    "g_next",
    "direction_norm",
    "rho",
    "cg_iterations",
    "value_evals",
    "gradient_evals",
    "hvp_evals",
    "hessian_points",
];

pub fn trace_to_string(trace: &[IterationRecord]) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn save_trace(path: &Path, trace: &[IterationRecord]) -> Result<(), CliError> {
    let file = create(path)?;
    write_trace(BufWriter::new(file), trace).map_err(|source| CliError::Csv {
        path: path.to_owned(),
        source,
    })
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub value_evals: u64,
    pub gradient_evals: u64,
    pub hvp_evals: u64,
    pub hessian_points: u64,
}

impl From<EvalCounters> for CounterSnapshot {
    fn from(c: EvalCounters) -> Self {
        CounterSnapshot {
            value_evals: c.value_evals,
            gradient_evals: c.gradient_evals,
            hvp_evals: c.hvp_evals,
            hessian_points: c.hessian_points,
        }
    }
}

/// Benchmark metrics of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub iterations: u64,
    pub function_evals: u64,
    pub gradient_evals: u64,
    pub hessian_evals: u64,
    pub hvp_evals: u64,
    pub normalized_hvps: f64,
    pub linesearch_failure_rate: f64,
    pub second_linesearch_rate: f64,
    pub fallback_rate: f64,
}

impl From<RunSummary> for Metrics {
    fn from(s: RunSummary) -> Self {
        Metrics {
            iterations: s.iterations,
            function_evals: s.function_evals,
            gradient_evals: s.gradient_evals,
            hessian_evals: s.hessian_evals,
            hvp_evals: s.hvp_evals,
            normalized_hvps: s.normalized_hvps,
            linesearch_failure_rate: s.linesearch_failure_rate,
            second_linesearch_rate: s.second_linesearch_rate,
            fallback_rate: s.fallback_rate,
        }
    }
}

/// Human-readable cause of a numerical failure.
pub fn failure_detail(outcome: &Outcome) -> Option<String> {
    match outcome {
        Outcome::NumericalFailure(reason) => Some(match reason {
            FailureReason::Stalled => "value and gradient norm stalled".to_owned(),
            FailureReason::TinyDirection => "search direction below minimum norm".to_owned(),
            FailureReason::LipschitzOverflow => "Lipschitz estimate reached max_m".to_owned(),
            FailureReason::Oracle(e) => e.to_string(),
        }),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: RunSpec,
    pub n: usize,
    pub seed: Option<u64>,
    pub x0: Vec<f64>,
    pub outcome: String,
    pub failure: Option<String>,
    pub iterations: u64,
    pub final_value: f64,
    pub final_gradient_norm: f64,
    pub final_point: Vec<f64>,
    pub counters: CounterSnapshot,
    pub summary: Option<Metrics>,
}

/// A batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub runs: Vec<RunSpec>,
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| CliError::Json {
        path: path.to_owned(),
        source,
    })?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|source| io_err(path, source))
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| io_err(path, source))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_owned(),
        source,
    })
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|source| io_err(path, source))
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from(path),
        source,
    }
}
