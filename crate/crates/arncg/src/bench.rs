//! Batch runs over a manifest, executed in parallel.

use std::path::Path;

use arncg_core::Outcome;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::formats::{failure_detail, Manifest, Metrics};
use crate::run::execute_and_save;
use crate::spec::{RunSpec, ScheduleName};

/// One summary row per manifest entry. A run that could not start carries
/// `outcome = "Error"` and the message in `failure`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub index: usize,
    pub problem: String,
    pub n: usize,
    pub schedule: ScheduleName,
    pub theta: f64,
    pub lambda: f64,
    pub seed: Option<u64>,
    pub outcome: String,
    pub converged: bool,
    pub failure: Option<String>,
    pub final_gradient_norm: Option<f64>,
    pub iterations: Option<u64>,
    pub function_evals: Option<u64>,
    pub gradient_evals: Option<u64>,
    pub hessian_evals: Option<u64>,
    pub hvp_evals: Option<u64>,
    pub normalized_hvps: Option<f64>,
    pub linesearch_failure_rate: Option<f64>,
    pub second_linesearch_rate: Option<f64>,
    pub fallback_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchAggregate {
    pub total: usize,
    pub converged: usize,
    pub not_converged: usize,
    pub numerical_failures: usize,
    pub errors: usize,
    pub rows: Vec<BenchRow>,
}

fn run_one(index: usize, spec: &RunSpec) -> BenchRow {
    let mut row = BenchRow {
        index,
        problem: spec.problem.clone(),
        n: spec.dimension(),
        schedule: spec.schedule,
        theta: spec.theta,
        lambda: spec.lambda,
        seed: spec.x0.seed(),
        outcome: "Error".into(),
        converged: false,
        failure: None,
        final_gradient_norm: None,
        iterations: None,
        function_evals: None,
        gradient_evals: None,
        hessian_evals: None,
        hvp_evals: None,
        normalized_hvps: None,
        linesearch_failure_rate: None,
        second_linesearch_rate: None,
        fallback_rate: None,
    };
    match execute_and_save(spec) {
        Ok(result) => {
            let report = &result.report;
            row.outcome = report.outcome.as_str().to_owned();
            row.converged = report.outcome == Outcome::Converged;
            row.failure = failure_detail(&report.outcome);
            row.final_gradient_norm = Some(report.final_gradient_norm);
            row.iterations = Some(report.iterations);
            let c = report.counters;
            row.function_evals = Some(c.value_evals);
            row.gradient_evals = Some(c.gradient_evals);
            row.hessian_evals = Some(c.hessian_points);
            row.hvp_evals = Some(c.hvp_evals);
            let m: Option<Metrics> = result.to_report(spec).summary;
            let rate = |f: fn(&Metrics) -> f64| Some(m.as_ref().map_or(0.0, f));
            row.normalized_hvps = Some(c.hvp_evals as f64 / row.n as f64);
            row.linesearch_failure_rate = rate(|m| m.linesearch_failure_rate);
            row.second_linesearch_rate = rate(|m| m.second_linesearch_rate);
            row.fallback_rate = rate(|m| m.fallback_rate);
        }
        Err(e) => row.failure = Some(e.to_string()),
    }
    row
}

/// Runs every spec; individual failures are recorded, never propagated.
pub fn run_batch(manifest: &Manifest) -> Result<BenchAggregate, CliError> {
    if manifest.runs.is_empty() {
        return Err(CliError::Usage("manifest lists no runs".into()));
    }
    let rows: Vec<BenchRow> = manifest
        .runs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| run_one(i, spec))
        .collect();
    let count = |label: &str| rows.iter().filter(|r| r.outcome == label).count();
    let converged = count("Converged");
    Ok(BenchAggregate {
        total: rows.len(),
        converged,
        not_converged: count("IterationLimit") + count("TimeLimit"),
        numerical_failures: count("NumericalFailure"),
        errors: count("Error"),
        rows,
    })
}

pub fn save_rows(path: &Path, rows: &[BenchRow]) -> Result<(), CliError> {
    let csv_err = |source| CliError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}
