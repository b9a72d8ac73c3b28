use std::time::{Duration, Instant};

use arncg_core::{
    solve_with_budget, summarize, Budget, DesignPoint, Oracle, SolveReport, Unlimited,
};

use crate::error::CliError;
use crate::formats::{failure_detail, save_json, save_trace, Report};
use crate::spec::RunSpec;

/// Stops the solver once a wall-clock deadline has passed.
#[derive(Debug, Clone, Copy)]
pub struct WallClock {
    deadline: Instant,
}

impl WallClock {
    pub fn new(limit: Duration) -> Self {
        WallClock {
            deadline: Instant::now() + limit,
        }
    }
}

impl Budget for WallClock {
    fn exhausted(&mut self) -> bool {
        Instant::now() >= self.deadline
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub n: usize,
    pub x0: Vec<f64>,
    pub report: SolveReport,
}

impl RunResult {
    pub fn to_report(&self, spec: &RunSpec) -> Report {
        let r = &self.report;
        Report {
            spec: spec.clone(),
            n: self.n,
            seed: spec.x0.seed(),
            x0: self.x0.clone(),
            outcome: r.outcome.as_str().to_owned(),
            failure: failure_detail(&r.outcome),
            iterations: r.iterations,
            final_value: r.final_value,
            final_gradient_norm: r.final_gradient_norm,
            final_point: r.final_point.clone(),
            counters: r.counters.into(),
            summary: summarize(&r.trace, self.n).map(Into::into),
        }
    }
}

/// Resolves and solves `spec` without writing any files.
pub fn execute(spec: &RunSpec) -> Result<RunResult, CliError> {
    let problem = spec.problem()?;
    let cfg = spec.solver_config()?;
    let x0 = spec.start(&problem)?;
    let point = DesignPoint::new(x0.clone())?;
    let mut oracle = Oracle::new(problem);
    let report = match spec.time_limit_secs {
        Some(secs) => {
            let mut clock = WallClock::new(Duration::from_secs_f64(secs));
            solve_with_budget(&mut oracle, &point, &cfg, &mut clock)?
        }
        None => solve_with_budget(&mut oracle, &point, &cfg, &mut Unlimited)?,
    };
    Ok(RunResult {
        n: spec.dimension(),
        x0,
        report,
    })
}

/// Runs `spec` and writes the trace and report files it names.
pub fn execute_and_save(spec: &RunSpec) -> Result<RunResult, CliError> {
    let result = execute(spec)?;
    if let Some(path) = &spec.trace_out {
        save_trace(path, &result.report.trace)?;
    }
    if let Some(path) = &spec.report_out {
        save_json(path, &result.to_report(spec))?;
    }
    Ok(result)
}
