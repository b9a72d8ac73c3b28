//! Run specifications: everything needed to reproduce a single solve.

use std::path::PathBuf;
use std::str::FromStr;

use arncg_core::{make_problem, Schedule, SolverConfig, StepParams, TestProblem};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::start::random_start;

/// How the starting point is chosen.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartPoint {
    /// The problem's conventional start.
    #[default]
    Default,
    Ones,
    /// Uniform in `[-1, 1]^n` from a SplitMix64 stream.
    Random {
        seed: u64,
    },
    Explicit(Vec<f64>),
}

impl StartPoint {
    /// Parses `default`, `ones`, `random` (seeded by `seed`, 0 if absent)
    /// or a comma-separated coordinate list.
    pub fn parse(text: &str, seed: Option<u64>) -> Result<Self, CliError> {
        match text.trim() {
            "default" => Ok(StartPoint::Default),
            "ones" => Ok(StartPoint::Ones),
            "random" => Ok(StartPoint::Random {
                seed: seed.unwrap_or(0),
            }),
            list => list
                .split(',')
                .map(|c| f64::from_str(c.trim()))
                .collect::<Result<Vec<_>, _>>()
                .map(StartPoint::Explicit)
                .map_err(|_| {
                    CliError::Usage(format!(
                        "--x0 expects default, ones, random or a comma-separated list, got {text:?}"
                    ))
                }),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            StartPoint::Random { seed } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleName {
    #[default]
    Grad,
    Eps,
    Fixed,
}

impl From<ScheduleName> for Schedule {
    fn from(s: ScheduleName) -> Self {
        match s {
            ScheduleName::Grad => Schedule::GradBased,
            ScheduleName::Eps => Schedule::EpsBased,
            ScheduleName::Fixed => Schedule::Fixed,
        }
    }
}

/// Optional replacements for the default step parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_minus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl StepOverrides {
    pub fn apply(&self, mut p: StepParams) -> StepParams {
        p.mu = self.mu.unwrap_or(p.mu);
        p.beta = self.beta.unwrap_or(p.beta);
        p.m_max = self.m_max.unwrap_or(p.m_max);
        p.tau = self.tau.unwrap_or(p.tau);
        p.tau_minus = self.tau_minus.unwrap_or(p.tau_minus);
        p.tau_plus = self.tau_plus.unwrap_or(p.tau_plus);
        p.gamma = self.gamma.unwrap_or(p.gamma);
        p.eta = self.eta.unwrap_or(p.eta);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub problem: String,
    /// Dimension; when absent, 1 for `scalar_quad` and 10 otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub x0: StartPoint,
    pub schedule: ScheduleName,
    pub theta: f64,
    pub lambda: f64,
    pub eps: f64,
    pub max_iterations: u64,
    pub step: StepOverrides,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_limit_secs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report_out: Option<PathBuf>,
}

impl Default for RunSpec {
    fn default() -> Self {
        let cfg = SolverConfig::default();
        RunSpec {
            problem: "quad".into(),
            n: None,
            x0: StartPoint::Default,
            schedule: ScheduleName::Grad,
            theta: cfg.theta,
            lambda: cfg.lambda,
            eps: cfg.epsilon,
            max_iterations: cfg.max_iterations,
            step: StepOverrides::default(),
            m0: None,
            max_m: None,
            time_limit_secs: None,
            trace_out: None,
            report_out: None,
        }
    }
}

impl RunSpec {
    pub fn dimension(&self) -> usize {
        self.n.unwrap_or(match self.problem.as_str() {
            "scalar_quad" => 1,
            _ => match &self.x0 {
                StartPoint::Explicit(v) => v.len(),
                _ => 10,
            },
        })
    }

    pub fn problem(&self) -> Result<TestProblem, CliError> {
        Ok(make_problem(&self.problem, self.dimension())?)
    }

    pub fn start(&self, problem: &TestProblem) -> Result<Vec<f64>, CliError> {
        let n = self.dimension();
        let x0 = match &self.x0 {
            StartPoint::Default => problem.default_start(),
            StartPoint::Ones => vec![1.0; n],
            StartPoint::Random { seed } => random_start(*seed, n),
            StartPoint::Explicit(v) => v.clone(),
        };
        if x0.len() != n {
            return Err(CliError::Usage(format!(
                "starting point has {} coordinates but n = {n}",
                x0.len()
            )));
        }
        Ok(x0)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let base = SolverConfig::default();
        let cfg = SolverConfig {
            schedule: self.schedule.into(),
            theta: self.theta,
            lambda: self.lambda,
            epsilon: self.eps,
            max_iterations: self.max_iterations,
            step: self.step.apply(base.step),
            m0: self.m0.unwrap_or(base.m0),
            max_m: self.max_m.unwrap_or(base.max_m),
            ..base
        };
        cfg.validate()?;
        if let Some(t) = self.time_limit_secs {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(CliError::Usage(format!(
                    "time limit must be a nonnegative number of seconds, got {t}"
                )));
            }
        }
        Ok(cfg)
    }
}
