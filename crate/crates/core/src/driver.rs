//! Outer loop: regularizer schedules, trial/fallback logic, termination and
//! numerical safeguards.

use alloc::vec::Vec;

use crate::capped_cg::CgKind;
use crate::diagnostics::IterationRecord;
use crate::linalg::norm;
use crate::newton_step::{newton_step, StepOutcome, StepParams, StepPoint, StepStatus};
use crate::oracle::{DesignPoint, EvalCounters, Objective, Oracle};
use crate::{Error, Result};

/// How the fallback regularizer `ω_f` is built; the trial regularizer is
/// always `ω_t = ω_f · δ_k^θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// `ω_f = √g_k`, `δ_k = min(1, g_k / g_{k-1})`.
    #[default]
    GradBased,
    /// `ω_f = √ε_k`, `δ_k = ε_k / ε_{k-1}` with `ε_k = min_{j<=k} g_j`.
    EpsBased,
    /// `ω_t = ω_f = √ε` (the classical fixed regularizer).
    Fixed,
}

impl Schedule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Schedule::GradBased => "grad",
            Schedule::EpsBased => "eps",
            Schedule::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub schedule: Schedule,
    pub theta: f64,
    /// Relaxed fallback trigger; 0 disables the fallback, 1 is the strict
    /// rule.
    pub lambda: f64,
    /// Target gradient norm.
    pub epsilon: f64,
    pub max_iterations: u64,
    pub step: StepParams,
    pub m0: f64,
    /// Iterations with unchanged value and gradient norm before giving up.
    pub stall_window: u32,
    pub min_direction_norm: f64,
    pub max_m: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            schedule: Schedule::GradBased,
            theta: 1.0,
            lambda: 0.0,
            epsilon: 1e-5,
            max_iterations: 100_000,
            step: StepParams::default(),
            m0: 1.0,
            stall_window: 20,
            min_direction_norm: 2e-16,
            max_m: 1e40,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return bad("theta", "must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda", "must lie in [0, 1]");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon", "must be positive");
        }
        if !(self.m0 > 0.0 && self.m0.is_finite()) {
            return bad("m0", "must be positive and finite");
        }
        if !(self.max_m > 0.0) {
            return bad("max_m", "must be positive");
        }
        self.step.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: DesignPoint,
    pub value: f64,
    pub grad: Vec<f64>,
    pub g: f64,
    pub g_prev: f64,
    pub eps: f64,
    pub eps_prev: f64,
    pub m: f64,
    pub k: u64,
}

impl SolverState {
    /// State at `k = 0` with `g_{-1} = ε_{-1} = g_0`.
    pub fn initial(x: DesignPoint, value: f64, grad: Vec<f64>, m0: f64) -> Self {
        let g = norm(&grad);
        Self {
            x,
            value,
            grad,
            g,
            g_prev: g,
            eps: g,
            eps_prev: g,
            m: m0,
            k: 0,
        }
    }
}

/// `(ω_t, ω_f)` for the current state.
pub fn regularizers(state: &SolverState, cfg: &SolverConfig) -> (f64, f64) {
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 1.0 };
    let (omega_f, delta) = match cfg.schedule {
        Schedule::GradBased => (libm::sqrt(state.g), ratio(state.g, state.g_prev).min(1.0)),
        Schedule::EpsBased => (libm::sqrt(state.eps), ratio(state.eps, state.eps_prev)),
        Schedule::Fixed => {
            let w = libm::sqrt(cfg.epsilon);
            return (w, w);
        }
    };
    (omega_f * libm::pow(delta, cfg.theta), omega_f)
}

/// `λ g_{k+½} > g_k` and `g_k <= λ g_{k-1}`.
pub fn fallback_trigger(g_half: f64, g: f64, g_prev: f64, lambda: f64) -> bool {
    lambda * g_half > g && g <= lambda * g_prev
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureReason {
    /// Value and gradient norm unchanged for `stall_window` iterations.
    Stalled,
    /// `‖d_k‖` at or below `min_direction_norm`.
    TinyDirection,
    /// `M_k` reached `max_m`.
    LipschitzOverflow,
    /// The oracle or an inner routine reported an error.
    Oracle(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Converged,
    IterationLimit,
    TimeLimit,
    NumericalFailure(FailureReason),
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Converged => "Converged",
            Outcome::IterationLimit => "IterationLimit",
            Outcome::TimeLimit => "TimeLimit",
            Outcome::NumericalFailure(_) => "NumericalFailure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub outcome: Outcome,
    pub final_point: Vec<f64>,
    pub final_value: f64,
    pub final_gradient_norm: f64,
    pub iterations: u64,
    pub counters: EvalCounters,
    pub trace: Vec<IterationRecord>,
}

/// One `NewtonStep` call as seen by [`Budget::on_newton_step`].
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub k: u64,
    pub fallback: bool,
    /// Oracle calls spent inside this step.
    pub evals: EvalCounters,
    pub outcome: &'a StepOutcome,
}

/// External stopping rule and instrumentation for [`solve_with_budget`].
pub trait Budget {
    /// Checked once per iteration; `true` stops with [`Outcome::TimeLimit`].
    fn exhausted(&mut self) -> bool {
        false
    }

    fn on_newton_step(&mut self, _event: &StepEvent<'_>) {}
}

/// No time limit and no instrumentation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unlimited;

impl Budget for Unlimited {}

pub fn solve<F: Objective>(
    oracle: &mut Oracle<F>,
    x0: &DesignPoint,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    solve_with_budget(oracle, x0, cfg, &mut Unlimited)
}

/// Runs the solver until the gradient norm drops to `cfg.epsilon` or a
/// limit or safeguard fires.
///
/// Only configuration errors are returned as `Err`; oracle failures end the
/// run with [`Outcome::NumericalFailure`].
pub fn solve_with_budget<F: Objective, B: Budget + ?Sized>(
    oracle: &mut Oracle<F>,
    x0: &DesignPoint,
    cfg: &SolverConfig,
    budget: &mut B,
) -> Result<SolveReport> {
    cfg.validate()?;
    if x0.dimension() != oracle.dimension() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dimension(),
            found: x0.dimension(),
        });
    }
    let mut trace = Vec::new();

    let start = oracle
        .value(x0)
        .and_then(|v| oracle.gradient(x0).map(|g| (v, g)));
    let (value0, grad0) = match start {
        Ok(vg) => vg,
        Err(e) => {
            return Ok(SolveReport {
                outcome: Outcome::NumericalFailure(FailureReason::Oracle(e)),
                final_point: x0.to_vec(),
                final_value: f64::NAN,
                final_gradient_norm: f64::NAN,
                iterations: 0,
                counters: oracle.counters(),
                trace,
            });
        }
    };
    let mut state = SolverState::initial(x0.clone(), value0, grad0, cfg.m0);
    let mut stalled_for = 0u32;

    let outcome = loop {
        if state.g <= cfg.epsilon {
            break Outcome::Converged;
        }
        if state.k >= cfg.max_iterations {
            break Outcome::IterationLimit;
        }
        if budget.exhausted() {
            break Outcome::TimeLimit;
        }
        if state.m >= cfg.max_m {
            break Outcome::NumericalFailure(FailureReason::LipschitzOverflow);
        }

        let (omega_t, omega_f) = regularizers(&state, cfg);
        let step = match iterate(oracle, &state, cfg, omega_t, omega_f, budget) {
            Ok(s) => s,
            Err(e) => break Outcome::NumericalFailure(FailureReason::Oracle(e)),
        };
        let (outcome, used_fallback) = step;
        if outcome.status == StepStatus::Fail {
            break Outcome::NumericalFailure(FailureReason::Oracle(Error::InvariantViolation(
                "fallback step returned TERM",
            )));
        }

        let g_next = norm(&outcome.grad_next);
        trace.push(IterationRecord {
            k: state.k,
            g_k: state.g,
            eps_k: state.eps,
            omega_t,
            omega_f,
            m_k: state.m,
            m_next: outcome.m_next,
            d_type: outcome.d_type,
            stepsize_alpha: outcome.stepsize,
            linesearch_m: outcome.linesearch_m,
            used_fallback,
            used_secondary_linesearch: outcome.used_secondary_linesearch,
            linesearch_exhausted: outcome.linesearch_exhausted,
            value_phi: state.value,
            value_next: outcome.value_next,
            g_next,
            direction_norm: outcome.direction_norm,
            rho: outcome.rho,
            cg_iterations: outcome.cg_iterations as u64,
            counters: oracle.counters(),
        });

        let unchanged = outcome.value_next == state.value && g_next == state.g;
        let direction_norm = outcome.direction_norm;
        state.g_prev = state.g;
        state.eps_prev = state.eps;
        state.g = g_next;
        state.eps = state.eps.min(g_next);
        state.m = outcome.m_next;
        state.value = outcome.value_next;
        state.grad = outcome.grad_next;
        state.x = DesignPoint::new(outcome.x_next)?;
        state.k += 1;

        if state.g <= cfg.epsilon {
            continue;
        }
        stalled_for = if unchanged { stalled_for + 1 } else { 0 };
        if stalled_for >= cfg.stall_window {
            break Outcome::NumericalFailure(FailureReason::Stalled);
        }
        if direction_norm <= cfg.min_direction_norm {
            break Outcome::NumericalFailure(FailureReason::TinyDirection);
        }
    };

    Ok(SolveReport {
        outcome,
        final_gradient_norm: state.g,
        final_value: state.value,
        iterations: state.k,
        counters: oracle.counters(),
        final_point: state.x.into_inner(),
        trace,
    })
}

/// Trial step, then the fallback step if the trial failed or the gradient
/// norm jumped. Returns the adopted step and whether it was the fallback.
fn iterate<F: Objective, B: Budget + ?Sized>(
    oracle: &mut Oracle<F>,
    state: &SolverState,
    cfg: &SolverConfig,
    omega_t: f64,
    omega_f: f64,
    budget: &mut B,
) -> Result<(StepOutcome, bool)> {
    let point = StepPoint {
        x: &state.x,
        value: state.value,
        grad: &state.grad,
    };
    let mut run = |omega: f64, fallback: bool, oracle: &mut Oracle<F>| -> Result<StepOutcome> {
        let before = oracle.counters();
        let out = newton_step(oracle, point, omega, state.m, omega_f, &cfg.step)?;
        budget.on_newton_step(&StepEvent {
            k: state.k,
            fallback,
            evals: oracle.counters().since(&before),
            outcome: &out,
        });
        Ok(out)
    };

    let trial = run(omega_t, false, oracle)?;
    let g_half = norm(&trial.grad_next);
    if trial.status == StepStatus::Fail
        || fallback_trigger(g_half, state.g, state.g_prev, cfg.lambda)
    {
        let fallback = run(omega_f, true, oracle)?;
        debug_assert!(fallback.d_type != CgKind::Term);
        return Ok((fallback, true));
    }
    Ok((trial, false))
}
