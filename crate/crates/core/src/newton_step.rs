//! One regularized Newton step: capped CG, stepsize selection, and the
//! Lipschitz-estimate update.
//!
//! A `SOL` direction is tried with Armijo backtracking from a unit step; if
//! that exhausts `m_max` reductions, a second search starts from the smaller
//! trial stepsize `α̂ = min(1, ω^{1/2} M^{-1/4} ‖d‖^{-1/2})`. An `NC` direction
//! is normalized, rescaled to length `M⁻¹|d̄ᵀHd̄|`, oriented downhill, and
//! searched with a cubic sufficient-decrease test. If every search fails the
//! point is kept and `M` grows by `γ`.

use alloc::vec::Vec;

use crate::capped_cg::{capped_cg, CgConfig, CgKind, HistoryMode, DEFAULT_ABS_RESIDUAL_CAP};
use crate::linalg::{dot, norm, offset};
use crate::oracle::{Objective, Oracle};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    /// Sufficient-decrease constant, `(0, ½)`.
    pub mu: f64,
    /// Backtracking factor, `(0, 1)`.
    pub beta: f64,
    /// Maximum number of backtracking reductions per search.
    pub m_max: u32,
    /// Scales `ρ̄ = τ√M ω̄`, `(0, 1]`.
    pub tau: f64,
    pub tau_minus: f64,
    pub tau_plus: f64,
    /// Multiplicative update of `M`, `> 1`.
    pub gamma: f64,
    /// Upper bound on the CG tolerance, `[0, 1]`.
    pub eta: f64,
    pub abs_residual_cap: f64,
    pub cg_history: HistoryMode,
}

impl Default for StepParams {
    fn default() -> Self {
        Self {
            mu: 0.3,
            beta: 0.5,
            m_max: 1,
            tau: 1.0,
            tau_minus: 0.3,
            tau_plus: 1.0,
            gamma: 5.0,
            eta: 0.01,
            abs_residual_cap: DEFAULT_ABS_RESIDUAL_CAP,
            cg_history: HistoryMode::default(),
        }
    }
}

fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}

impl StepParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return Err(invalid("mu", "must lie in (0, 1/2)"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(invalid("beta", "must lie in (0, 1)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(invalid("tau", "must lie in (0, 1]"));
        }
        if !(self.tau_minus > 0.0 && self.tau_minus < 1.0) {
            return Err(invalid("tau_minus", "must lie in (0, 1)"));
        }
        if !(self.tau_plus > 0.0 && self.tau_plus <= 1.0) {
            return Err(invalid("tau_plus", "must lie in (0, 1]"));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be finite and greater than 1"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(invalid("eta", "must lie in [0, 1]"));
        }
        if !(self.abs_residual_cap > 0.0) {
            return Err(invalid("abs_residual_cap", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Accepted,
    /// Capped CG hit its budget (`TERM`); the point is unchanged.
    Fail,
}

/// An accepted backtracking trial.
#[derive(Debug, Clone, PartialEq)]
pub struct LinesearchHit {
    pub m: u32,
    pub alpha: f64,
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub status: StepStatus,
    pub x_next: Vec<f64>,
    pub value_next: f64,
    /// `∇φ(x_next)`; the input gradient when the point did not move.
    pub grad_next: Vec<f64>,
    pub m_next: f64,
    pub d_type: CgKind,
    pub linesearch_m: Option<u32>,
    pub used_secondary_linesearch: bool,
    /// Accepted stepsize `α`; 0 when the point did not move.
    pub stepsize: f64,
    pub direction_norm: f64,
    pub linesearch_exhausted: bool,
    pub rho: f64,
    pub rho_bar: f64,
    pub xi: f64,
    pub cg_iterations: usize,
    pub cg_norm_estimate: f64,
}

/// The current iterate with its cached value and gradient.
#[derive(Debug, Clone, Copy)]
pub struct StepPoint<'a> {
    pub x: &'a [f64],
    pub value: f64,
    pub grad: &'a [f64],
}

fn trial_value<F: Objective>(oracle: &mut Oracle<F>, point: &[f64]) -> Result<f64> {
    match oracle.value(point) {
        Ok(v) => Ok(v),
        // overflow along a long trial step just fails the test
        Err(Error::NonFinite { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Smallest `m <= m_max` with
/// `φ(x + sβ^m d) <= φ(x) + μ sβ^m dᵀ∇φ(x)` where `s` is `scale`.
///
/// `slope` is `dᵀ∇φ(x)`; the gradient is not re-evaluated.
pub fn armijo_search<F: Objective>(
    oracle: &mut Oracle<F>,
    x: &[f64],
    value: f64,
    d: &[f64],
    slope: f64,
    scale: f64,
    params: &StepParams,
) -> Result<Option<LinesearchHit>> {
    let mut alpha = scale;
    for m in 0..=params.m_max {
        let point = offset(x, alpha, d);
        let trial = trial_value(oracle, &point)?;
        if trial <= value + params.mu * alpha * slope {
            return Ok(Some(LinesearchHit {
                m,
                alpha,
                point,
                value: trial,
            }));
        }
        alpha *= params.beta;
    }
    Ok(None)
}

/// Turns a negative-curvature vector into a descent direction of length
/// `L(d̄) = M⁻¹ |d̄ᵀ∇²φ(x)d̄|`, using one Hessian-vector product.
///
/// Returns the direction and `d̄ᵀ∇²φ(x)d̄`. A zero `∇φ(x)ᵀd̄` keeps the
/// orientation `-d̄`.
pub fn nc_direction<H>(mut hvp: H, d_tilde: &[f64], m: f64, grad: &[f64]) -> Result<(Vec<f64>, f64)>
where
    H: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let len = norm(d_tilde);
    if len == 0.0 {
        return Err(invalid(
            "d_tilde",
            "negative-curvature vector must be nonzero",
        ));
    }
    let unit: Vec<f64> = d_tilde.iter().map(|v| v / len).collect();
    let curvature = dot(&unit, &hvp(&unit)?);
    let length = curvature.abs() / m;
    let sign = if dot(&unit, grad) < 0.0 { -1.0 } else { 1.0 };
    let d = unit.iter().map(|u| -length * sign * u).collect();
    Ok((d, curvature))
}

/// Smallest `m <= m_max` with `φ(x + β^m d) <= φ(x) - Mμβ^{2m}‖d‖³`.
pub fn nc_linesearch<F: Objective>(
    oracle: &mut Oracle<F>,
    x: &[f64],
    value: f64,
    d: &[f64],
    m_lip: f64,
    params: &StepParams,
) -> Result<Option<LinesearchHit>> {
    let d_cubed = libm::pow(norm(d), 3.0);
    let mut alpha = 1.0;
    for m in 0..=params.m_max {
        let point = offset(x, alpha, d);
        let trial = trial_value(oracle, &point)?;
        if trial <= value - m_lip * params.mu * alpha * alpha * d_cubed {
            return Ok(Some(LinesearchHit {
                m,
                alpha,
                point,
                value: trial,
            }));
        }
        alpha *= params.beta;
    }
    Ok(None)
}

/// Inputs of the Lipschitz-estimate update after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipInput {
    /// `φ(x) - φ(x⁺)`
    pub delta: f64,
    pub d_type: CgKind,
    /// `SOL` accepted at `m = 0` by the unit-scale Armijo search.
    pub unit_sol_step: bool,
    pub omega: f64,
    pub omega_bar: f64,
    pub m: f64,
    pub grad_next_norm: f64,
}

/// Returns `γM`, `M` or `M/γ` depending on how the realized decrease compares
/// with the decrease predicted for a well-estimated `M`.
pub fn lip_estimation(input: &LipInput, params: &StepParams) -> f64 {
    let LipInput {
        delta,
        d_type,
        unit_sol_step,
        omega,
        omega_bar,
        m,
        grad_next_norm,
    } = *input;
    let mu = params.mu;
    let inv_sqrt_m = 1.0 / libm::sqrt(m);
    let omega3 = omega * omega * omega;
    let omega_bar3 = omega_bar * omega_bar * omega_bar;
    let grow = params.gamma * m;
    let shrink = m / params.gamma;

    if d_type == CgKind::Sol && unit_sol_step {
        let predicted = (grad_next_norm * grad_next_norm / omega).min(omega3);
        if delta <= 4.0 / 33.0 * mu * params.tau_plus * inv_sqrt_m * predicted {
            grow
        } else if delta >= 4.0 / 33.0 * mu * params.tau_minus * inv_sqrt_m * omega_bar3 {
            shrink
        } else {
            m
        }
    } else if d_type == CgKind::Sol
        && delta <= params.tau_plus * params.beta * mu * inv_sqrt_m * omega3
    {
        grow
    } else if d_type == CgKind::Nc && {
        let c = 1.0 - 2.0 * mu;
        delta <= params.tau_plus * c * c * params.beta * params.beta * mu * inv_sqrt_m * omega3
    } {
        grow
    } else if delta >= mu * params.tau_minus * inv_sqrt_m * omega_bar3 {
        shrink
    } else {
        m
    }
}

/// One `NewtonStep` at `point` with regularizer `omega`, estimate `m` and
/// budget regularizer `omega_bar`.
///
/// Spends at most `2(m_max + 1)` value evaluations, one gradient evaluation
/// (at the new point, only if it moved) and the capped-CG products plus one
/// more for an `NC` direction.
pub fn newton_step<F: Objective>(
    oracle: &mut Oracle<F>,
    point: StepPoint<'_>,
    omega: f64,
    m: f64,
    omega_bar: f64,
    params: &StepParams,
) -> Result<StepOutcome> {
    params.validate()?;
    if !(omega > 0.0 && omega_bar > 0.0 && m > 0.0) {
        return Err(invalid("omega/omega_bar/M", "must be positive"));
    }
    let StepPoint { x, value, grad } = point;
    let sqrt_m = libm::sqrt(m);
    let rho = sqrt_m * omega;
    let xi = params.eta.min(rho);
    let rho_bar = params.tau * sqrt_m * omega_bar;
    let cfg = CgConfig {
        rho,
        xi,
        rho_bar,
        abs_residual_cap: params.abs_residual_cap,
        history_mode: params.cg_history,
    };
    let cg = capped_cg(|v: &[f64]| oracle.hvp(x, v), grad, &cfg)?;

    let unmoved = |status, d_type, m_next, direction_norm, exhausted, secondary| StepOutcome {
        status,
        x_next: x.to_vec(),
        value_next: value,
        grad_next: grad.to_vec(),
        m_next,
        d_type,
        linesearch_m: None,
        used_secondary_linesearch: secondary,
        stepsize: 0.0,
        direction_norm,
        linesearch_exhausted: exhausted,
        rho,
        rho_bar,
        xi,
        cg_iterations: cg.iterations,
        cg_norm_estimate: cg.norm_estimate,
    };

    let (d, hit, unit_sol_step, secondary) = match cg.kind {
        CgKind::Term => {
            return Ok(unmoved(
                StepStatus::Fail,
                CgKind::Term,
                m,
                0.0,
                false,
                false,
            ));
        }
        CgKind::Sol => {
            let d = cg.direction.clone();
            let slope = dot(&d, grad);
            match armijo_search(oracle, x, value, &d, slope, 1.0, params)? {
                Some(hit) => {
                    let unit = hit.m == 0;
                    (d, hit, unit, false)
                }
                None => {
                    let alpha_hat =
                        (libm::sqrt(omega) / libm::pow(m, 0.25) / libm::sqrt(norm(&d))).min(1.0);
                    match armijo_search(oracle, x, value, &d, slope, alpha_hat, params)? {
                        Some(hit) => (d, hit, false, true),
                        None => {
                            return Ok(unmoved(
                                StepStatus::Accepted,
                                CgKind::Sol,
                                params.gamma * m,
                                norm(&d),
                                true,
                                true,
                            ));
                        }
                    }
                }
            }
        }
        CgKind::Nc => {
            let (d, _) = nc_direction(|v: &[f64]| oracle.hvp(x, v), &cg.direction, m, grad)?;
            match nc_linesearch(oracle, x, value, &d, m, params)? {
                Some(hit) => (d, hit, false, false),
                None => {
                    return Ok(unmoved(
                        StepStatus::Accepted,
                        CgKind::Nc,
                        params.gamma * m,
                        norm(&d),
                        true,
                        false,
                    ));
                }
            }
        }
    };

    let grad_next = oracle.gradient(&hit.point)?;
    let m_next = lip_estimation(
        &LipInput {
            delta: value - hit.value,
            d_type: cg.kind,
            unit_sol_step,
            omega,
            omega_bar,
            m,
            grad_next_norm: norm(&grad_next),
        },
        params,
    );
    Ok(StepOutcome {
        status: StepStatus::Accepted,
        x_next: hit.point,
        value_next: hit.value,
        grad_next,
        m_next,
        d_type: cg.kind,
        linesearch_m: Some(hit.m),
        used_secondary_linesearch: secondary,
        stepsize: hit.alpha,
        direction_norm: norm(&d),
        linesearch_exhausted: false,
        rho,
        rho_bar,
        xi,
        cg_iterations: cg.iterations,
        cg_norm_estimate: cg.norm_estimate,
    })
}
