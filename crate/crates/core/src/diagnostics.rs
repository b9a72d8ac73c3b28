//! Iteration traces, local-order estimation and benchmark metrics.

use alloc::vec::Vec;

use crate::capped_cg::CgKind;
use crate::oracle::EvalCounters;

/// One row of the solver trace, describing outer iteration `k`.
///
/// `g_k`, `eps_k`, `m_k` and `value_phi` are taken at `x_k`; the `*_next`
/// fields describe the adopted step. Counters are cumulative after the
/// iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: u64,
    pub g_k: f64,
    pub eps_k: f64,
    pub omega_t: f64,
    pub omega_f: f64,
    pub m_k: f64,
    pub m_next: f64,
    pub d_type: CgKind,
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
    pub counters: EvalCounters,
}

/// `g_0, …, g_K` recovered from a trace.
pub fn gradient_series(trace: &[IterationRecord]) -> Vec<f64> {
    let mut out: Vec<f64> = trace.iter().map(|r| r.g_k).collect();
    if let Some(last) = trace.last() {
        out.push(last.g_next);
    }
    out
}

/// Least-squares fit of `log g_{k+1}` against `log g_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub pairs: usize,
}

/// Default fitting window for [`estimate_local_order`].
pub const DEFAULT_ORDER_WINDOW: (f64, f64) = (1e-12, 1e-2);

/// A successor within this many ulps-worth of `g_k` is cancellation noise.
const NOISE_CONTRACTION: f64 = 16.0 * f64::EPSILON;

const MIN_ORDER_PAIRS: usize = 2;

/// Consecutive pairs `(g_k, g_{k+1})` used for order fitting: `g_k` lies in
/// `[lo, hi]` and `g_{k+1}` is a genuine decrease above round-off level.
pub fn order_pairs(series: &[f64], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    series
        .windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|&(a, b)| {
            (lo..=hi).contains(&a) && b.is_finite() && b > NOISE_CONTRACTION * a && b < a
        })
        .collect()
}

/// Empirical local order: slope of `log g_{k+1}` versus `log g_k` over the
/// window. `None` when fewer than two pairs qualify.
pub fn estimate_local_order(series: &[f64], lo: f64, hi: f64) -> Option<OrderEstimate> {
    let pts: Vec<(f64, f64)> = order_pairs(series, lo, hi)
        .into_iter()
        .map(|(a, b)| (libm::log(a), libm::log(b)))
        .collect();
    if pts.len() < MIN_ORDER_PAIRS {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(OrderEstimate {
        slope,
        intercept: my - slope * mx,
        pairs: pts.len(),
    })
}

/// Positive root of `½ + θ̄ν/(1+ν) = ν` with `θ̄ = min(θ, 1)`.
///
/// Ranges over `[½, 1]`; `θ → 0` gives `½`, `θ >= 1` gives `1`.
pub fn nu_infinity(theta: f64) -> f64 {
    let theta_bar = theta.clamp(0.0, 1.0);
    let nu_bar = 0.5;
    let a = 1.0 - nu_bar - theta_bar;
    -0.5 * a + 0.5 * libm::sqrt(a * a + 4.0 * nu_bar)
}

/// Predicted local order of the gradient-norm sequence: `1 + ν_∞(θ)` for
/// `θ <= 1`, quadratic above.
pub fn predicted_order(theta: f64) -> f64 {
    if theta > 1.0 {
        2.0
    } else {
        1.0 + nu_infinity(theta)
    }
}

/// Per-run benchmark metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub iterations: u64,
    pub function_evals: u64,
    pub gradient_evals: u64,
    pub hessian_evals: u64,
    pub hvp_evals: u64,
    /// HVPs divided by the problem dimension.
    pub normalized_hvps: f64,
    pub linesearch_failure_rate: f64,
    pub second_linesearch_rate: f64,
    pub fallback_rate: f64,
}

/// Metrics over a non-empty trace of an `n`-dimensional run.
pub fn summarize(trace: &[IterationRecord], n: usize) -> Option<RunSummary> {
    let last = trace.last()?;
    let iters = trace.len() as f64;
    let rate = |pred: fn(&IterationRecord) -> bool| {
        trace.iter().filter(|r| pred(r)).count() as f64 / iters
    };
    Some(RunSummary {
        iterations: trace.len() as u64,
        function_evals: last.counters.value_evals,
        gradient_evals: last.counters.gradient_evals,
        hessian_evals: last.counters.hessian_points,
        hvp_evals: last.counters.hvp_evals,
        normalized_hvps: last.counters.hvp_evals as f64 / n as f64,
        linesearch_failure_rate: rate(|r| r.linesearch_exhausted),
        second_linesearch_rate: rate(|r| r.used_secondary_linesearch),
        fallback_rate: rate(|r| r.used_fallback),
    })
}
