//! Capped conjugate gradient for the shifted Newton system `(H + 2ρI) d = -g`.
//!
//! Plain CG is run on `H̄ = H + 2ρI` while three monitors watch for trouble:
//! curvature of the current iterate and search direction below `ρ` (returns
//! a negative-curvature direction of `H`), a residual decaying slower than the
//! theoretical rate for a positive-definite `H̄` (one more step, then a
//! backtrack over the iterate history finds a negative-curvature chord), and
//! an iteration budget driven by `ρ̄` (returns `TERM`).
//!
//! Only one Hessian-vector product is spent per iteration: `Hy`, `Hr` are
//! carried along by recursion from `Hp`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{all_finite, axpy, dot, norm, sub};
use crate::{Error, Result};

/// Absolute residual cap applied on top of the relative `ξ̂‖r₀‖` test.
pub const DEFAULT_ABS_RESIDUAL_CAP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CgKind {
    /// Approximate solution of the shifted system.
    Sol,
    /// Direction with `dᵀHd <= -ρ‖d‖²`.
    Nc,
    /// Iteration budget exhausted; only possible when `ρ < ρ̄`.
    Term,
}

impl CgKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CgKind::Sol => "SOL",
            CgKind::Nc => "NC",
            CgKind::Term => "TERM",
        }
    }
}

/// Where a negative-curvature direction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcPath {
    /// `p₀ = -g` before the first iteration.
    Initial,
    /// The current iterate `y_k`.
    Iterate,
    /// The current search direction `p_k`.
    SearchDirection,
    /// A chord `y_{k+1} - y_i` found after slow residual decay.
    Backtrack,
}

/// How the slow-decay backtrack obtains earlier iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistoryMode {
    /// Keep every `(y_i, Hy_i)`; the backtrack costs no extra products.
    Stored,
    /// Keep nothing and replay CG from scratch when the backtrack fires.
    #[default]
    Regenerated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    pub rho: f64,
    pub xi: f64,
    pub rho_bar: f64,
    pub abs_residual_cap: f64,
    pub history_mode: HistoryMode,
}

impl CgConfig {
    pub fn new(rho: f64, xi: f64, rho_bar: f64) -> Self {
        Self {
            rho,
            xi,
            rho_bar,
            abs_residual_cap: DEFAULT_ABS_RESIDUAL_CAP,
            history_mode: HistoryMode::default(),
        }
    }

    pub fn with_history(mut self, mode: HistoryMode) -> Self {
        self.history_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: "must be positive and finite",
            });
        }
        if !(self.rho_bar > 0.0 && self.rho_bar.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho_bar",
                reason: "must be positive and finite",
            });
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::InvalidParameter {
                name: "xi",
                reason: "must lie in (0, 1)",
            });
        }
        if !(self.abs_residual_cap > 0.0) {
            return Err(Error::InvalidParameter {
                name: "abs_residual_cap",
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub kind: CgKind,
    pub direction: Vec<f64>,
    /// Completed CG iterations.
    pub iterations: usize,
    pub hvp_count: usize,
    /// `‖r_k‖` at the returned iterate, `SOL` only.
    pub final_residual_norm: Option<f64>,
    /// Running estimate of `‖H‖`.
    pub norm_estimate: f64,
    pub nc_path: Option<NcPath>,
}

/// Iteration budget `J(M, ρ̄, ξ)` of capped CG (natural log).
pub fn iteration_cap(norm_estimate: f64, rho_bar: f64, xi: f64) -> f64 {
    let kappa = (norm_estimate + rho_bar) / rho_bar;
    let sk = libm::sqrt(kappa);
    let k3 = kappa * kappa * kappa;
    1.0 + (sk + 0.5) * libm::log(144.0 * (sk + 1.0) * (sk + 1.0) * k3 * k3 / (xi * xi))
}

/// CG iterate with the Hessian products that the monitors need.
#[derive(Clone)]
struct CgIterate {
    y: Vec<f64>,
    hy: Vec<f64>,
    r: Vec<f64>,
    hr: Vec<f64>,
    p: Vec<f64>,
    hp: Vec<f64>,
    r_norm2: f64,
}

struct Hvp<'a, F> {
    apply: &'a mut F,
    n: usize,
    count: usize,
}

impl<F> Hvp<'_, F>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    fn call(&mut self, v: &[f64]) -> Result<Vec<f64>> {
        self.count += 1;
        let out = (self.apply)(v)?;
        if out.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: out.len(),
            });
        }
        Ok(out)
    }
}

fn hbar(hv: &[f64], v: &[f64], rho: f64) -> Vec<f64> {
    hv.iter().zip(v).map(|(h, x)| h + 2.0 * rho * x).collect()
}

/// `vᵀ(H + 2ρI)v` from a known `Hv`.
fn hbar_quad(v: &[f64], hv: &[f64], rho: f64) -> f64 {
    dot(v, hv) + 2.0 * rho * dot(v, v)
}

fn non_finite(point: &[f64]) -> Error {
    Error::NonFinite {
        quantity: "capped CG iterate",
        point: point.to_vec(),
    }
}

impl CgIterate {
    fn start<F>(g: &[f64], hvp: &mut Hvp<'_, F>) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let n = g.len();
        let p: Vec<f64> = g.iter().map(|v| -v).collect();
        let hp = hvp.call(&p)?;
        let hr = hp.iter().map(|v| -v).collect();
        Ok(Self {
            y: vec![0.0; n],
            hy: vec![0.0; n],
            r: g.to_vec(),
            hr,
            p,
            hp,
            r_norm2: dot(g, g),
        })
    }

    /// `α_k = ‖r_k‖² / p_kᵀH̄p_k`
    fn step_length(&self, rho: f64) -> f64 {
        self.r_norm2 / hbar_quad(&self.p, &self.hp, rho)
    }

    /// One standard CG iteration followed by the single product `H p_{k+1}`.
    fn advance<F>(&mut self, rho: f64, hvp: &mut Hvp<'_, F>) -> Result<()>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let hbar_p = hbar(&self.hp, &self.p, rho);
        let alpha = self.r_norm2 / dot(&self.p, &hbar_p);
        if !alpha.is_finite() {
            return Err(non_finite(&self.y));
        }
        axpy(alpha, &self.p, &mut self.y);
        axpy(alpha, &self.hp, &mut self.hy);
        axpy(alpha, &hbar_p, &mut self.r);
        let r_norm2 = dot(&self.r, &self.r);
        let beta = r_norm2 / self.r_norm2;
        self.r_norm2 = r_norm2;
        for (pi, ri) in self.p.iter_mut().zip(&self.r) {
            *pi = -ri + beta * *pi;
        }
        let hp = hvp.call(&self.p)?;
        // r_{k+1} = -p_{k+1} + β p_k
        for ((hr, hpn), hpo) in self.hr.iter_mut().zip(&hp).zip(&self.hp) {
            *hr = -hpn + beta * hpo;
        }
        self.hp = hp;
        if !all_finite(&self.y) || !all_finite(&self.p) || !self.r_norm2.is_finite() {
            return Err(non_finite(&self.y));
        }
        Ok(())
    }
}

fn ratio(hv: &[f64], v: &[f64]) -> f64 {
    let d = norm(v);
    if d > 0.0 {
        norm(hv) / d
    } else {
        0.0
    }
}

/// Runs capped CG with `hvp(v) = ∇²φ(x)·v` at a frozen point.
///
/// `g` must be nonzero. All returned directions satisfy the contract of
/// their [`CgKind`]; see the module docs.
pub fn capped_cg<F>(hvp: F, g: &[f64], cfg: &CgConfig) -> Result<CgOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    run(hvp, g, cfg, 1.0)
}

/// `decay_scale` multiplies the slow-decay threshold; values below 1 make the
/// backtrack reachable in tests.
fn run<F>(mut hvp: F, g: &[f64], cfg: &CgConfig, decay_scale: f64) -> Result<CgOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    if !all_finite(g) {
        return Err(non_finite(g));
    }
    let r0_norm = norm(g);
    if r0_norm == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let rho = cfg.rho;
    let mut op = Hvp {
        apply: &mut hvp,
        n: g.len(),
        count: 0,
    };

    let mut it = CgIterate::start(g, &mut op)?;
    let mut m_est = ratio(&it.hp, &it.p);
    let mut history: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();

    let finish = |kind, direction, iterations, count, residual, m_est, path| CgOutcome {
        kind,
        direction,
        iterations,
        hvp_count: count,
        final_residual_norm: residual,
        norm_estimate: m_est,
        nc_path: path,
    };

    if hbar_quad(&it.p, &it.hp, rho) < rho * dot(&it.p, &it.p) {
        return Ok(finish(
            CgKind::Nc,
            it.p,
            0,
            op.count,
            None,
            m_est,
            Some(NcPath::Initial),
        ));
    }

    let mut k = 0usize;
    loop {
        if cfg.history_mode == HistoryMode::Stored {
            history.push((it.y.clone(), it.hy.clone()));
        }
        it.advance(rho, &mut op)?;
        k += 1;

        m_est = m_est
            .max(ratio(&it.hp, &it.p))
            .max(ratio(&it.hr, &it.r))
            .max(ratio(&it.hy, &it.y));
        let kappa = (m_est + 2.0 * rho) / rho;
        let xi_hat = cfg.xi / (3.0 * kappa);
        let sk = libm::sqrt(kappa);
        let tau = sk / (sk + 1.0);
        let t_bound = 4.0 * libm::pow(kappa, 4.0) / libm::pow(1.0 - libm::sqrt(tau), 2.0);
        let r_norm = libm::sqrt(it.r_norm2);

        if hbar_quad(&it.y, &it.hy, rho) < rho * dot(&it.y, &it.y) {
            return Ok(finish(
                CgKind::Nc,
                it.y,
                k,
                op.count,
                None,
                m_est,
                Some(NcPath::Iterate),
            ));
        }
        if r_norm <= (xi_hat * r0_norm).min(cfg.abs_residual_cap) {
            return Ok(finish(
                CgKind::Sol,
                it.y,
                k,
                op.count,
                Some(r_norm),
                m_est,
                None,
            ));
        }
        if hbar_quad(&it.p, &it.hp, rho) < rho * dot(&it.p, &it.p) {
            return Ok(finish(
                CgKind::Nc,
                it.p,
                k,
                op.count,
                None,
                m_est,
                Some(NcPath::SearchDirection),
            ));
        }
        if r_norm > decay_scale * libm::sqrt(t_bound) * libm::pow(tau, k as f64 / 2.0) * r0_norm {
            let alpha = it.step_length(rho);
            let mut y_next = it.y.clone();
            axpy(alpha, &it.p, &mut y_next);
            let mut hy_next = it.hy.clone();
            axpy(alpha, &it.hp, &mut hy_next);
            let source = match cfg.history_mode {
                HistoryMode::Stored => IterateSource::Stored(&history),
                HistoryMode::Regenerated => IterateSource::Regenerated { g },
            };
            let chord = slow_decay_backtrack_impl(source, &y_next, &hy_next, k, rho, &mut op)?;
            return Ok(finish(
                CgKind::Nc,
                chord,
                k,
                op.count,
                None,
                m_est,
                Some(NcPath::Backtrack),
            ));
        }
        if k as f64 >= iteration_cap(m_est, cfg.rho_bar, cfg.xi) + 1.0 {
            return Ok(finish(CgKind::Term, it.y, k, op.count, None, m_est, None));
        }
    }
}

/// Supplies the earlier iterates `(y_i, H y_i)` for the slow-decay backtrack.
pub enum IterateSource<'a> {
    /// History kept during the run, indexed by iteration.
    Stored(&'a [(Vec<f64>, Vec<f64>)]),
    /// Replay CG from `y₀ = 0` on the same right-hand side.
    Regenerated { g: &'a [f64] },
}

/// Returns `y_next - y_i` for the smallest `i < k` whose chord has
/// `H̄`-curvature below `ρ`.
///
/// `hy_next` must hold `H y_next`. `hvp` is only called in
/// [`IterateSource::Regenerated`] mode. Finding no such index violates the
/// capped-CG invariant and is reported as an error.
pub fn slow_decay_backtrack<F>(
    source: IterateSource<'_>,
    y_next: &[f64],
    hy_next: &[f64],
    k: usize,
    rho: f64,
    mut hvp: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut op = Hvp {
        apply: &mut hvp,
        n: y_next.len(),
        count: 0,
    };
    slow_decay_backtrack_impl(source, y_next, hy_next, k, rho, &mut op)
}

fn slow_decay_backtrack_impl<F>(
    source: IterateSource<'_>,
    y_next: &[f64],
    hy_next: &[f64],
    k: usize,
    rho: f64,
    op: &mut Hvp<'_, F>,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let qualifies = |y_i: &[f64], hy_i: &[f64]| -> Option<Vec<f64>> {
        let u = sub(y_next, y_i);
        let hu = sub(hy_next, hy_i);
        let uu = dot(&u, &u);
        (uu > 0.0 && hbar_quad(&u, &hu, rho) < rho * uu).then_some(u)
    };
    match source {
        IterateSource::Stored(history) => {
            for (y_i, hy_i) in history.iter().take(k) {
                if let Some(u) = qualifies(y_i, hy_i) {
                    return Ok(u);
                }
            }
        }
        IterateSource::Regenerated { g } => {
            let mut it = CgIterate::start(g, op)?;
            for i in 0..k {
                if i > 0 {
                    it.advance(rho, op)?;
                }
                if let Some(u) = qualifies(&it.y, &it.hy) {
                    return Ok(u);
                }
            }
        }
    }
    Err(Error::InvariantViolation(
        "slow residual decay without a negative-curvature chord",
    ))
}
