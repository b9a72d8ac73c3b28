//! Objective interface, evaluation accounting and finite-difference checks.

use alloc::vec::Vec;
use core::ops::Deref;

use crate::linalg::{all_finite, offset};
use crate::{Error, Result};

/// A twice-differentiable objective accessed through values, gradients and
/// Hessian-vector products.
///
/// Implementations must return `∇²φ(x)·v` from [`Objective::hvp`] without
/// forming the Hessian; the operator has to be linear and symmetric in `v`.
pub trait Objective {
    fn dimension(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64>;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        (**self).hvp(x, v)
    }
}

/// A finite point in `R^n`, `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint(Vec<f64>);

impl DesignPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPoint);
        }
        if !all_finite(&coords) {
            return Err(Error::NonFinite {
                quantity: "coordinate",
                point: coords,
            });
        }
        Ok(Self(coords))
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DesignPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Oracle call counts for one solve.
///
/// `hessian_points` counts the distinct points at which Hessian-vector
/// products were requested: consecutive products at a bitwise-identical
/// point count as a single Hessian evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounters {
    pub value_evals: u64,
    pub gradient_evals: u64,
    pub hvp_evals: u64,
    pub hessian_points: u64,
}

impl EvalCounters {
    /// Componentwise `self - earlier`.
    pub fn since(&self, earlier: &EvalCounters) -> EvalCounters {
        EvalCounters {
            value_evals: self.value_evals - earlier.value_evals,
            gradient_evals: self.gradient_evals - earlier.gradient_evals,
            hvp_evals: self.hvp_evals - earlier.hvp_evals,
            hessian_points: self.hessian_points - earlier.hessian_points,
        }
    }
}

/// Counting wrapper around an [`Objective`].
///
/// Every call validates dimensions and rejects non-finite results with
/// [`Error::NonFinite`], carrying the offending point.
#[derive(Debug, Clone)]
pub struct Oracle<F> {
    objective: F,
    counters: EvalCounters,
    last_hvp_point: Option<Vec<f64>>,
}

impl<F: Objective> Oracle<F> {
    pub fn new(objective: F) -> Self {
        Self {
            objective,
            counters: EvalCounters::default(),
            last_hvp_point: None,
        }
    }

    pub fn objective(&self) -> &F {
        &self.objective
    }

    pub fn dimension(&self) -> usize {
        self.objective.dimension()
    }

    pub fn counters(&self) -> EvalCounters {
        self.counters
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        let n = self.objective.dimension();
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
        Ok(())
    }

    pub fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        self.counters.value_evals += 1;
        let v = self.objective.value(x);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                quantity: "value",
                point: x.to_vec(),
            });
        }
        Ok(v)
    }

    pub fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        self.counters.gradient_evals += 1;
        let g = self.objective.gradient(x);
        if !all_finite(&g) {
            return Err(Error::NonFinite {
                quantity: "gradient",
                point: x.to_vec(),
            });
        }
        Ok(g)
    }

    pub fn hvp(&mut self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        self.check_dim(v.len())?;
        self.counters.hvp_evals += 1;
        let same_point = self
            .last_hvp_point
            .as_deref()
            .is_some_and(|p| p.iter().zip(x).all(|(a, b)| a.to_bits() == b.to_bits()));
        if !same_point {
            self.counters.hessian_points += 1;
            self.last_hvp_point = Some(x.to_vec());
        }
        let hv = self.objective.hvp(x, v);
        if !all_finite(&hv) {
            return Err(Error::NonFinite {
                quantity: "Hessian-vector product",
                point: x.to_vec(),
            });
        }
        Ok(hv)
    }
}

const FD_DENOMINATOR_FLOOR: f64 = 1e-8;

fn max_relative_error(approx: &[f64], exact: &[f64]) -> f64 {
    let scale = exact
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(FD_DENOMINATOR_FLOOR);
    approx
        .iter()
        .zip(exact)
        .map(|(a, e)| (a - e).abs() / scale)
        .fold(0.0, f64::max)
}

/// Central-difference check of the analytic gradient.
///
/// Returns `max_i |fd_i - g_i| / max(‖g‖_∞, 1e-8)`.
pub fn check_gradient_fd<O: Objective + ?Sized>(objective: &O, x: &[f64], h: f64) -> f64 {
    assert!(h > 0.0, "finite-difference step must be positive");
    let g = objective.gradient(x);
    let mut probe = x.to_vec();
    let fd: Vec<f64> = (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = objective.value(&probe);
            probe[i] = x[i] - h;
            let down = objective.value(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect();
    max_relative_error(&fd, &g)
}

/// Compares `hvp(x, v)` against `(∇φ(x + hv) - ∇φ(x - hv)) / 2h`, same error
/// convention as [`check_gradient_fd`].
pub fn check_hvp_fd<O: Objective + ?Sized>(objective: &O, x: &[f64], v: &[f64], h: f64) -> f64 {
    assert!(h > 0.0, "finite-difference step must be positive");
    let hv = objective.hvp(x, v);
    let up = objective.gradient(&offset(x, h, v));
    let down = objective.gradient(&offset(x, -h, v));
    let fd: Vec<f64> = up
        .iter()
        .zip(&down)
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect();
    max_relative_error(&fd, &hv)
}
