//! Empirical local convergence order versus the theoretical prediction.

use arncg_core::{estimate_local_order, gradient_series, order_pairs, predicted_order, Outcome};

use crate::error::CliError;
use crate::run::execute;
use crate::spec::RunSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    pub theta: f64,
    pub predicted: f64,
    /// `None` when too few pairs fall inside the window.
    pub measured: Option<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub outcome: Outcome,
    pub iterations: u64,
}

/// Solves `base` once per θ and fits the order over `[lo, hi]`.
pub fn order_study(
    base: &RunSpec,
    thetas: &[f64],
    lo: f64,
    hi: f64,
) -> Result<Vec<OrderRow>, CliError> {
    if let Some(t) = thetas.iter().find(|t| !(**t >= 0.0)) {
        return Err(CliError::Usage(format!(
            "theta must be nonnegative, got {t}"
        )));
    }
    if !(lo > 0.0 && lo < hi) {
        return Err(CliError::Usage(format!("invalid window [{lo}, {hi}]")));
    }
    thetas
        .iter()
        .map(|&theta| {
            let spec = RunSpec {
                theta,
                ..base.clone()
            };
            let result = execute(&spec)?;
            let series = gradient_series(&result.report.trace);
            Ok(OrderRow {
                theta,
                predicted: predicted_order(theta),
                measured: estimate_local_order(&series, lo, hi).map(|e| e.slope),
                pairs: order_pairs(&series, lo, hi)
                    .into_iter()
                    .map(|(a, b)| (a.ln(), b.ln()))
                    .collect(),
                outcome: result.report.outcome,
                iterations: result.report.iterations,
            })
        })
        .collect()
}
