//! Adaptive regularized Newton-CG for smooth nonconvex minimization.
//!
//! The solver only touches the objective through values, gradients and
//! Hessian-vector products, so it never materializes a Hessian. Each outer
//! iteration solves a shifted Newton system `(H + 2ρI) d = -g` with a capped
//! conjugate gradient that can bail out with a negative-curvature direction,
//! then picks a stepsize by backtracking and adapts an estimate `M` of the
//! Hessian Lipschitz constant. The shift `ρ = sqrt(M) * ω` is driven by the
//! gradient history, which gives superlinear (up to quadratic) local
//! convergence without giving up the `O(ε^{-3/2})` global rate.
//!
//! The crate is `no_std` and only needs `alloc`. IO, the CLI and file
//! formats live in the companion `arncg` crate.
//!
//! ```
//! use arncg_core::{make_problem, solve, DesignPoint, Oracle, Outcome, SolverConfig};
//!
//! let problem = make_problem("rosenbrock", 2).unwrap();
//! let mut oracle = Oracle::new(problem);
//! let x0 = DesignPoint::new(vec![-1.2, 1.0]).unwrap();
//! let report = solve(&mut oracle, &x0, &SolverConfig::default()).unwrap();
//! assert_eq!(report.outcome, Outcome::Converged);
//! assert!(report.final_gradient_norm <= 1e-5);
//! ```

#![no_std]

extern crate alloc;

pub mod capped_cg;
pub mod diagnostics;
pub mod driver;
mod error;
mod linalg;
pub mod newton_step;
pub mod oracle;
pub mod problems;

pub use capped_cg::{capped_cg, iteration_cap, CgConfig, CgKind, CgOutcome, HistoryMode, NcPath};
pub use diagnostics::{
    estimate_local_order, gradient_series, nu_infinity, order_pairs, predicted_order, summarize,
    IterationRecord, OrderEstimate, RunSummary, DEFAULT_ORDER_WINDOW,
};
pub use driver::{
    fallback_trigger, regularizers, solve, solve_with_budget, Budget, FailureReason, Outcome,
    Schedule, SolveReport, SolverConfig, SolverState, StepEvent, Unlimited,
};
pub use error::Error;
pub use newton_step::{
    armijo_search, lip_estimation, nc_direction, nc_linesearch, newton_step, LinesearchHit,
    LipInput, StepOutcome, StepParams, StepPoint, StepStatus,
};
pub use oracle::{check_gradient_fd, check_hvp_fd, DesignPoint, EvalCounters, Objective, Oracle};
pub use problems::{make_problem, TestProblem, PROBLEM_NAMES};

pub type Result<T, E = Error> = core::result::Result<T, E>;
