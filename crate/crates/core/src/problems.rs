//! Built-in test problems with analytic derivatives.
//!
//! | name          | objective                                        | n       |
//! |---------------|--------------------------------------------------|---------|
//! | `quad`        | `‖x‖²`                                           | `>= 1`  |
//! | `scalar_quad` | `x²`                                             | `1`     |
//! | `scaled_quad` | `½ xᵀDx`, `D = diag(1, 10, …)` capped at `1e6`   | `>= 1`  |
//! | `rosenbrock`  | `Σ 100(x_{i+1} - x_i²)² + (1 - x_i)²`            | `>= 2`  |
//! | `indef_quad`  | `½ xᵀDx`, `D = diag(-1, 1, -1, 1, …)`            | `>= 1`  |
//! | `nc_well`     | `Σ x_i⁴/4 - x_i²/2`                              | `>= 1`  |

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::oracle::Objective;
use crate::{Error, Result};

const SCALED_QUAD_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestProblem {
    Quad { n: usize },
    ScalarQuad,
    ScaledQuad { n: usize },
    Rosenbrock { n: usize },
    IndefQuad { n: usize },
    NcWell { n: usize },
}

pub const PROBLEM_NAMES: [&str; 6] = [
    "quad",
    "scalar_quad",
    "scaled_quad",
    "rosenbrock",
    "indef_quad",
    "nc_well",
];

/// Looks up a registry problem by name.
pub fn make_problem(name: &str, n: usize) -> Result<TestProblem> {
    let problem = match name {
        "quad" => TestProblem::Quad { n },
        "scalar_quad" => TestProblem::ScalarQuad,
        "scaled_quad" => TestProblem::ScaledQuad { n },
        "rosenbrock" => TestProblem::Rosenbrock { n },
        "indef_quad" => TestProblem::IndefQuad { n },
        "nc_well" => TestProblem::NcWell { n },
        _ => return Err(Error::UnknownProblem(name.to_string())),
    };
    let ok = match problem {
        TestProblem::ScalarQuad => n == 1,
        TestProblem::Rosenbrock { .. } => n >= 2,
        _ => n >= 1,
    };
    if !ok {
        return Err(Error::IncompatibleDimension {
            problem: problem.name(),
            n,
        });
    }
    Ok(problem)
}

fn scaled_diag(i: usize) -> f64 {
    if i >= 6 {
        SCALED_QUAD_CAP
    } else {
        libm::pow(10.0, i as f64)
    }
}

fn indef_diag(i: usize) -> f64 {
    if i % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

impl TestProblem {
    pub fn name(&self) -> &'static str {
        match self {
            TestProblem::Quad { .. } => "quad",
            TestProblem::ScalarQuad => "scalar_quad",
            TestProblem::ScaledQuad { .. } => "scaled_quad",
            TestProblem::Rosenbrock { .. } => "rosenbrock",
            TestProblem::IndefQuad { .. } => "indef_quad",
            TestProblem::NcWell { .. } => "nc_well",
        }
    }

    /// Conventional starting point.
    ///
    /// `nc_well` starts near the saddle at the origin so that early
    /// iterations see negative curvature. `indef_quad` is unbounded below; its only stationary point (the
    /// origin) is reachable only from the positive-curvature subspace, so the
    /// start is zero on the negative-curvature coordinates.
    pub fn default_start(&self) -> Vec<f64> {
        let n = self.dimension();
        match self {
            TestProblem::Quad { .. } | TestProblem::ScaledQuad { .. } => vec![1.0; n],
            TestProblem::ScalarQuad => vec![1.0],
            TestProblem::Rosenbrock { .. } => (0..n)
                .map(|i| if i % 2 == 0 { -1.2 } else { 1.0 })
                .collect(),
            TestProblem::IndefQuad { .. } => (0..n)
                .map(|i| if indef_diag(i) > 0.0 { 1.0 } else { 0.0 })
                .collect(),
            TestProblem::NcWell { .. } => (0..n)
                .map(|i| if i % 2 == 0 { 0.1 } else { -0.1 })
                .collect(),
        }
    }
}

impl Objective for TestProblem {
    fn dimension(&self) -> usize {
        match *self {
            TestProblem::ScalarQuad => 1,
            TestProblem::Quad { n }
            | TestProblem::ScaledQuad { n }
            | TestProblem::Rosenbrock { n }
            | TestProblem::IndefQuad { n }
            | TestProblem::NcWell { n } => n,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            TestProblem::Quad { .. } | TestProblem::ScalarQuad => x.iter().map(|v| v * v).sum(),
            TestProblem::ScaledQuad { .. } => x
                .iter()
                .enumerate()
                .map(|(i, v)| 0.5 * scaled_diag(i) * v * v)
                .sum(),
            TestProblem::IndefQuad { .. } => x
                .iter()
                .enumerate()
                .map(|(i, v)| 0.5 * indef_diag(i) * v * v)
                .sum(),
            TestProblem::Rosenbrock { .. } => x
                .windows(2)
                .map(|w| {
                    let a = w[1] - w[0] * w[0];
                    let b = 1.0 - w[0];
                    100.0 * a * a + b * b
                })
                .sum(),
            TestProblem::NcWell { .. } => x
                .iter()
                .map(|v| {
                    let v2 = v * v;
                    0.25 * v2 * v2 - 0.5 * v2
                })
                .sum(),
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            TestProblem::Quad { .. } | TestProblem::ScalarQuad => {
                x.iter().map(|v| 2.0 * v).collect()
            }
            TestProblem::ScaledQuad { .. } => x
                .iter()
                .enumerate()
                .map(|(i, v)| scaled_diag(i) * v)
                .collect(),
            TestProblem::IndefQuad { .. } => x
                .iter()
                .enumerate()
                .map(|(i, v)| indef_diag(i) * v)
                .collect(),
            TestProblem::Rosenbrock { .. } => {
                let mut g = vec![0.0; x.len()];
                for i in 0..x.len() - 1 {
                    let a = x[i + 1] - x[i] * x[i];
                    g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
                    g[i + 1] += 200.0 * a;
                }
                g
            }
            TestProblem::NcWell { .. } => x.iter().map(|v| v * v * v - v).collect(),
        }
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            TestProblem::Quad { .. } | TestProblem::ScalarQuad => {
                v.iter().map(|vi| 2.0 * vi).collect()
            }
            TestProblem::ScaledQuad { .. } => v
                .iter()
                .enumerate()
                .map(|(i, vi)| scaled_diag(i) * vi)
                .collect(),
            TestProblem::IndefQuad { .. } => v
                .iter()
                .enumerate()
                .map(|(i, vi)| indef_diag(i) * vi)
                .collect(),
            TestProblem::Rosenbrock { .. } => {
                let mut hv = vec![0.0; x.len()];
                for i in 0..x.len() - 1 {
                    let diag = 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
                    let off = -400.0 * x[i];
                    hv[i] += diag * v[i] + off * v[i + 1];
                    hv[i + 1] += off * v[i] + 200.0 * v[i + 1];
                }
                hv
            }
            TestProblem::NcWell { .. } => x
                .iter()
                .zip(v)
                .map(|(xi, vi)| (3.0 * xi * xi - 1.0) * vi)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_examples() {
        let quad = make_problem("quad", 3).unwrap();
        assert_eq!(quad.value(&[1.0, 1.0, 1.0]), 3.0);
        assert_eq!(
            quad.hvp(&[4.0, -1.0, 0.0], &[1.0, 0.0, 0.0]),
            vec![2.0, 0.0, 0.0]
        );

        let scalar = make_problem("scalar_quad", 1).unwrap();
        assert_eq!(scalar.value(&[0.5]), 0.25);
        assert_eq!(scalar.gradient(&[3.0]), vec![6.0]);

        let well = make_problem("nc_well", 1).unwrap();
        assert_eq!(well.gradient(&[0.0]), vec![0.0]);
        assert_eq!(well.hvp(&[0.0], &[1.0]), vec![-1.0]);

        let rosen = make_problem("rosenbrock", 100).unwrap();
        assert_eq!(rosen.value(&[1.0; 100]), 0.0);
        assert!(rosen.gradient(&[1.0; 100]).iter().all(|g| *g == 0.0));

        let indef = make_problem("indef_quad", 2).unwrap();
        assert_eq!(indef.hvp(&[3.0, 7.0], &[1.0, 1.0]), vec![-1.0, 1.0]);
    }

    #[test]
    fn rosenbrock_hessian_at_minimum() {
        // first column of [[802, -400], [-400, 200]]
        let rosen = make_problem("rosenbrock", 2).unwrap();
        assert_eq!(rosen.hvp(&[1.0, 1.0], &[1.0, 0.0]), vec![802.0, -400.0]);
        assert_eq!(rosen.value(&[1.0, 1.0]), 0.0);
        assert_eq!(rosen.gradient(&[1.0, 1.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn scaled_quad_diagonal_is_capped() {
        let p = make_problem("scaled_quad", 9).unwrap();
        let e_last: Vec<f64> = (0..9).map(|i| if i == 8 { 1.0 } else { 0.0 }).collect();
        assert_eq!(p.hvp(&[0.0; 9], &e_last)[8], 1e6);
        let e2: Vec<f64> = (0..9).map(|i| if i == 2 { 1.0 } else { 0.0 }).collect();
        assert_eq!(p.hvp(&[0.0; 9], &e2)[2], 100.0);
    }

    #[test]
    fn registry_errors() {
        assert_eq!(
            make_problem("himmelbg", 2),
            Err(Error::UnknownProblem("himmelbg".into()))
        );
        assert!(matches!(
            make_problem("scalar_quad", 2),
            Err(Error::IncompatibleDimension { .. })
        ));
        assert!(make_problem("rosenbrock", 1).is_err());
        assert!(make_problem("quad", 0).is_err());
    }

    #[test]
    fn default_starts_have_matching_dimension() {
        for name in PROBLEM_NAMES {
            let n = if name == "scalar_quad" { 1 } else { 7 };
            let p = make_problem(name, n).unwrap();
            assert_eq!(p.default_start().len(), n);
            assert_eq!(p.name(), name);
        }
    }
}
