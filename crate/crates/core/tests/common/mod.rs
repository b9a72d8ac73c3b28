#![allow(dead_code)]

use arncg_core::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Q diag(eigs) Qᵀ` with `Q` from the QR factorization of a random matrix.
pub fn symmetric_with_spectrum(rng: &mut ChaCha8Rng, eigs: &[f64]) -> DMatrix<f64> {
    let n = eigs.len();
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = a.qr().q();
    let h = &q * DMatrix::from_diagonal(&DVector::from_column_slice(eigs)) * q.transpose();
    // exact symmetry
    (&h + h.transpose()) * 0.5
}

pub fn operator(h: &DMatrix<f64>) -> impl FnMut(&[f64]) -> Result<Vec<f64>, Error> + '_ {
    move |v: &[f64]| Ok((h * DVector::from_column_slice(v)).as_slice().to_vec())
}

pub fn quad_form(h: &DMatrix<f64>, v: &[f64]) -> f64 {
    let v = DVector::from_column_slice(v);
    v.dot(&(h * &v))
}

pub fn min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    h.clone().symmetric_eigen().eigenvalues.min()
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `lhs <= rhs` up to a relative slack.
pub fn le_rel(lhs: f64, rhs: f64, slack: f64) -> bool {
    lhs <= rhs + slack * (lhs.abs() + rhs.abs())
}

/// Checks the five SOL inequalities against explicit matrix products.
/// Returns a description of the first violation.
pub fn sol_contract_violation(
    h: &DMatrix<f64>,
    g: &[f64],
    d: &[f64],
    rho: f64,
    xi: f64,
    slack: f64,
) -> Option<String> {
    let n = g.len();
    let hbar = h + DMatrix::identity(n, n) * (2.0 * rho);
    let dv = DVector::from_column_slice(d);
    let gv = DVector::from_column_slice(g);
    let dd = dv.dot(&dv);
    let hbar_dd = dv.dot(&(&hbar * &dv));
    let h_dd = dv.dot(&(h * &dv));
    let resid = (&hbar * &dv + &gv).norm();
    let dg = dv.dot(&gv);
    let checks = [
        ("dᵀH̄d >= ρ‖d‖²", le_rel(rho * dd, hbar_dd, slack)),
        ("dᵀHd >= -ρ‖d‖²", le_rel(-rho * dd, h_dd, slack)),
        (
            "‖d‖ <= 2‖g‖/ρ",
            le_rel(dv.norm(), 2.0 * gv.norm() / rho, slack),
        ),
        (
            "‖H̄d + g‖ <= ½ρξ‖d‖",
            le_rel(resid, 0.5 * rho * xi * dv.norm(), slack),
        ),
        (
            "dᵀg = -dᵀH̄d",
            (dg + hbar_dd).abs() <= 1e-8 * hbar_dd.abs().max(dg.abs()),
        ),
        ("dᵀg <= -ρ‖d‖²", le_rel(dg, -rho * dd, slack)),
    ];
    checks
        .iter()
        .find(|(_, ok)| !ok)
        .map(|(name, _)| format!("{name} (ρ={rho}, ξ={xi}, n={n})"))
}
