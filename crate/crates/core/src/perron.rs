//! Perron–Frobenius data of an irreducible nonnegative matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{is_irreducible, rho, Matrix, NonnegativeMatrix};

/// Successive-iterate ℓ¹ tolerance for the shifted power iteration.
pub const POWER_TOLERANCE: f64 = 1e-13;
pub const POWER_MAX_ITERATIONS: usize = 100_000;
const REFINEMENT_PASSES: usize = 2;

/// Dominant eigenvalue with its left and right eigenvectors.
///
/// `pi` is normalized to sum to one; `nu` is scaled so that `pi · nu = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronData {
    pub lambda: f64,
    pub pi: Vec<f64>,
    pub nu: Vec<f64>,
}

impl PerronData {
    /// `‖π H − λ π‖₁`
    pub fn left_residual(&self, h: &Matrix) -> f64 {
        h.left_mul(&self.pi)
            .iter()
            .zip(&self.pi)
            .map(|(a, p)| (a - self.lambda * p).abs())
            .sum()
    }

    /// `‖H νᵀ − λ νᵀ‖₁`
    pub fn right_residual(&self, h: &Matrix) -> f64 {
        h.right_mul(&self.nu)
            .iter()
            .zip(&self.nu)
            .map(|(a, v)| (a - self.lambda * v).abs())
            .sum()
    }
}

/// Computes `(λ_H, π_H, ν_H)` for an irreducible `H`.
///
/// The right vector comes from power iteration on `H + ρ(H) I`, which is
/// primitive whenever `H` is irreducible, so periodic matrices converge too.
/// The left vector is the solution of `π (λI − H + 1ᵀ1) = 1`.
pub fn perron(h: &NonnegativeMatrix) -> Result<PerronData> {
    if !is_irreducible(h) {
        return Err(Error::Reducible);
    }
    let k = h.dim();
    let shift = rho(h);
    let shifted = h.add(&Matrix::scaled_identity(k, shift))?;

    let mut v = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    let mut diff = f64::INFINITY;
    let mut shifted_lambda = 0.0;
    for _ in 0..POWER_MAX_ITERATIONS {
        for (n, row) in next.iter_mut().zip(shifted.rows()) {
            *n = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        // v is a positive probability vector, so ‖B v‖₁ is the eigenvalue
        // estimate once v has settled.
        shifted_lambda = next.iter().sum::<f64>();
        next.iter_mut().for_each(|x| *x /= shifted_lambda);
        diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut v, &mut next);
        if diff <= POWER_TOLERANCE {
            break;
        }
    }
    if diff > POWER_TOLERANCE {
        return Err(Error::NoConvergence { residual: diff });
    }

    // The power iterate can stall short of the tolerance in residual terms
    // when the spectral gap is small. Both vectors are re-solved from the
    // bordered system and λ is sharpened by the two-sided Rayleigh quotient,
    // whose error is second order in the vector errors.
    let mut lambda = shifted_lambda - shift;
    let mut nu = v;
    let mut pi = solve(h, lambda, Side::Left)?;
    for _ in 0..REFINEMENT_PASSES {
        let h_nu = h.right_mul(&nu);
        let num: f64 = pi.iter().zip(&h_nu).map(|(a, b)| a * b).sum();
        let den: f64 = pi.iter().zip(&nu).map(|(a, b)| a * b).sum();
        if !(den > 0.0 && (num / den).is_finite()) {
            break;
        }
        lambda = num / den;
        pi = solve(h, lambda, Side::Left)?;
        nu = solve(h, lambda, Side::Right)?;
    }

    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    let dot: f64 = pi.iter().zip(&nu).map(|(a, b)| a * b).sum();
    let nu: Vec<f64> = nu.iter().map(|x| x / dot).collect();

    if let Some(bad) = pi.iter().chain(&nu).find(|p| !(**p > 0.0)) {
        return Err(Error::NoConvergence { residual: bad.abs() });
    }
    Ok(PerronData { lambda, pi, nu })
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

/// Solves `π (λI − H + 1ᵀ1) = 1` for the row vector `π`, or
/// `(λI − H + 1ᵀ1) νᵀ = 1ᵀ` for the column vector `ν`.
fn solve(h: &Matrix, lambda: f64, side: Side) -> Result<Vec<f64>> {
    let k = h.dim();
    let system = DMatrix::from_fn(k, k, |i, j| {
        let id = if i == j { lambda } else { 0.0 };
        let entry = match side {
            // transposed system for the row vector
            Side::Left => h.get(j, i),
            Side::Right => h.get(i, j),
        };
        id - entry + 1.0
    });
    let rhs = DVector::from_element(k, 1.0);
    let sol = system.lu().solve(&rhs).ok_or_else(|| {
        Error::InvalidInput("λI − H + 1ᵀ1 is singular".into())
    })?;
    Ok(sol.iter().copied().collect())
}
