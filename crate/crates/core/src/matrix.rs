//! Dense square matrices, the row-sum norms and irreducibility.
//!
//! Vectors are treated as row vectors throughout, so `x A` is
//! [`Matrix::left_mul`] and `A xᵀ` is [`Matrix::right_mul`].

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A K×K real matrix stored row-major. Entries are always finite.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidInput("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "entry ({}, {}) is not finite",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Matrix { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = value;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }

    /// Row vector times matrix, `x A`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.left_mul_into(x, &mut out);
        out
    }

    pub fn left_mul_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (xi, row) in x.iter().zip(self.rows()) {
            if *xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += xi * a;
            }
        }
    }

    /// Matrix times column vector, `A vᵀ`.
    pub fn right_mul(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        self.rows()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Matrix::from_row_major(self.dim, data)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|v| *v >= 0.0)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(&rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// A matrix whose entries are all nonnegative: replacement matrices,
/// generating matrices and their limit.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct NonnegativeMatrix(Matrix);

impl NonnegativeMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if let Some(pos) = m.as_slice().iter().position(|v| *v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "entry ({}, {}) is negative",
                pos / m.dim(),
                pos % m.dim()
            )));
        }
        Ok(NonnegativeMatrix(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl Deref for NonnegativeMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl fmt::Debug for NonnegativeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<Matrix> for NonnegativeMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        NonnegativeMatrix::new(m)
    }
}

impl From<NonnegativeMatrix> for Matrix {
    fn from(m: NonnegativeMatrix) -> Self {
        m.0
    }
}

/// Maximum absolute row sum; the ℓ¹ operator norm of `x ↦ x A`.
pub fn rho(a: &Matrix) -> f64 {
    a.rows()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Minimum absolute row sum.
pub fn sigma(a: &Matrix) -> f64 {
    a.rows()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Whether every color can reach every color (itself included) through a
/// path of positive entries of length at least one.
///
/// For K ≥ 2 this is strong connectivity of the positivity graph; for K = 1
/// it requires the single entry to be positive.
pub fn is_irreducible(a: &NonnegativeMatrix) -> bool {
    let k = a.dim();
    let mut reached = vec![false; k];
    let mut stack = Vec::with_capacity(k);
    for start in 0..k {
        reached.iter_mut().for_each(|r| *r = false);
        stack.clear();
        stack.push(start);
        while let Some(i) = stack.pop() {
            for (j, v) in a.row(i).iter().enumerate() {
                if *v > 0.0 && !reached[j] {
                    reached[j] = true;
                    stack.push(j);
                }
            }
        }
        if reached.iter().any(|r| !r) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn nn(rows: &[&[f64]]) -> NonnegativeMatrix {
        NonnegativeMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn row_sum_norms() {
        assert_eq!(rho(&m(&[&[2.0, 1.0], &[1.0, 2.0]])), 3.0);
        assert_eq!(rho(&Matrix::zeros(2)), 0.0);
        assert_eq!(rho(&m(&[&[1.0, -2.0], &[0.5, 0.0]])), 3.0);
        assert_eq!(sigma(&m(&[&[2.0, 1.0], &[1.0, 2.0]])), 3.0);
        assert_eq!(sigma(&m(&[&[1.0, 2.0], &[3.0, 4.0]])), 3.0);
        assert_eq!(sigma(&m(&[&[0.0, 0.0], &[1.0, 1.0]])), 0.0);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(Matrix::from_rows(&[[1.0, f64::NAN], [0.0, 1.0]]).is_err());
        assert!(Matrix::from_rows(&[[1.0, f64::INFINITY], [0.0, 1.0]]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(Matrix::from_rows::<Vec<f64>>(&[]).is_err());
        assert!(NonnegativeMatrix::from_rows(&[[1.0, -1.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn irreducibility_fixtures() {
        assert!(is_irreducible(&nn(&[&[2.0, 1.0], &[1.0, 2.0]])));
        assert!(!is_irreducible(&nn(&[&[1.0, 0.0], &[0.0, 1.0]])));
        assert!(is_irreducible(&nn(&[&[0.0, 1.0], &[1.0, 0.0]])));
        assert!(is_irreducible(&nn(&[&[3.0]])));
        assert!(!is_irreducible(&nn(&[&[0.0]])));
        // upper triangular: 1 never reaches 0
        assert!(!is_irreducible(&nn(&[&[1.0, 1.0], &[0.0, 1.0]])));
    }

    /// Brute force: Σ_{N=1..K} (A^N)_ij > 0 for every pair (i, j).
    fn irreducible_by_powers(a: &Matrix) -> bool {
        let k = a.dim();
        let mut power = a.clone();
        let mut acc = a.clone();
        for _ in 1..k {
            let mut next = vec![0.0; k * k];
            for i in 0..k {
                for j in 0..k {
                    next[i * k + j] = (0..k).map(|l| power.get(i, l) * a.get(l, j)).sum();
                }
            }
            power = Matrix::from_row_major(k, next).unwrap();
            acc = acc.add(&power).unwrap();
        }
        acc.as_slice().iter().all(|v| *v > 0.0)
    }

    #[test]
    fn irreducibility_matches_matrix_powers_on_all_small_patterns() {
        for k in 1..=4usize {
            let cells = k * k;
            for pattern in 0u32..(1 << cells) {
                let data = (0..cells)
                    .map(|c| if pattern >> c & 1 == 1 { 1.0 } else { 0.0 })
                    .collect();
                let a = Matrix::from_row_major(k, data).unwrap();
                let expected = irreducible_by_powers(&a);
                let got = is_irreducible(&NonnegativeMatrix::new(a.clone()).unwrap());
                assert_eq!(got, expected, "pattern {pattern:#b} for K={k}: {a:?}");
            }
        }
    }

    #[test]
    fn products() {
        let a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        assert_eq!(a.left_mul(&[1.0, 0.0]), vec![2.0, 1.0]);
        assert_eq!(a.right_mul(&[1.0, 1.0]), vec![3.0, 3.0]);
        assert_eq!(a.row_sums(), vec![3.0, 3.0]);
    }

    #[test]
    fn serde_uses_nested_rows() {
        let a = nn(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, "[[2.0,1.0],[1.0,2.0]]");
        let back: NonnegativeMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<NonnegativeMatrix>("[[1.0,-1.0],[0.0,1.0]]").is_err());
    }
}
