//! Small dense/sparse kernel shared by every other module.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`. Matrices come in two storages:
//! [`DenseMatrix`] (row-major) and [`SparseMatrix`] (canonical compressed rows).
//! Both implement [`LinearOperator`], which is what the norm estimators and
//! the block-triangular similarity transforms consume.

mod dense;
mod lu;
mod norms;
mod sparse;

pub use dense::DenseMatrix;
pub use lu::{lu_determinant, lu_solve, Lu, PIVOT_TOLERANCE};
pub use norms::{spectral_norm, spectral_norm_with, SpectralNorm, POWER_MAX_ITERATIONS, POWER_TOLERANCE};
pub use sparse::{kron, kron_with_limit, SparseMatrix, DEFAULT_MAX_DIMENSION};

/// Anything that can be applied to a vector, together with its transpose.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `y = Aᵀ x`; `y` is overwritten.
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Euclidean distance between two equally long vectors.
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Kronecker product of two vectors, ordered consistently with [`kron`]:
/// entry `i * v.len() + j` equals `u[i] * v[j]`.
pub fn kron_vec(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len() * v.len());
    for &a in u {
        out.extend(v.iter().map(|&b| a * b));
    }
    out
}

/// `u ⊗ u ⊗ … ⊗ u` (`power` factors, `power >= 1`).
pub fn kron_power_vec(u: &[f64], power: usize) -> Vec<f64> {
    assert!(power >= 1, "kron power must be at least one");
    let mut acc = u.to_vec();
    for _ in 1..power {
        acc = kron_vec(&acc, u);
    }
    acc
}
