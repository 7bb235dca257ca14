use super::DenseMatrix;
use crate::error::{Error, Result};

/// Pivots smaller than this times the max row norm of the input count as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// LU factorization with partial pivoting, `P A = L U`.
///
/// Factoring never fails; singularity is reported when solving.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
    scale: f64,
}

impl Lu {
    pub fn factor(m: &DenseMatrix) -> Result<Lu> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let n = m.rows();
        let scale = m.max_row_norm();
        let mut lu = m.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            if pivot == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                if f == 0.0 {
                    continue;
                }
                lu[i * n + k] = f;
                for j in k + 1..n {
                    lu[i * n + j] -= f * lu[k * n + j];
                }
            }
        }
        Ok(Lu {
            n,
            lu,
            perm,
            sign,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.lu[k * self.n + k])
    }

    pub fn determinant(&self) -> f64 {
        self.sign * self.pivots().product::<f64>()
    }

    /// `(sign, ln|det|)`; sign is 0 for an exactly singular matrix.
    pub fn log_abs_determinant(&self) -> (f64, f64) {
        let mut sign = self.sign;
        let mut log = 0.0;
        for p in self.pivots() {
            if p == 0.0 {
                return (0.0, f64::NEG_INFINITY);
            }
            sign *= p.signum();
            log += p.abs().ln();
        }
        (sign, log)
    }

    /// Fails with [`Error::Singular`] if some pivot is below the tolerance.
    pub fn check_nonsingular(&self) -> Result<()> {
        let limit = PIVOT_TOLERANCE * self.scale;
        for (row, pivot) in self.pivots().enumerate() {
            if pivot.abs() <= limit || !pivot.is_finite() {
                return Err(Error::Singular { row, pivot });
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        self.check_nonsingular()?;
        let rhs: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&rhs);
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, x)| l * x).sum();
            b[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&b[i + 1..]).map(|(u, x)| u * x).sum();
            b[i] = (b[i] - s) / self.lu[i * n + i];
        }
        Ok(())
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        let n = self.n;
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.solve_in_place(&mut e)?;
            inv.set_column(j, &e);
        }
        Ok(inv)
    }
}

pub fn lu_solve(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(m)?.solve(b)
}

pub fn lu_determinant(m: &DenseMatrix) -> Result<f64> {
    Ok(Lu::factor(m)?.determinant())
}
