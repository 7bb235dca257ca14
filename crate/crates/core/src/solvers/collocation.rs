use std::collections::HashMap;

use super::chebyshev::clenshaw;
use super::{SolverKind, Trajectory};
use crate::error::{precondition, Error, Result};
use crate::linalg::{DenseMatrix, LinearOperator, Lu};
use crate::spectrum::Diagonalization;

/// Largest dimension accepted by the coupled (non-diagonalized) solve.
pub const COUPLED_MAX_DIMENSION: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollocationOptions {
    /// Polynomial degree `r` per interval.
    pub order: usize,
    /// Number of equal intervals; `None` uses [`default_intervals`].
    pub intervals: Option<usize>,
}

impl Default for CollocationOptions {
    fn default() -> Self {
        Self {
            order: 12,
            intervals: None,
        }
    }
}

/// `m = ⌈‖A‖ T / 2⌉`, so that `‖A‖ h / 2 ≤ 1` on every interval.
pub fn default_intervals(norm_bound: f64, horizon: f64) -> usize {
    ((norm_bound * horizon / 2.0).ceil() as usize).max(1)
}

/// `m κ ‖y_in‖ (e / 2r)^r`
pub fn collocation_error_bound(intervals: usize, kappa: f64, y_in_norm: f64, order: usize) -> f64 {
    let r = order as f64;
    intervals as f64 * kappa * y_in_norm * (std::f64::consts::E / (2.0 * r)).powf(r)
}

/// `T_k(τ_l)` and `T_k'(τ_l)` at the nodes `τ_l = cos(lπ/r)`, `l = 0..r−1`.
fn node_tables(r: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut t = vec![vec![0.0; r + 1]; r];
    let mut dt = vec![vec![0.0; r + 1]; r];
    for l in 0..r {
        let th = l as f64 * std::f64::consts::PI / r as f64;
        for k in 0..=r {
            let kf = k as f64;
            t[l][k] = (kf * th).cos();
            dt[l][k] = if l == 0 { kf * kf } else { kf * (kf * th).sin() / th.sin() };
        }
    }
    (t, dt)
}

fn factor_checked(m: &DenseMatrix) -> Result<Lu> {
    let lu = Lu::factor(m)?;
    lu.check_nonsingular()?;
    Ok(lu)
}

/// Chebyshev coefficients `c_0..c_r` of the degree-`r` collocation solution of
/// `z' = λ z + f(t)`, `z(0) = z0` on `[0, h]`, in the variable `τ = 2t/h − 1`.
pub fn collocate_scalar(lambda: f64, h: f64, z0: f64, forcing: &dyn Fn(f64) -> f64, order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(precondition("collocation order must be positive"));
    }
    if !(h > 0.0) {
        return Err(precondition("interval length must be positive"));
    }
    let r = order;
    let (t, dt) = node_tables(r);
    let mut m = DenseMatrix::zeros(r + 1, r + 1);
    let mut rhs = vec![0.0; r + 1];
    let half = h / 2.0;
    for l in 0..r {
        let row = m.row_mut(l);
        for k in 0..=r {
            row[k] = dt[l][k] - half * lambda * t[l][k];
        }
        let tau = t[l][1];
        rhs[l] = half * forcing(half * (tau + 1.0));
    }
    let row = m.row_mut(r);
    for (k, v) in row.iter_mut().enumerate() {
        *v = if k % 2 == 0 { 1.0 } else { -1.0 };
    }
    rhs[r] = z0;
    factor_checked(&m)?.solve(&rhs)
}

/// Collocation in the eigenbasis: each distinct `λ` is advanced over `m`
/// equal intervals, and the state is sampled at `samples ⊂ [0, T]`.
pub fn solve_collocation(
    diag: &Diagonalization,
    norm_bound: f64,
    y_in: &[f64],
    horizon: f64,
    samples: &[f64],
    opts: &CollocationOptions,
) -> Result<Trajectory> {
    if y_in.len() != diag.dim() {
        return Err(Error::DimensionMismatch {
            expected: diag.dim(),
            found: y_in.len(),
        });
    }
    if !(horizon > 0.0) {
        return Err(precondition("horizon must be positive"));
    }
    if samples.iter().any(|&s| !(0.0..=horizon).contains(&s)) {
        return Err(precondition("sample times must lie in [0, T]"));
    }
    let m = opts.intervals.unwrap_or_else(|| default_intervals(norm_bound, horizon));
    if m == 0 {
        return Err(precondition("number of intervals must be positive"));
    }
    let h = horizon / m as f64;
    let mut per_lambda: HashMap<u64, (Vec<f64>, f64)> = HashMap::new();
    for &l in &diag.lambda {
        if let std::collections::hash_map::Entry::Vacant(e) = per_lambda.entry(l.to_bits()) {
            let c = collocate_scalar(l, h, 1.0, &|_| 0.0, opts.order)?;
            let rho = c.iter().sum();
            e.insert((c, rho));
        }
    }
    let z0 = diag.to_eigenbasis(y_in);
    let mut traj = Trajectory::new(SolverKind::Collocation);
    for &s in samples {
        let k = ((s / h).floor() as usize).min(m - 1);
        let tau = (2.0 * (s - k as f64 * h) / h - 1.0).clamp(-1.0, 1.0);
        let z: Vec<f64> = diag
            .lambda
            .iter()
            .zip(&z0)
            .map(|(l, zi)| {
                let (c, rho) = &per_lambda[&l.to_bits()];
                zi * rho.powi(k as i32) * clenshaw(c, tau)
            })
            .collect();
        traj.push(s, diag.from_eigenbasis(&z));
    }
    Ok(traj)
}

/// Collocation applied to the full coupled system `y' = A y` (no
/// diagonalization), for `dim ≤ 30`. Returns the state at every interval end.
pub fn solve_collocation_coupled(
    a: &dyn LinearOperator,
    y_in: &[f64],
    horizon: f64,
    intervals: usize,
    order: usize,
) -> Result<Trajectory> {
    let d = a.nrows();
    if d > COUPLED_MAX_DIMENSION {
        return Err(Error::CapacityExceeded {
            requested: d,
            limit: COUPLED_MAX_DIMENSION,
        });
    }
    if y_in.len() != d || a.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: y_in.len(),
        });
    }
    if intervals == 0 || order == 0 {
        return Err(precondition("intervals and order must be positive"));
    }
    if !(horizon > 0.0) {
        return Err(precondition("horizon must be positive"));
    }
    let mut dense = DenseMatrix::zeros(d, d);
    let mut e = vec![0.0; d];
    let mut col = vec![0.0; d];
    for j in 0..d {
        e.fill(0.0);
        e[j] = 1.0;
        a.apply(&e, &mut col);
        dense.set_column(j, &col);
    }
    let r = order;
    let h = horizon / intervals as f64;
    let half = h / 2.0;
    let (t, dt) = node_tables(r);
    let size = d * (r + 1);
    // unknown (k, i) sits at k * d + i
    let mut m = DenseMatrix::zeros(size, size);
    for l in 0..r {
        for i in 0..d {
            let row = m.row_mut(l * d + i);
            for k in 0..=r {
                row[k * d + i] += dt[l][k];
                for j in 0..d {
                    row[k * d + j] -= half * t[l][k] * dense[(i, j)];
                }
            }
        }
    }
    for i in 0..d {
        let row = m.row_mut(r * d + i);
        for k in 0..=r {
            row[k * d + i] = if k % 2 == 0 { 1.0 } else { -1.0 };
        }
    }
    let lu = factor_checked(&m)?;
    let mut traj = Trajectory::new(SolverKind::Collocation);
    let mut y = y_in.to_vec();
    traj.push(0.0, y.clone());
    let mut rhs = vec![0.0; size];
    for step in 1..=intervals {
        rhs.fill(0.0);
        rhs[r * d..].copy_from_slice(&y);
        lu.solve_in_place(&mut rhs)?;
        y.fill(0.0);
        for k in 0..=r {
            for i in 0..d {
                y[i] += rhs[k * d + i];
            }
        }
        traj.push(h * step as f64, y.clone());
    }
    Ok(traj)
}
