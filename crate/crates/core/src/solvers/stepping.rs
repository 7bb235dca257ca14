use super::{Recording, SolverKind, Trajectory};
use crate::error::{precondition, Error, Result};
use crate::linalg::{norm2, LinearOperator};

/// Divergence guard: abort once `‖y‖` exceeds this multiple of `‖y_in‖`.
const GUARD_FACTOR: f64 = 1e3;

/// Forward Euler, `y ← (I + hA) y`.
pub fn solve_euler(
    a: &dyn LinearOperator,
    y_in: &[f64],
    m_steps: usize,
    horizon: f64,
    rec: Recording,
) -> Result<Trajectory> {
    propagate(a, y_in, 1, m_steps, horizon, rec, SolverKind::Euler)
}

/// Truncated Taylor series, `y ← Σ_{k=0}^{K} (hA)^k / k! · y`.
pub fn solve_taylor(
    a: &dyn LinearOperator,
    y_in: &[f64],
    order: usize,
    m_steps: usize,
    horizon: f64,
    rec: Recording,
) -> Result<Trajectory> {
    if order == 0 {
        return Err(precondition("Taylor order K must be at least 1"));
    }
    propagate(a, y_in, order, m_steps, horizon, rec, SolverKind::Taylor)
}

fn propagate(
    a: &dyn LinearOperator,
    y_in: &[f64],
    order: usize,
    m_steps: usize,
    horizon: f64,
    rec: Recording,
    kind: SolverKind,
) -> Result<Trajectory> {
    if m_steps == 0 {
        return Err(precondition("number of time steps must be positive"));
    }
    if !(horizon > 0.0) {
        return Err(precondition("horizon must be positive"));
    }
    if y_in.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: y_in.len(),
        });
    }
    let h = horizon / m_steps as f64;
    let guard = GUARD_FACTOR * norm2(y_in);
    let d = y_in.len();
    let mut y = y_in.to_vec();
    let mut term = vec![0.0; d];
    let mut next = vec![0.0; d];
    let mut traj = Trajectory::new(kind);
    if rec.keep(0, m_steps) {
        traj.push(0.0, rec.extract(&y));
    }
    for step in 1..=m_steps {
        term.copy_from_slice(&y);
        for k in 1..=order {
            a.apply(&term, &mut next);
            let c = h / k as f64;
            for (t, (nv, yv)) in term.iter_mut().zip(next.iter().zip(y.iter_mut())) {
                *t = c * nv;
                *yv += *t;
            }
        }
        let norm = norm2(&y);
        if !(norm <= guard) {
            return Err(Error::Divergence { step, norm, guard });
        }
        if rec.keep(step, m_steps) {
            traj.push(horizon * step as f64 / m_steps as f64, rec.extract(&y));
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseMatrix;

    #[test]
    fn zero_matrix_keeps_state() {
        let a = SparseMatrix::zeros(3, 3);
        let tr = solve_euler(&a, &[1.0, 2.0, 3.0], 10, 1.0, Recording::history()).unwrap();
        assert_eq!(tr.len(), 11);
        assert!(tr.states.iter().all(|s| s == &vec![1.0, 2.0, 3.0]));
    }

    #[test]
    fn scalar_euler_matches_exponential() {
        let a = SparseMatrix::from_diagonal(&[-1.0]);
        let tr = solve_euler(&a, &[1.0], 5000, 1.0, Recording::endpoint()).unwrap();
        assert_eq!(tr.len(), 1);
        assert!((tr.states[0][0] - (-1f64).exp()).abs() < 2e-4);
    }

    #[test]
    fn euler_is_first_order() {
        let a = SparseMatrix::from_diagonal(&[-1.0]);
        let err = |m| (solve_euler(&a, &[1.0], m, 1.0, Recording::endpoint()).unwrap().states[0][0] - (-1f64).exp()).abs();
        for m in [100, 200, 400, 800, 1600] {
            let ratio = err(m) / err(2 * m);
            assert!((1.8..=2.2).contains(&ratio), "m={m} ratio={ratio}");
        }
    }

    #[test]
    fn taylor_first_order_is_euler() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, -1.0), (0, 1, 0.3), (1, 1, -2.0)]).unwrap();
        let e = solve_euler(&a, &[1.0, 1.0], 50, 2.0, Recording::history()).unwrap();
        let t = solve_taylor(&a, &[1.0, 1.0], 1, 50, 2.0, Recording::history()).unwrap();
        assert_eq!(e.states, t.states);
    }

    #[test]
    fn taylor_local_error_within_bound() {
        let a = SparseMatrix::from_diagonal(&[-1.0]);
        let h: f64 = 0.01;
        let t = solve_taylor(&a, &[1.0], 4, 1, h, Recording::endpoint()).unwrap();
        let err = (t.states[0][0] - (-h).exp()).abs();
        assert!(err <= h.powi(5) / 120.0);
    }

    #[test]
    fn divergence_guard_trips() {
        let a = SparseMatrix::from_diagonal(&[-1.0]);
        // h = 10 makes |1 − h| = 9 > 1
        let err = solve_euler(&a, &[1.0], 10, 100.0, Recording::endpoint()).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn first_block_recording() {
        let a = SparseMatrix::from_diagonal(&[-1.0, -2.0, -3.0]);
        let tr = solve_taylor(&a, &[1.0; 3], 3, 20, 1.0, Recording::history().every(5).first_block(1)).unwrap();
        assert_eq!(tr.times.len(), 5);
        assert!(tr.states.iter().all(|s| s.len() == 1));
    }
}
