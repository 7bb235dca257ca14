use serde::Serialize;

use super::Trajectory;
use crate::carleman::CarlemanVector;
use crate::error::{precondition, Result};
use crate::linalg::norm2;

/// Probability of reading the first block out of a normalized lifted state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasurementReport {
    pub y1_norm: f64,
    pub y_norm: f64,
    /// `‖y1‖² / ‖y‖²`
    pub probability: f64,
    /// `⌈1/√p⌉` rounds of amplitude amplification.
    pub rounds: u64,
    /// For `‖y1‖ < 1`: whether `p ≥ 1/N` and `‖y‖² < N ‖y1‖²` hold.
    pub bound_ok: Option<bool>,
}

pub fn measurement_report(y: &CarlemanVector) -> Result<MeasurementReport> {
    let norms = y.block_norms();
    let Some(&y1) = norms.first() else {
        return Err(precondition("lifted state has no blocks"));
    };
    let total = norms.iter().map(|v| v * v).sum::<f64>();
    if !(total > 0.0) {
        return Err(precondition("lifted state is zero"));
    }
    let p = y1 * y1 / total;
    let order = norms.len() as f64;
    let bound_ok = (y1 < 1.0).then(|| p >= 1.0 / order - 1e-12 && total < order * y1 * y1);
    Ok(MeasurementReport {
        y1_norm: y1,
        y_norm: total.sqrt(),
        probability: p,
        rounds: (1.0 / p.sqrt()).ceil() as u64,
        bound_ok,
    })
}

/// Norm statistics over a stored history of lifted states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistoryNormStats {
    /// `G = sqrt(Σ_k ‖y1(t_k)‖² / (m+1))`
    pub g: f64,
    pub max_norm: f64,
    /// `2G² / (16 max‖y‖² + G²)`
    pub p_lower: f64,
}

/// `n` is the size of the first block.
pub fn history_norm_stats(traj: &Trajectory, n: usize) -> Result<HistoryNormStats> {
    if traj.is_empty() {
        return Err(precondition("empty history"));
    }
    let samples = traj.len() as f64;
    let g = (traj
        .states
        .iter()
        .map(|s| norm2(&s[..n.min(s.len())]).powi(2))
        .sum::<f64>()
        / samples)
        .sqrt();
    let max_norm = traj.norms().into_iter().fold(0.0, f64::max);
    let g2 = g * g;
    let denom = 16.0 * max_norm * max_norm + g2;
    Ok(HistoryNormStats {
        g,
        max_norm,
        p_lower: if denom > 0.0 { 2.0 * g2 / denom } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::lift_initial;
    use crate::solvers::SolverKind;

    #[test]
    fn small_state_satisfies_bound() {
        let y = lift_initial(&[0.1, 0.05], 3);
        let r = measurement_report(&y).unwrap();
        assert!(r.probability > 1.0 / 3.0);
        assert_eq!(r.bound_ok, Some(true));
        assert_eq!(r.rounds, (1.0 / r.probability.sqrt()).ceil() as u64);
    }

    #[test]
    fn large_state_has_no_verdict() {
        let y = lift_initial(&[2.0], 3);
        let r = measurement_report(&y).unwrap();
        assert_eq!(r.bound_ok, None);
        assert!((r.probability - 4.0 / (4.0 + 16.0 + 64.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_state_rejected() {
        assert!(measurement_report(&lift_initial(&[0.0], 2)).is_err());
    }

    #[test]
    fn history_stats() {
        let mut t = Trajectory::new(SolverKind::Euler);
        t.push(0.0, vec![1.0, 0.0]);
        t.push(1.0, vec![0.0, 1.0]);
        let s = history_norm_stats(&t, 1).unwrap();
        assert!((s.g - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.max_norm, 1.0);
        assert!((s.p_lower - 1.0 / 16.5).abs() < 1e-15);
    }
}
