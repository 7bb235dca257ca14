use serde::Serialize;

use crate::error::{precondition, Result};

/// `‖u_in‖ R^N (1 − e^{λ_1 t})`; needs `R < 1` and `λ_1 < 0`.
pub fn bound_carleman_truncation(u_in_norm: f64, r: f64, order: usize, lambda_1: f64, t: f64) -> Result<f64> {
    if !(r < 1.0) {
        return Err(precondition(format!("R = {r} ≥ 1: truncation bound is void")));
    }
    if !(lambda_1 < 0.0) {
        return Err(precondition("truncation bound needs λ_1 < 0"));
    }
    if !(t >= 0.0) {
        return Err(precondition("time must be non-negative"));
    }
    Ok(u_in_norm * r.powi(order as i32) * -(lambda_1 * t).exp_m1())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EulerBound {
    pub value: f64,
    /// `h ≤ 1/(N² ‖F1‖)`
    pub step_ok: bool,
}

/// `N² T h (‖F1‖ + ‖F2‖)² max‖y‖`
pub fn bound_euler(order: usize, horizon: f64, h: f64, norm_f1: f64, norm_f2: f64, max_y: f64) -> EulerBound {
    let n2 = (order * order) as f64;
    EulerBound {
        value: n2 * horizon * h * (norm_f1 + norm_f2).powi(2) * max_y,
        step_ok: h * n2 * norm_f1 <= 1.0,
    }
}

/// `(‖A‖h)^{K+1} / (K+1)! · ‖y0‖`, the error of one step.
pub fn bound_taylor(norm_a: f64, h: f64, order: usize, y0_norm: f64) -> f64 {
    let x = norm_a * h;
    let mut v = y0_norm;
    for k in 1..=order + 1 {
        v *= x / k as f64;
    }
    v
}

/// Smallest `K ≤ max_order` whose per-step bound, summed over `m` steps, is `≤ ε`.
pub fn taylor_order_for(norm_a: f64, h: f64, steps: usize, y0_norm: f64, eps: f64, max_order: usize) -> Option<usize> {
    (1..=max_order).find(|&k| steps as f64 * bound_taylor(norm_a, h, k, y0_norm) <= eps)
}

/// `n^{−1/2} ‖u'''‖ (1 − e^{ct}) / |c|`, `c = a + |b| ‖u_in‖`. `None` unless
/// `a < 0` and `|a| > |b| ‖u_in‖`.
pub fn bound_discretization(n: usize, a: f64, b: f64, u_in_norm: f64, t: f64, third_derivative: f64) -> Option<f64> {
    let c = a + b.abs() * u_in_norm;
    if !(a < 0.0 && c < 0.0) {
        return None;
    }
    Some(third_derivative / (n as f64).sqrt() * -(c * t).exp_m1() / c.abs())
}

/// Bounds next to the errors actually observed in a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub carleman_bound: Option<f64>,
    pub time_bound_name: String,
    pub time_bound: Option<f64>,
    pub discretization_bound: Option<f64>,
    pub observed_max_error: f64,
    pub notes: Vec<String>,
}

impl ErrorBudget {
    /// Sum of the available bounds, or `None` if none applies.
    pub fn total(&self) -> Option<f64> {
        let parts = [self.carleman_bound, self.time_bound];
        if parts.iter().all(Option::is_none) {
            return None;
        }
        Some(parts.iter().flatten().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carleman_bound_limits() {
        assert_eq!(bound_carleman_truncation(0.2, 0.5, 3, -1.5, 0.0).unwrap(), 0.0);
        let inf = bound_carleman_truncation(0.2, 0.5, 3, -1.5, 1e3).unwrap();
        assert!((inf - 0.2 * 0.125).abs() < 1e-15);
        assert!(bound_carleman_truncation(0.2, 1.0, 3, -1.5, 1.0).is_err());
        assert!(bound_carleman_truncation(0.2, 0.5, 3, 0.5, 1.0).is_err());
    }

    #[test]
    fn euler_bound_scaling() {
        assert_eq!(bound_euler(3, 3.0, 0.0, 65.2, 1.0, 1.0).value, 0.0);
        let a = bound_euler(3, 3.0, 1e-4, 65.2, 1.0, 0.2);
        let b = bound_euler(3, 3.0, 2e-4, 65.2, 1.0, 0.2);
        assert!((b.value - 2.0 * a.value).abs() < 1e-12 * b.value);
        assert!(a.step_ok);
        assert!(bound_euler(3, 3.0, 3.0 / 5000.0, 65.2, 1.0, 0.2).step_ok);
        assert!(!bound_euler(3, 3.0, 0.01, 65.2, 1.0, 0.2).step_ok);
    }

    #[test]
    fn taylor_bound_examples() {
        assert!((bound_taylor(1.0, 1.0, 4, 2.0) - 2.0 / 120.0).abs() < 1e-16);
        assert!(bound_taylor(1.0, 1.0, 60, 1.0) < 1e-80);
        let k = taylor_order_for(10.0, 0.01, 100, 1.0, 1e-8, 50).unwrap();
        assert!(100.0 * bound_taylor(10.0, 0.01, k, 1.0) <= 1e-8);
        assert!(100.0 * bound_taylor(10.0, 0.01, k - 1, 1.0) > 1e-8);
    }

    #[test]
    fn discretization_bound_cases() {
        let v = bound_discretization(4, -1.0, 0.0, 0.3, 2.0, 5.0).unwrap();
        assert!((v - 5.0 / 2.0 * (1.0 - (-2f64).exp())).abs() < 1e-15);
        assert_eq!(bound_discretization(4, -1.0, 0.0, 0.3, 0.0, 5.0), Some(0.0));
        let q = bound_discretization(16, -1.0, 0.0, 0.3, 2.0, 5.0).unwrap();
        assert!((v / q - 2.0).abs() < 1e-14);
        assert_eq!(bound_discretization(4, 0.4, -1.0, 0.2, 1.0, 5.0), None);
        assert_eq!(bound_discretization(4, -0.1, -1.0, 0.2, 1.0, 5.0), None);
    }
}
