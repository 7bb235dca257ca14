use serde::Serialize;

use crate::error::{precondition, Result};

pub const POLYLOG_LABEL: &str = "asymptotic shape only (natural log, unit constants)";

/// Measured inputs for the cost formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResourceParams {
    pub kappa: f64,
    pub order: usize,
    pub n: usize,
    pub diffusion: f64,
    pub linear: f64,
    pub quadratic: f64,
    pub horizon: f64,
    pub u_in_norm: f64,
    pub u_final_norm: f64,
    pub eps: f64,
}

impl ResourceParams {
    fn validate(&self) -> Result<()> {
        let all = [
            self.kappa,
            self.diffusion,
            self.linear,
            self.quadratic,
            self.horizon,
            self.u_in_norm,
            self.u_final_norm,
            self.eps,
        ];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(precondition("resource inputs must be finite"));
        }
        if self.order == 0 || self.n == 0 {
            return Err(precondition("n and N must be positive"));
        }
        if !(self.kappa >= 1.0) {
            return Err(precondition("condition number must be at least 1"));
        }
        if !(self.horizon > 0.0 && self.u_final_norm > 0.0 && self.eps > 0.0) {
            return Err(precondition("T, ‖u(T)‖ and ε must be positive"));
        }
        Ok(())
    }

    /// `N(4D(n+1)² + a + b)`
    pub fn norm_estimate(&self) -> f64 {
        let m = (self.n + 1) as f64;
        self.order as f64 * (4.0 * self.diffusion * m * m + self.linear + self.quadratic)
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        Self { horizon, ..*self }
    }
}

/// One row of the method comparison: `leading × time_extra × accuracy × polylog`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub method: &'static str,
    pub time_shape: &'static str,
    pub error_shape: &'static str,
    pub order_shape: &'static str,
    /// Part linear in `T` (and carrying the `N`, `n`, `κ` dependence).
    pub leading: f64,
    /// Additional power of `T` (only the Euler row has one).
    pub time_extra: f64,
    pub accuracy: f64,
    pub polylog: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResourceEstimate {
    pub inputs: ResourceParams,
    /// `κ(3N)[N(4D(n+1)²+a+b)] T ‖u_in‖/‖u(T)‖`
    pub inner_factor: f64,
    pub query_polylog: f64,
    pub query_count: f64,
    /// Extra polylog factor separating gate from query count.
    pub gate_factor: f64,
    pub gate_count: f64,
    pub rows: Vec<ScalingRow>,
    pub label: &'static str,
}

/// `ln(e + x)`: a natural-log stand-in that stays `≥ 1`.
fn plog(x: f64) -> f64 {
    (std::f64::consts::E + x.max(0.0)).ln()
}

pub fn estimate_resources(p: &ResourceParams) -> Result<ResourceEstimate> {
    p.validate()?;
    let nn = p.order as f64;
    let norm = p.norm_estimate();
    let ratio = p.u_in_norm / p.u_final_norm;
    let inner = p.kappa * 3.0 * nn * norm * p.horizon * ratio;
    let query_polylog = plog(p.kappa * 3.0 * nn * p.u_in_norm * nn.sqrt() * norm * p.horizon / (p.eps * p.u_final_norm));
    let n_pow_n = (p.n as f64).powi(p.order as i32);
    let gate_factor = plog(p.kappa * 3.0 * nn * n_pow_n * norm * p.u_in_norm * nn.sqrt() * p.horizon / p.eps);
    let t = p.horizon;
    let lt = plog(t);
    let le = plog(1.0 / p.eps);
    let ln_n = plog(nn);
    let row = |method, time_shape, error_shape, order_shape, leading: f64, time_extra: f64, accuracy: f64, polylog: f64| ScalingRow {
        method,
        time_shape,
        error_shape,
        order_shape,
        leading,
        time_extra,
        accuracy,
        polylog,
        total: leading * time_extra * accuracy * polylog,
    };
    let rows = vec![
        row(
            "euler",
            "T^2 polylog(T)",
            "(1/eps) polylog(1/eps)",
            "N^3 |u_in|^N polylog(N)",
            nn.powi(3) * p.u_in_norm.powi(p.order as i32) * t,
            t,
            1.0 / p.eps,
            lt * le * ln_n,
        ),
        row(
            "taylor",
            "T polylog(T)",
            "polylog(1/eps)",
            "N^2 polylog(N)",
            nn * nn * t,
            1.0,
            1.0,
            lt * le * ln_n,
        ),
        row(
            "matexp",
            "T polylog(T)",
            "polylog(1/eps)",
            "N n^N polylog(N)",
            nn * n_pow_n * t,
            1.0,
            1.0,
            lt * le * ln_n,
        ),
        row(
            "spectral",
            "T polylog(T)",
            "polylog(1/eps)",
            "N^2 kappa polylog(N n^N)",
            nn * nn * p.kappa * t,
            1.0,
            1.0,
            lt * le * plog(nn * n_pow_n),
        ),
    ];
    Ok(ResourceEstimate {
        inputs: *p,
        inner_factor: inner,
        query_polylog,
        query_count: inner * query_polylog,
        gate_factor,
        gate_count: inner * query_polylog * gate_factor,
        rows,
        label: POLYLOG_LABEL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ResourceParams {
        ResourceParams {
            kappa: 4.0,
            order: 3,
            n: 8,
            diffusion: 0.2,
            linear: 0.4,
            quadratic: -1.0,
            horizon: 3.0,
            u_in_norm: 0.1837,
            u_final_norm: 0.002,
            eps: 1e-4,
        }
    }

    #[test]
    fn first_order_substitution() {
        let p = ResourceParams {
            kappa: 1.0,
            order: 1,
            ..params()
        };
        let e = estimate_resources(&p).unwrap();
        let expect = 3.0 * (4.0 * 0.2 * 81.0 + 0.4 - 1.0) * 3.0 * 0.1837 / 0.002;
        assert!((e.inner_factor - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn doubling_horizon_doubles_leading_factors() {
        let a = estimate_resources(&params()).unwrap();
        let b = estimate_resources(&params().with_horizon(6.0)).unwrap();
        assert_eq!(b.inner_factor, 2.0 * a.inner_factor);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(y.leading, 2.0 * x.leading, "{}", x.method);
        }
        assert_eq!(b.rows[0].time_extra, 2.0 * a.rows[0].time_extra);
    }

    #[test]
    fn estimates_positive_and_checked() {
        let e = estimate_resources(&params()).unwrap();
        assert_eq!(e.rows.len(), 4);
        assert!(e.rows.iter().all(|r| r.total.is_finite() && r.total > 0.0));
        assert!(e.query_count > 0.0 && e.gate_count > e.query_count);
        assert!(estimate_resources(&ResourceParams { kappa: 0.5, ..params() }).is_err());
        assert!(estimate_resources(&ResourceParams { u_final_norm: 0.0, ..params() }).is_err());
    }
}
