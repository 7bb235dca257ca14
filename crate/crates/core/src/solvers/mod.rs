//! Time propagation: an adaptive reference integrator for the quadratic ODE
//! and four propagators for the linear Carleman system.

mod chebyshev;
mod collocation;
mod measurement;
mod reference;
mod stepping;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use chebyshev::{
    bessel_i, bessel_i_scaled, chebyshev_coefficients, chebyshev_coefficients_scaled,
    chebyshev_scale, clenshaw, propagate_matexp, propagate_matexp_stepped, truncation_order,
    ChebyshevPropagator, ChebyshevScale, MatexpResult, TruncationOrder,
};
pub use collocation::{
    collocate_scalar, collocation_error_bound, default_intervals, solve_collocation,
    solve_collocation_coupled, CollocationOptions, COUPLED_MAX_DIMENSION,
};
pub use measurement::{history_norm_stats, measurement_report, HistoryNormStats, MeasurementReport};
pub use reference::{dopri5, solve_reference, Dopri5Options};
pub use stepping::{solve_euler, solve_taylor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Reference,
    Euler,
    Taylor,
    Matexp,
    Collocation,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolverKind::Reference => "reference",
            SolverKind::Euler => "euler",
            SolverKind::Taylor => "taylor",
            SolverKind::Matexp => "matexp",
            SolverKind::Collocation => "collocation",
        };
        f.write_str(s)
    }
}

/// Which states a time stepper keeps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Recording {
    /// Keep every `every`-th step (the last step is always kept); `None` keeps only the endpoint.
    pub every: Option<usize>,
    /// Keep only the first `n` entries (the `u` block) of each state.
    pub first_block: Option<usize>,
}

impl Recording {
    pub fn endpoint() -> Self {
        Self {
            every: None,
            first_block: None,
        }
    }

    pub fn history() -> Self {
        Self {
            every: Some(1),
            first_block: None,
        }
    }

    pub fn first_block(self, n: usize) -> Self {
        Self {
            first_block: Some(n),
            ..self
        }
    }

    pub fn every(self, k: usize) -> Self {
        Self {
            every: Some(k.max(1)),
            ..self
        }
    }

    fn keep(&self, step: usize, last: usize) -> bool {
        step == last || self.every.is_some_and(|k| step % k == 0)
    }

    fn extract(&self, y: &[f64]) -> Vec<f64> {
        match self.first_block {
            Some(n) => y[..n.min(y.len())].to_vec(),
            None => y.to_vec(),
        }
    }
}

/// Time grid with one state per time.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub kind: SolverKind,
}

impl Trajectory {
    pub fn new(kind: SolverKind) -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            kind,
        }
    }

    pub fn push(&mut self, t: f64, state: Vec<f64>) {
        self.times.push(t);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Same trajectory restricted to the first `n` components.
    pub fn first_block(&self, n: usize) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self.states.iter().map(|s| s[..n.min(s.len())].to_vec()).collect(),
            kind: self.kind,
        }
    }

    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|s| crate::linalg::norm2(s)).collect()
    }

    /// `max_k ‖self(t_k) − other(t_k)‖` over the first `n` components; the
    /// time grids must coincide.
    pub fn max_error_against(&self, other: &Trajectory, n: usize) -> f64 {
        assert_eq!(self.len(), other.len(), "trajectories on different grids");
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| crate::linalg::distance(&a[..n], &b[..n]))
            .fold(0.0, f64::max)
    }
}

/// `k T / m` for `k = 0..=m`.
pub fn uniform_grid(horizon: f64, m: usize) -> Vec<f64> {
    (0..=m).map(|k| horizon * k as f64 / m as f64).collect()
}
