use std::collections::HashMap;

use super::{Recording, SolverKind, Trajectory};
use crate::error::{precondition, Error, Result};
use crate::spectrum::Diagonalization;

const MAX_SERIES_TERMS: usize = 500;
const SERIES_TOLERANCE: f64 = 1e-18;
const MAX_ARGUMENT: f64 = 700.0;
const VALIDATION_POINTS: usize = 101;
const MAX_DOUBLINGS: usize = 4;

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `e^{−t} I_k(t)` by the power series, with every term formed in log space.
pub fn bessel_i_scaled(k: usize, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(precondition("Bessel argument must be finite and non-negative"));
    }
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let half = t / 2.0;
    let ln_q = 2.0 * half.ln();
    let mut ln_term = k as f64 * half.ln() - ln_factorial(k) - t;
    let mut sum = 0.0;
    // the terms peak near s = t/2, so large arguments need more of them
    let max_terms = MAX_SERIES_TERMS.max(2 * t.ceil() as usize + 100);
    for s in 0..max_terms {
        let term = ln_term.exp();
        sum += term;
        let ratio_ln = ln_q - ((s + 1) as f64).ln() - ((k + s + 1) as f64).ln();
        // terms are decreasing from here on once the ratio drops below one
        if ratio_ln < 0.0 && term < SERIES_TOLERANCE * sum {
            break;
        }
        ln_term += ratio_ln;
    }
    Ok(sum)
}

/// Modified Bessel function of the first kind `I_k(t)`, `0 ≤ t ≤ 700`.
pub fn bessel_i(k: usize, t: f64) -> Result<f64> {
    if t > MAX_ARGUMENT {
        return Err(precondition(format!("Bessel argument {t} exceeds {MAX_ARGUMENT}")));
    }
    Ok(bessel_i_scaled(k, t)? * t.exp())
}

/// Coefficients of `e^{xt} = Σ_k C_k(t) T_k(x)`: `C_0 = I_0(t)`, `C_k = 2 I_k(t)`.
pub fn chebyshev_coefficients(t: f64, r: usize) -> Result<Vec<f64>> {
    (0..=r)
        .map(|k| Ok(if k == 0 { 1.0 } else { 2.0 } * bessel_i(k, t)?))
        .collect()
}

/// `e^{−t} C_k(t)`, safe for large `t`.
pub fn chebyshev_coefficients_scaled(t: f64, r: usize) -> Result<Vec<f64>> {
    (0..=r)
        .map(|k| Ok(if k == 0 { 1.0 } else { 2.0 } * bessel_i_scaled(k, t)?))
        .collect()
}

/// `Σ_k c_k T_k(x)` by the Clenshaw recurrence.
pub fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let Some((&c0, rest)) = coeffs.split_first() else {
        return 0.0;
    };
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in rest.iter().rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    c0 + x * b1 - b2
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationOrder {
    pub order: usize,
    /// Validated `max_x |e^{−t}(Σ C_k T_k(x) − e^{xt})|` on the check grid.
    pub achieved: f64,
    pub doublings: usize,
}

fn series_error(scaled: &[f64], t: f64) -> f64 {
    (0..VALIDATION_POINTS)
        .map(|i| {
            let x = -1.0 + 2.0 * i as f64 / (VALIDATION_POINTS - 1) as f64;
            (clenshaw(scaled, x) - ((x - 1.0) * t).exp()).abs()
        })
        .fold(0.0, f64::max)
}

/// `r = ⌈e^{5/4} t / 2 + ln(1/ε)⌉`, then checked on a 101-point grid and
/// doubled (at most four times) until the error relative to `e^{t}` is `≤ ε`.
pub fn truncation_order(t: f64, eps: f64) -> Result<TruncationOrder> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(precondition("time argument must be positive"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(precondition("accuracy ε must lie in (0, 1)"));
    }
    let mut r = ((1.25f64.exp() * t / 2.0 + (1.0 / eps).ln()).ceil() as usize).max(1);
    let mut achieved = f64::INFINITY;
    for doublings in 0..=MAX_DOUBLINGS {
        let c = chebyshev_coefficients_scaled(t, r)?;
        achieved = series_error(&c, t);
        if achieved <= eps {
            return Ok(TruncationOrder {
                order: r,
                achieved,
                doublings,
            });
        }
        if doublings < MAX_DOUBLINGS {
            r *= 2;
        }
    }
    Err(Error::ValidationExhausted {
        order: r,
        achieved,
        target: eps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChebyshevScale {
    pub alpha: f64,
    pub beta: f64,
}

/// `α = (λ_max + λ_min)/2`, `β = (λ_max − λ_min)/2`.
pub fn chebyshev_scale(lambda: &[f64]) -> Result<ChebyshevScale> {
    if lambda.is_empty() {
        return Err(precondition("empty spectrum"));
    }
    let mx = lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mn = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
    if !mx.is_finite() || !mn.is_finite() {
        return Err(precondition("spectrum must be finite"));
    }
    Ok(ChebyshevScale {
        alpha: (mx + mn) / 2.0,
        beta: (mx - mn) / 2.0,
    })
}

/// Truncated Chebyshev approximation of `λ ↦ e^{λ t}` on `[α − β, α + β]`.
#[derive(Clone, Debug)]
pub struct ChebyshevPropagator {
    pub order: usize,
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `e^{−βt} C_k(βt)`
    pub coeffs: Vec<f64>,
    pub achieved: f64,
}

impl ChebyshevPropagator {
    /// Order chosen by [`truncation_order`] for the scaled time `βt`.
    pub fn new(scale: ChebyshevScale, t: f64, eps: f64) -> Result<Self> {
        let tau = scale.beta * t;
        if tau == 0.0 {
            return Self::with_order(scale, t, 1);
        }
        let tr = truncation_order(tau, eps)?;
        let mut p = Self::with_order(scale, t, tr.order)?;
        p.achieved = tr.achieved;
        Ok(p)
    }

    pub fn with_order(scale: ChebyshevScale, t: f64, order: usize) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(precondition("propagation time must be non-negative"));
        }
        let coeffs = chebyshev_coefficients_scaled(scale.beta * t, order)?;
        Ok(Self {
            order,
            t,
            alpha: scale.alpha,
            beta: scale.beta,
            achieved: f64::NAN,
            coeffs,
        })
    }

    /// `[e^{λt}]_r = e^{(α+β)t} Σ_k e^{−βt} C_k(βt) T_k((λ − α)/β)`
    pub fn exp(&self, lambda: f64) -> f64 {
        if self.beta == 0.0 {
            return (lambda * self.t).exp();
        }
        let x = (lambda - self.alpha) / self.beta;
        ((self.alpha + self.beta) * self.t).exp() * clenshaw(&self.coeffs, x)
    }
}

#[derive(Clone, Debug)]
pub struct MatexpResult {
    pub y: Vec<f64>,
    pub order: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// `y(T) = V [e^{ΛT}]_r V⁻¹ y_in`.
pub fn propagate_matexp(diag: &Diagonalization, y_in: &[f64], horizon: f64, eps: f64) -> Result<MatexpResult> {
    if y_in.len() != diag.dim() {
        return Err(Error::DimensionMismatch {
            expected: diag.dim(),
            found: y_in.len(),
        });
    }
    let scale = chebyshev_scale(&diag.lambda)?;
    let prop = ChebyshevPropagator::new(scale, horizon, eps)?;
    let mut z = diag.to_eigenbasis(y_in);
    let factors = per_eigenvalue(&diag.lambda, |l| prop.exp(l));
    for (zi, f) in z.iter_mut().zip(&factors) {
        *zi *= f;
    }
    Ok(MatexpResult {
        y: diag.from_eigenbasis(&z),
        order: prop.order,
        alpha: scale.alpha,
        beta: scale.beta,
    })
}

/// Fixed-order Chebyshev propagator applied over `m` equal sub-steps, with the
/// state reported at every sub-step.
pub fn propagate_matexp_stepped(
    diag: &Diagonalization,
    y_in: &[f64],
    horizon: f64,
    steps: usize,
    order: usize,
    rec: Recording,
) -> Result<Trajectory> {
    if steps == 0 || order == 0 {
        return Err(precondition("steps and Chebyshev order must be positive"));
    }
    if y_in.len() != diag.dim() {
        return Err(Error::DimensionMismatch {
            expected: diag.dim(),
            found: y_in.len(),
        });
    }
    let h = horizon / steps as f64;
    let prop = ChebyshevPropagator::with_order(chebyshev_scale(&diag.lambda)?, h, order)?;
    let rho = per_eigenvalue(&diag.lambda, |l| prop.exp(l));
    let mut z = diag.to_eigenbasis(y_in);
    let mut traj = Trajectory::new(SolverKind::Matexp);
    if rec.keep(0, steps) {
        traj.push(0.0, rec.extract(y_in));
    }
    for k in 1..=steps {
        for (zi, r) in z.iter_mut().zip(&rho) {
            *zi *= r;
        }
        if rec.keep(k, steps) {
            traj.push(horizon * k as f64 / steps as f64, rec.extract(&diag.from_eigenbasis(&z)));
        }
    }
    Ok(traj)
}

/// Evaluates `f` once per distinct eigenvalue.
fn per_eigenvalue(lambda: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut cache: HashMap<u64, f64> = HashMap::new();
    lambda
        .iter()
        .map(|&l| *cache.entry(l.to_bits()).or_insert_with(|| f(l)))
        .collect()
}
