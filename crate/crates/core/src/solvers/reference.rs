use super::{SolverKind, Trajectory};
use crate::error::{precondition, Error, Result};
use crate::pde::QuadraticOde;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            safety: 0.9,
            min_factor: 0.2,
            max_factor: 5.0,
            max_steps: 10_000_000,
        }
    }
}

fn rms_scaled(v: &[f64], y0: &[f64], y1: &[f64], o: &Dopri5Options) -> f64 {
    let n = v.len().max(1) as f64;
    (v.iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = o.atol + o.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum::<f64>()
        / n)
        .sqrt()
}

/// Dormand–Prince 5(4) with dense output. Returns the state at every entry of
/// `samples` (non-decreasing, within `[0, t_end]`).
pub fn dopri5<F>(f: F, y0: &[f64], t_end: f64, samples: &[f64], o: &Dopri5Options) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    if !(t_end > 0.0) {
        return Err(precondition("integration horizon must be positive"));
    }
    if samples.windows(2).any(|w| w[1] < w[0]) || samples.iter().any(|&s| s < 0.0 || s > t_end) {
        return Err(precondition("sample times must be sorted and inside [0, T]"));
    }
    let n = y0.len();
    let mut out = Vec::with_capacity(samples.len());
    let mut next = 0;
    while next < samples.len() && samples[next] == 0.0 {
        out.push(y0.to_vec());
        next += 1;
    }

    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut t = 0.0;
    f(t, &y, &mut k[0]);

    // initial step
    let d0 = rms_scaled(&y, &y, &y, o);
    let d1 = rms_scaled(&k[0], &y, &y, o);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    for i in 0..n {
        tmp[i] = y[i] + h0 * k[0][i];
    }
    f(t + h0, &tmp, &mut k[1]);
    for i in 0..n {
        err[i] = (k[1][i] - k[0][i]) / h0;
    }
    let d2 = rms_scaled(&err, &y, &y, o);
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let mut h = (100.0 * h0).min(h1).min(t_end);

    let mut steps = 0;
    while t < t_end {
        steps += 1;
        if steps > o.max_steps {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let stage = |coeffs: &[(usize, f64)], k: &[Vec<f64>], tmp: &mut [f64]| {
            for i in 0..n {
                let mut s = 0.0;
                for &(j, a) in coeffs {
                    s += a * k[j][i];
                }
                tmp[i] = y[i] + h * s;
            }
        };
        stage(&[(0, A21)], &k, &mut tmp);
        f(t + C2 * h, &tmp, &mut k[1]);
        stage(&[(0, A31), (1, A32)], &k, &mut tmp);
        f(t + C3 * h, &tmp, &mut k[2]);
        stage(&[(0, A41), (1, A42), (2, A43)], &k, &mut tmp);
        f(t + C4 * h, &tmp, &mut k[3]);
        stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &k, &mut tmp);
        f(t + C5 * h, &tmp, &mut k[4]);
        stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k, &mut tmp);
        f(t + h, &tmp, &mut k[5]);
        stage(&[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)], &k, &mut ynew);
        f(t + h, &ynew, &mut k[6]);
        for i in 0..n {
            err[i] = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
        }
        let e = rms_scaled(&err, &y, &ynew, o);
        if !e.is_finite() {
            h *= o.min_factor;
            continue;
        }
        if e <= 1.0 {
            let t_new = if last { t_end } else { t + h };
            while next < samples.len() && samples[next] <= t_new {
                let theta = (samples[next] - t) / h;
                out.push(dense_output(&y, &ynew, &k, h, theta));
                next += 1;
            }
            t = t_new;
            y.copy_from_slice(&ynew);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            let fac = if e == 0.0 {
                o.max_factor
            } else {
                (o.safety * e.powf(-0.2)).clamp(o.min_factor, o.max_factor)
            };
            h *= fac;
        } else {
            let fac = (o.safety * e.powf(-0.2)).clamp(o.min_factor, 1.0);
            h *= fac;
        }
    }
    while next < samples.len() {
        out.push(y.clone());
        next += 1;
    }
    Ok(out)
}

fn dense_output(y0: &[f64], y1: &[f64], k: &[Vec<f64>], h: f64, theta: f64) -> Vec<f64> {
    let th1 = 1.0 - theta;
    (0..y0.len())
        .map(|i| {
            let r2 = y1[i] - y0[i];
            let r3 = h * k[0][i] - r2;
            let r4 = r2 - h * k[6][i] - r3;
            let r5 = h
                * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
            y0[i] + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)))
        })
        .collect()
}

/// Reference solution of `du/dt = F1 u + F2 (u ⊗ u)` sampled at `samples`.
pub fn solve_reference(ode: &QuadraticOde, horizon: f64, samples: &[f64], o: &Dopri5Options) -> Result<Trajectory> {
    let states = dopri5(|_, u, du| ode.rhs(u, du), &ode.u_in, horizon, samples, o)?;
    Ok(Trajectory {
        times: samples.to_vec(),
        states,
        kind: SolverKind::Reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseMatrix, SparseMatrix};
    use crate::pde::{discretize, FisherKppProblem, Profile};

    fn scalar(f1: f64, b: f64, u0: f64) -> QuadraticOde {
        QuadraticOde::from_parts(
            SparseMatrix::from_diagonal(&[f1]),
            SparseMatrix::from_triplets(1, 1, vec![(0, 0, b)]).unwrap(),
            vec![u0],
            vec![f1],
            DenseMatrix::identity(1),
        )
        .unwrap()
    }

    #[test]
    fn scalar_linear_decay() {
        let ode = scalar(-2.0, 0.0, 1.0);
        let tr = solve_reference(&ode, 1.0, &[0.0, 0.5, 1.0], &Dopri5Options::default()).unwrap();
        assert!((tr.states[2][0] - (-2f64).exp()).abs() < 1e-9);
        assert!((tr.states[1][0] - (-1f64).exp()).abs() < 1e-9);
        assert_eq!(tr.states[0][0], 1.0);
    }

    #[test]
    fn logistic_closed_form() {
        let p = FisherKppProblem::new(0.0, 0.4, -1.0, 10.0, Profile::Constant { value: 0.1 }).unwrap();
        let ode = discretize(&p, 1).unwrap();
        let samples: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        let tr = solve_reference(&ode, 10.0, &samples, &Dopri5Options::default()).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let e = (0.4 * t).exp();
            let exact = 0.4 * 0.1 * e / (0.4 + 0.1 * (e - 1.0));
            assert!((s[0] - exact).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn desk_problem_decays() {
        let ode = discretize(&FisherKppProblem::desk(), 8).unwrap();
        let samples: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
        let tr = solve_reference(&ode, 3.0, &samples, &Dopri5Options::default()).unwrap();
        let norms = tr.norms();
        assert!(norms.windows(2).all(|w| w[1] <= w[0]));
        for (a, b) in tr.states[0].iter().zip(tr.last_state()) {
            assert!(b.abs() < a.abs());
        }
    }

    #[test]
    fn rejects_bad_samples() {
        let ode = scalar(-1.0, 0.0, 1.0);
        let o = Dopri5Options::default();
        assert!(solve_reference(&ode, 1.0, &[0.5, 0.2], &o).is_err());
        assert!(solve_reference(&ode, 1.0, &[2.0], &o).is_err());
        assert!(solve_reference(&ode, 0.0, &[0.0], &o).is_err());
    }

    #[test]
    fn blow_up_reports_underflow() {
        // u' = u², u(0) = 1 blows up at t = 1
        let ode = scalar(0.0, 1.0, 1.0);
        let err = solve_reference(&ode, 2.0, &[2.0], &Dopri5Options::default()).unwrap_err();
        assert!(matches!(err, Error::StepSizeUnderflow { .. }));
    }
}
