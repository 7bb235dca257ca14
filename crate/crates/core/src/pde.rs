//! Fisher-KPP problem `u_t = D u_xx + a u + b u²` on `[0, 1]` with homogeneous
//! Dirichlet boundaries, and its central-difference semi-discretization
//! `du/dt = F1 u + F2 (u ⊗ u)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::linalg::{DenseMatrix, LinearOperator, SparseMatrix};

/// Named initial profiles on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `amplitude · sin²(πx)`
    SinSquared { amplitude: f64 },
    /// `amplitude · exp(−(x − center)² / (2 width²))`
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    Constant { value: f64 },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::SinSquared { amplitude: 0.1 }
    }
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile::SinSquared { amplitude } => amplitude * (PI * x).sin().powi(2),
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude * (-(x - center).powi(2) / (2.0 * width * width)).exp(),
            Profile::Constant { value } => value,
        }
    }

    /// Sup over `[0, 1]` of the third derivative.
    pub fn third_derivative_sup(&self) -> f64 {
        match *self {
            // sin²(πx) = (1 − cos 2πx)/2, so u''' = −A (2π)³ sin(2πx) / 2
            Profile::SinSquared { amplitude } => amplitude.abs() * 4.0 * PI.powi(3),
            Profile::Constant { .. } => 0.0,
            Profile::Gaussian {
                amplitude, width, ..
            } => {
                // He₃(s) = s³ − 3s peaks (in |He₃ e^{−s²/2}|) near s ≈ 0.742
                let s: f64 = (3.0 - 6f64.sqrt()).sqrt();
                let peak = ((s.powi(3) - 3.0 * s) * (-s * s / 2.0).exp()).abs();
                amplitude.abs() * peak / width.powi(3)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::SinSquared { amplitude } => amplitude.is_finite(),
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => amplitude.is_finite() && center.is_finite() && width.is_finite() && width > 0.0,
            Profile::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(precondition("initial profile parameters must be finite (gaussian width > 0)"))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FisherKppProblem {
    pub diffusion: f64,
    pub linear: f64,
    pub quadratic: f64,
    pub horizon: f64,
    pub profile: Profile,
}

impl Default for FisherKppProblem {
    fn default() -> Self {
        Self::desk()
    }
}

impl FisherKppProblem {
    pub fn new(diffusion: f64, linear: f64, quadratic: f64, horizon: f64, profile: Profile) -> Result<Self> {
        let p = Self {
            diffusion,
            linear,
            quadratic,
            horizon,
            profile,
        };
        p.validate()?;
        Ok(p)
    }

    /// D = 0.2, a = 0.4, b = −1, T = 3, u₀ = 0.1 sin²(πx).
    pub fn desk() -> Self {
        Self {
            diffusion: 0.2,
            linear: 0.4,
            quadratic: -1.0,
            horizon: 3.0,
            profile: Profile::SinSquared { amplitude: 0.1 },
        }
    }

    pub fn with_quadratic(&self, b: f64) -> Self {
        Self {
            quadratic: b,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.diffusion, self.linear, self.quadratic, self.horizon]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(precondition("problem coefficients must be finite"));
        }
        if self.diffusion < 0.0 {
            return Err(precondition("diffusion coefficient must be non-negative"));
        }
        if self.horizon <= 0.0 {
            return Err(precondition("horizon T must be positive"));
        }
        self.profile.validate()
    }

    pub fn grid(n: usize) -> Vec<f64> {
        (1..=n).map(|j| j as f64 / (n + 1) as f64).collect()
    }
}

/// Eigendata of `F1`: values sorted descending, eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct F1Eigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
    pub inverse: DenseMatrix,
    pub orthogonal: bool,
}

impl F1Eigen {
    /// Checks `‖F1 w_j − λ_j w_j‖ ≤ 1e-10 ‖F1‖` for every column and builds the
    /// inverse (transpose when the columns are orthonormal, LU otherwise).
    pub fn verified(f1: &SparseMatrix, values: Vec<f64>, vectors: DenseMatrix) -> Result<Self> {
        let n = f1.rows();
        if f1.cols() != n || values.len() != n || vectors.rows() != n || vectors.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: values.len(),
            });
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f1.frobenius_norm());
        let limit = 1e-10 * scale.max(f64::MIN_POSITIVE);
        let mut fw = vec![0.0; n];
        for (j, &lam) in values.iter().enumerate() {
            let w = vectors.column(j);
            f1.apply(&w, &mut fw);
            let res = fw
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt();
            if res > limit {
                return Err(Error::Residual {
                    what: "F1 eigenpair residual",
                    value: res,
                    limit,
                    column: j,
                });
            }
        }
        let gram = vectors.transpose().matmul(&vectors)?;
        let orthogonal = gram.sub(&DenseMatrix::identity(n))?.max_abs() <= 1e-12;
        let inverse = if orthogonal {
            vectors.transpose()
        } else {
            crate::linalg::Lu::factor(&vectors)?.inverse()?
        };
        Ok(Self {
            values,
            vectors,
            inverse,
            orthogonal,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn lambda_min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `du/dt = F1 u + F2 (u ⊗ u)` with the eigendata of `F1`.
#[derive(Clone, Debug)]
pub struct QuadraticOde {
    pub n: usize,
    pub f1: SparseMatrix,
    pub f2: SparseMatrix,
    pub u_in: Vec<f64>,
    pub eigen: F1Eigen,
    pub norm_f1: f64,
    pub norm_f2: f64,
}

impl QuadraticOde {
    /// General constructor for hand-built systems; `F1` eigendata are residual-checked.
    pub fn from_parts(
        f1: SparseMatrix,
        f2: SparseMatrix,
        u_in: Vec<f64>,
        eigenvalues: Vec<f64>,
        eigenvectors: DenseMatrix,
    ) -> Result<Self> {
        let n = f1.rows();
        if f2.rows() != n || f2.cols() != n * n || u_in.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: u_in.len(),
            });
        }
        if u_in.iter().any(|v| !v.is_finite()) {
            return Err(precondition("initial state must be finite"));
        }
        let eigen = F1Eigen::verified(&f1, eigenvalues, eigenvectors)?;
        let norm_f1 = if f1.is_symmetric() {
            eigen.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        } else {
            crate::linalg::spectral_norm(&f1).value
        };
        let norm_f2 = crate::linalg::spectral_norm(&f2).value;
        Ok(Self {
            n,
            f1,
            f2,
            u_in,
            eigen,
            norm_f1,
            norm_f2,
        })
    }

    pub fn lambda_1(&self) -> f64 {
        self.eigen.lambda_max()
    }

    pub fn u_in_norm(&self) -> f64 {
        crate::linalg::norm2(&self.u_in)
    }

    /// `out = F1 u + F2 (u ⊗ u)` without forming `u ⊗ u`.
    pub fn rhs(&self, u: &[f64], out: &mut [f64]) {
        self.f1.apply(u, out);
        let n = self.n;
        for i in 0..n {
            let (cols, vals) = self.f2.row(i);
            let mut s = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                s += v * u[c / n] * u[c % n];
            }
            out[i] += s;
        }
    }

    /// Same system started from a different state.
    pub fn with_initial(&self, u_in: Vec<f64>) -> Self {
        Self {
            u_in,
            ..self.clone()
        }
    }
}

pub fn build_laplacian(n: usize) -> Result<SparseMatrix> {
    if n == 0 {
        return Err(precondition("grid size n must be at least 1"));
    }
    let s = ((n + 1) * (n + 1)) as f64;
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, -2.0 * s));
        if i > 0 {
            t.push((i, i - 1, s));
        }
        if i + 1 < n {
            t.push((i, i + 1, s));
        }
    }
    SparseMatrix::from_triplets(n, n, t)
}

/// `λ_j = −4D(n+1)² sin²(jπ/(2(n+1))) + a`, `j = 1..n`, largest first.
pub fn f1_spectrum(n: usize, diffusion: f64, linear: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=n)
        .map(|j| laplacian_magnitude(n, j) * -diffusion + linear)
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `4(n+1)² sin²(jπ/(2(n+1)))`
fn laplacian_magnitude(n: usize, j: usize) -> f64 {
    let m = (n + 1) as f64;
    4.0 * m * m * (j as f64 * PI / (2.0 * m)).sin().powi(2)
}

/// Orthonormal sine basis: column `j` has entries `√(2/(n+1)) sin(jkπ/(n+1))`.
pub fn f1_eigenvectors(n: usize) -> DenseMatrix {
    let m = (n + 1) as f64;
    let c = (2.0 / m).sqrt();
    let mut w = DenseMatrix::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            w[(k, j)] = c * (((j + 1) * (k + 1)) as f64 * PI / m).sin();
        }
    }
    w
}

pub fn discretize(p: &FisherKppProblem, n: usize) -> Result<QuadraticOde> {
    p.validate()?;
    let lap = build_laplacian(n)?;
    let f1 = lap
        .scaled(p.diffusion)
        .add(&SparseMatrix::from_diagonal(&vec![p.linear; n]))?;
    let f2 = SparseMatrix::from_triplets(
        n,
        n * n,
        (0..n).map(|j| (j, j * n + j, p.quadratic)).collect(),
    )?;
    let u_in = FisherKppProblem::grid(n)
        .into_iter()
        .map(|x| p.profile.eval(x))
        .collect();
    let values = f1_spectrum(n, p.diffusion, p.linear);
    let eigen = F1Eigen::verified(&f1, values, f1_eigenvectors(n))?;
    let norm_f1 = eigen.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(QuadraticOde {
        n,
        f1,
        f2,
        u_in,
        eigen,
        norm_f1,
        norm_f2: p.quadratic.abs(),
    })
}

/// `R = ‖u_in‖ ‖F2‖ / |λ_1|`, defined only when `λ_1 < 0`.
pub fn compute_r(ode: &QuadraticOde) -> Result<f64> {
    let l1 = ode.lambda_1();
    if l1 >= 0.0 {
        return Err(precondition(format!(
            "non-dissipative system (λ_1 = {l1}); R is undefined"
        )));
    }
    Ok(ode.u_in_norm() * ode.norm_f2 / l1.abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dissipativity {
    pub holds: bool,
    pub margin: f64,
}

/// `margin = 4D(n+1)² sin²(π/(2(n+1))) − a`; all `λ(F1) < 0` iff `margin > 0`.
pub fn dissipativity_check(n: usize, diffusion: f64, linear: f64) -> Dissipativity {
    let margin = diffusion * laplacian_magnitude(n, 1) - linear;
    Dissipativity {
        holds: margin > 0.0,
        margin,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RescaleInfo {
    pub gamma: f64,
    pub r: f64,
    pub auto: bool,
    /// `None` when the `‖ũ(t)‖ < 1` guarantee holds.
    pub warning: Option<String>,
}

/// `ũ = u/γ`: `F̃2 = γ F2`, `ũ_in = u_in/γ`. With `gamma = None`, `γ = ‖u_in‖/R`.
pub fn rescale(ode: &QuadraticOde, gamma: Option<f64>) -> Result<(QuadraticOde, RescaleInfo)> {
    let r = compute_r(ode)?;
    let (g, auto) = match gamma {
        Some(g) if g > 0.0 && g.is_finite() => (g, false),
        Some(g) => return Err(precondition(format!("rescale factor must be positive, got {g}"))),
        None => {
            if r == 0.0 {
                return Err(precondition(
                    "automatic rescaling needs ‖u_in‖ > 0 and ‖F2‖ > 0",
                ));
            }
            (ode.u_in_norm() / r, true)
        }
    };
    let warning = (r >= 1.0).then(|| format!("R = {r:.6} ≥ 1: rescaling does not bound ‖ũ(t)‖ below 1"));
    let scaled = QuadraticOde {
        f2: ode.f2.scaled(g),
        u_in: ode.u_in.iter().map(|v| v / g).collect(),
        norm_f2: ode.norm_f2 * g,
        ..ode.clone()
    };
    Ok((
        scaled,
        RescaleInfo {
            gamma: g,
            r,
            auto,
            warning,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron_vec, lu_determinant};
    use proptest::prelude::*;

    fn desk_ode() -> QuadraticOde {
        discretize(&FisherKppProblem::desk(), 8).unwrap()
    }

    #[test]
    fn laplacian_small_cases() {
        assert_eq!(build_laplacian(1).unwrap().to_dense(), DenseMatrix::from_rows(&[&[-8.0]]));
        assert_eq!(
            build_laplacian(2).unwrap().to_dense(),
            DenseMatrix::from_rows(&[&[-18.0, 9.0], &[9.0, -18.0]])
        );
        let l8 = build_laplacian(8).unwrap();
        assert!(l8.is_symmetric());
        assert!(build_laplacian(0).is_err());
    }

    #[test]
    fn no_diffusion_gives_scalar_f1() {
        let p = FisherKppProblem::new(0.0, 0.4, -1.0, 1.0, Profile::default()).unwrap();
        let ode = discretize(&p, 2).unwrap();
        assert_eq!(ode.f1.to_dense(), DenseMatrix::from_diagonal(&[0.4, 0.4]));
        assert_eq!(f1_spectrum(5, 0.0, 0.4), vec![0.4; 5]);
    }

    #[test]
    fn desk_initial_samples() {
        let ode = desk_ode();
        assert_eq!(ode.u_in.len(), 8);
        assert!(ode.u_in.iter().all(|&v| v > 0.0 && v <= 0.1));
    }

    #[test]
    fn f2_acts_componentwise() {
        let p = FisherKppProblem::new(0.2, 0.4, -1.0, 1.0, Profile::default()).unwrap();
        let ode = discretize(&p, 2).unwrap();
        let u = [1.0, 2.0];
        assert_eq!(ode.f2.matvec(&kron_vec(&u, &u)).unwrap(), vec![-1.0, -4.0]);
        let mut out = vec![0.0; 2];
        ode.rhs(&u, &mut out);
        let f1u = ode.f1.matvec(&u).unwrap();
        assert_eq!(out, vec![f1u[0] - 1.0, f1u[1] - 4.0]);
    }

    #[test]
    fn spectrum_examples() {
        let s = f1_spectrum(1, 1.0, 0.0);
        assert!((s[0] + 8.0).abs() < 1e-12);
        let s = f1_spectrum(8, 0.2, 0.4);
        let expected = -4.0 * 0.2 * 81.0 * (PI / 18.0).sin().powi(2) + 0.4;
        assert!((s[0] - expected).abs() < 1e-13);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        // power iteration on F1 picks the most negative eigenvalue in magnitude
        let ode = desk_ode();
        let pow = crate::linalg::spectral_norm(&ode.f1).value;
        assert!((pow - s[7].abs()).abs() < 1e-6 * pow);
    }

    #[test]
    fn spectrum_values_are_roots_of_characteristic_polynomial() {
        for n in 1..=8 {
            let p = FisherKppProblem::new(0.2, 0.4, -1.0, 1.0, Profile::default()).unwrap();
            let ode = discretize(&p, n).unwrap();
            let dense = ode.f1.to_dense();
            let norm = ode.norm_f1;
            for &lam in &ode.eigen.values {
                let det = lu_determinant(&dense.shifted(lam)).unwrap();
                assert!(det.abs() <= 1e-8 * norm.powi(n as i32), "n={n} λ={lam} det={det}");
            }
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        assert_eq!(f1_eigenvectors(1), DenseMatrix::from_rows(&[&[1.0]]));
        let w = f1_eigenvectors(8);
        let g = w.transpose().matmul(&w).unwrap();
        assert!(g.sub(&DenseMatrix::identity(8)).unwrap().max_abs() < 1e-12);
        assert!(desk_ode().eigen.orthogonal);
        let w2 = f1_eigenvectors(2);
        let ratio = w2[(0, 0)] / (PI / 3.0).sin();
        assert!((w2[(1, 0)] - ratio * (2.0 * PI / 3.0).sin()).abs() < 1e-15);
        assert!((w2[(1, 1)] - ratio * (4.0 * PI / 3.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn wrong_eigenvalues_fail_residual_check() {
        let f1 = SparseMatrix::from_diagonal(&[-1.0, -2.0]);
        let err = F1Eigen::verified(&f1, vec![-2.0, -1.0], DenseMatrix::identity(2));
        assert!(matches!(err, Err(Error::Residual { .. })));
    }

    #[test]
    fn sparsity_pattern() {
        let ode = desk_ode();
        assert!(ode.f1.max_row_nnz() <= 3);
        for i in 0..8 {
            assert_eq!(ode.f2.row(i).0.len(), 1);
        }
    }

    #[test]
    fn r_parameter() {
        let ode = desk_ode();
        let r = compute_r(&ode).unwrap();
        assert!(r < 1.0 && r > 0.0);
        let zero = ode.with_initial(vec![0.0; 8]);
        assert_eq!(compute_r(&zero).unwrap(), 0.0);
        let doubled = discretize(&FisherKppProblem::desk().with_quadratic(-2.0), 8).unwrap();
        assert!((compute_r(&doubled).unwrap() - 2.0 * r).abs() < 1e-15);
        let growing = discretize(&FisherKppProblem::new(0.0, 0.1, -1.0, 1.0, Profile::default()).unwrap(), 4).unwrap();
        assert!(compute_r(&growing).is_err());
    }

    #[test]
    fn dissipativity_examples() {
        assert!(dissipativity_check(5, 0.3, -0.1).holds);
        assert!(dissipativity_check(5, 0.0, -0.1).holds);
        assert!(dissipativity_check(8, 0.2, 0.4).holds);
        assert!(dissipativity_check(8, 0.2, 0.4).margin > 0.0);
        assert!(!dissipativity_check(8, 0.0, 0.1).holds);
    }

    #[test]
    fn rescale_examples() {
        let ode = desk_ode();
        let (same, info) = rescale(&ode, Some(1.0)).unwrap();
        assert_eq!(same.u_in, ode.u_in);
        assert_eq!(same.f2, ode.f2);
        assert!(!info.auto);
        let (auto, info) = rescale(&ode, None).unwrap();
        assert!((auto.u_in_norm() - info.r).abs() < 1e-15);
        assert!(info.warning.is_none());
        assert!(rescale(&ode.with_initial(vec![0.0; 8]), None).is_err());
        assert!(rescale(&ode, Some(-1.0)).is_err());
    }

    #[test]
    fn profiles_evaluate() {
        let g = Profile::Gaussian {
            amplitude: 1.0,
            center: 0.5,
            width: 0.1,
        };
        assert_eq!(g.eval(0.5), 1.0);
        assert_eq!(Profile::Constant { value: 0.3 }.eval(0.7), 0.3);
        // third derivative of the gaussian by finite differences
        let h = 1e-3;
        let sup = (0..=1000)
            .map(|i| {
                let x = i as f64 / 1000.0;
                ((g.eval(x + 2.0 * h) - 2.0 * g.eval(x + h) + 2.0 * g.eval(x - h) - g.eval(x - 2.0 * h))
                    / (2.0 * h * h * h))
                    .abs()
            })
            .fold(0.0, f64::max);
        assert!((sup - g.third_derivative_sup()).abs() < 1e-2 * sup);
    }

    proptest! {
        #[test]
        fn rescale_round_trip(gamma in 0.01f64..100.0) {
            let ode = desk_ode();
            let (s, _) = rescale(&ode, Some(gamma)).unwrap();
            for (a, b) in s.u_in.iter().zip(&ode.u_in) {
                prop_assert!((a * gamma - b).abs() <= 1e-15 * b.abs());
            }
        }

        #[test]
        fn dissipative_means_negative_spectrum(n in 1usize..40, d in 0.0f64..2.0, a in -2.0f64..2.0) {
            if dissipativity_check(n, d, a).holds {
                prop_assert!(f1_spectrum(n, d, a)[0] < 0.0);
            }
        }
    }
}
