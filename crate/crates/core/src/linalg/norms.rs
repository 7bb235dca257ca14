use super::{norm2, LinearOperator};

pub const POWER_TOLERANCE: f64 = 1e-8;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

/// Result of a power-iteration estimate of the spectral norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralNorm {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn spectral_norm<A: LinearOperator + ?Sized>(a: &A) -> SpectralNorm {
    spectral_norm_with(a, POWER_TOLERANCE, POWER_MAX_ITERATIONS)
}

/// Power iteration on `AᵀA` from a fixed non-uniform start vector.
///
/// The estimate is `‖A x‖` for the current unit iterate `x`; iteration stops
/// once the eigen-residual `‖AᵀA x − ‖Ax‖² x‖` falls below `tol·‖Ax‖²`.
pub fn spectral_norm_with<A: LinearOperator + ?Sized>(
    a: &A,
    tol: f64,
    max_iterations: usize,
) -> SpectralNorm {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return SpectralNorm {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * (1.7 * i as f64 + 0.3).sin())
        .collect();
    let s = norm2(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut y = vec![0.0; a.nrows()];
    let mut z = vec![0.0; n];
    let mut sigma = 0.0;
    for it in 1..=max_iterations {
        a.apply(&x, &mut y);
        sigma = norm2(&y);
        a.apply_transpose(&y, &mut z);
        let zn = norm2(&z);
        if zn == 0.0 {
            return SpectralNorm {
                value: sigma,
                iterations: it,
                converged: true,
            };
        }
        let rho = sigma * sigma;
        let residual = x
            .iter()
            .zip(&z)
            .map(|(xi, zi)| (zi - rho * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * rho {
            return SpectralNorm {
                value: sigma,
                iterations: it,
                converged: true,
            };
        }
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi = zi / zn;
        }
    }
    SpectralNorm {
        value: sigma,
        iterations: max_iterations,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseMatrix, SparseMatrix};
    use proptest::prelude::*;

    #[test]
    fn diagonal_examples() {
        let d = DenseMatrix::from_diagonal(&[-2.0, -7.0]);
        let s = spectral_norm(&d);
        assert!(s.converged);
        assert!((s.value - 7.0).abs() <= 1e-7 * 7.0);
        assert!((spectral_norm(&DenseMatrix::identity(4)).value - 1.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&SparseMatrix::zeros(3, 3)).value, 0.0);
    }

    #[test]
    fn rectangular_rank_one() {
        // u vᵀ has norm |u||v|
        let m = DenseMatrix::from_rows(&[&[3.0, 4.0], &[6.0, 8.0], &[0.0, 0.0]]);
        let expected = 5.0 * 5f64.sqrt();
        assert!((spectral_norm(&m).value - expected).abs() < 1e-9 * expected);
    }

    proptest! {
        #[test]
        fn diagonal_norm_is_max_abs(d in prop::collection::vec(-10.0f64..10.0, 1..8)) {
            let m = SparseMatrix::from_diagonal(&d);
            let expected = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let got = spectral_norm(&m);
            prop_assert!(got.value <= expected * (1.0 + 1e-12));
            if got.converged && expected > 0.0 {
                prop_assert!((got.value - expected).abs() <= 1e-8 * expected);
            }
        }
    }
}
