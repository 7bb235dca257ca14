use std::collections::BTreeMap;

use rayon::prelude::*;

use super::enumerate::block_eigenvalues;
use super::transform::{inverse_fill, BlockUpperTriangular, KronPower};
use crate::carleman::CarlemanSystem;
use crate::error::{precondition, Error, Result};
use crate::linalg::{norm2, spectral_norm, DenseMatrix, LinearOperator, Lu};

/// Dense LU is used for shifted leading blocks up to this size.
pub const DENSE_ROUTE_LIMIT: usize = 2000;

#[derive(Clone, Debug)]
pub struct DiagonalizeOptions {
    /// Bound on `‖AV − VΛ‖_F / ‖A‖_F`.
    pub residual_tolerance: f64,
    /// Relative gap below which a needed shift counts as resonant.
    pub gap_tolerance: f64,
    pub dense_route_limit: usize,
    /// Solve every padding system by both routes and record the discrepancy.
    pub cross_validate: bool,
    /// Estimate `‖V‖₂‖V⁻¹‖₂` by power iteration.
    pub estimate_kappa: bool,
}

impl Default for DiagonalizeOptions {
    fn default() -> Self {
        Self {
            residual_tolerance: 1e-8,
            gap_tolerance: 1e-9,
            dense_route_limit: DENSE_ROUTE_LIMIT,
            cross_validate: false,
            estimate_kappa: true,
        }
    }
}

/// `A = V Λ V⁻¹` for a truncated Carleman matrix.
#[derive(Clone, Debug)]
pub struct Diagonalization {
    pub lambda: Vec<f64>,
    pub v: BlockUpperTriangular,
    pub v_inv: BlockUpperTriangular,
    /// `‖AV − VΛ‖_F / ‖A‖_F`
    pub residual: f64,
    pub residual_worst_column: usize,
    /// `‖V V⁻¹ − I‖_F`
    pub inverse_residual: f64,
    pub kappa_direct: Option<f64>,
    pub ln_kappa_guggenheimer: f64,
    pub a_frobenius: f64,
    /// Largest relative disagreement between the LU and spectral padding routes.
    pub route_discrepancy: Option<f64>,
}

impl Diagonalization {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn kappa_guggenheimer(&self) -> f64 {
        self.ln_kappa_guggenheimer.exp()
    }

    /// `V⁻¹ y`
    pub fn to_eigenbasis(&self, y: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim()];
        self.v_inv.apply(y, &mut z);
        z
    }

    /// `V z`
    pub fn from_eigenbasis(&self, z: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.v.apply(z, &mut y);
        y
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Solves `(P11 − μI) x = −P12 g` so that `[x; g]` extends an eigenvector of
/// `P22` (eigenvalue `μ`) to one of `[[P11, P12], [0, P22]]`.
///
/// The top block of the eigen-residual is verified against `1e-10 ‖P‖_F ‖[x; g]‖`.
pub fn pad_eigenvector(p11: &DenseMatrix, p12: &DenseMatrix, g: &[f64], mu: f64) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = p12.matvec(g)?.iter().map(|v| -v).collect();
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; p11.rows()]);
    }
    let lu = Lu::factor(&p11.shifted(mu))?;
    let x = lu.solve(&rhs).map_err(|e| match e {
        Error::Singular { pivot, .. } => Error::Resonance {
            block: 0,
            mu,
            lambda: mu,
            gap: pivot.abs(),
        },
        other => other,
    })?;
    let top: Vec<f64> = p11
        .matvec(&x)?
        .iter()
        .zip(&rhs)
        .zip(&x)
        .map(|((a, r), xi)| a - r - mu * xi)
        .collect();
    let scale = (p11.frobenius_norm().powi(2) + p12.frobenius_norm().powi(2)).sqrt()
        * (norm2(&x).powi(2) + norm2(g).powi(2)).sqrt();
    let res = norm2(&top);
    if res > 1e-10 * scale {
        return Err(Error::Residual {
            what: "padded eigenvector",
            value: res,
            limit: 1e-10 * scale,
            column: 0,
        });
    }
    Ok(x)
}

/// Spectral-inversion form of the same solve:
/// `x = −V diag(1/(λ − μ)) V⁻¹ (P12 g)` with `P11 = V diag(λ) V⁻¹`.
pub fn pad_eigenvector_spectral(
    v: &dyn LinearOperator,
    v_inv: &dyn LinearOperator,
    lambda: &[f64],
    p12_g: &[f64],
    mu: f64,
) -> Vec<f64> {
    let mut z = vec![0.0; lambda.len()];
    v_inv.apply(p12_g, &mut z);
    for (zi, &l) in z.iter_mut().zip(lambda) {
        *zi /= mu - l;
    }
    let mut x = vec![0.0; lambda.len()];
    v.apply(&z, &mut x);
    x
}

pub fn iterative_diagonalize(system: &CarlemanSystem) -> Result<Diagonalization> {
    iterative_diagonalize_with(system, &DiagonalizeOptions::default())
}

/// Builds `V` block column by block column: the diagonal block of column `j`
/// is `W^{⊗j}`, and the part above it comes from padding each Kronecker
/// eigenvector against the already diagonalized leading principal block.
pub fn iterative_diagonalize_with(
    system: &CarlemanSystem,
    options: &DiagonalizeOptions,
) -> Result<Diagonalization> {
    let order = system.order;
    let w = system.eigen.vectors.clone();
    let w_inv = system.eigen.inverse.clone();

    let mut lambda = Vec::with_capacity(system.dim);
    for j in 1..=order {
        lambda.extend(block_eigenvalues(&system.eigen.values, j)?);
    }
    let scale = lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap_limit = options.gap_tolerance * scale;

    let mut v = BlockUpperTriangular::block_diagonal(
        (1..=order).map(|j| KronPower::new(w.clone(), j)).collect(),
    );
    let mut v_inv = BlockUpperTriangular::block_diagonal(
        (1..=order).map(|j| KronPower::new(w_inv.clone(), j)).collect(),
    );
    let a = system.assembled();
    let mut discrepancy: Option<f64> = None;

    for k in 1..order {
        let j = k + 1;
        let Some(ob) = system.off_block(j + 1 - system.degree) else {
            continue;
        };
        if system.gamma == 0.0 || ob.matrix.nnz() == 0 {
            continue;
        }
        let lead = system.offsets()[k];
        let size = system.block_size(j);
        let row_range = system.block_range(ob.row);
        let kp = &v.diag[k];

        // R = γ · Off · W^{⊗j}, nonzero only in block row `ob.row`
        let mut r = DenseMatrix::zeros(row_range.len(), size);
        let mut dense_row = vec![0.0; size];
        for i in 0..row_range.len() {
            dense_row.iter_mut().for_each(|x| *x = 0.0);
            let (c, vals) = ob.matrix.row(i);
            for (&cc, &vv) in c.iter().zip(vals) {
                dense_row[cc] = system.gamma * vv;
            }
            kp.apply_transpose(&dense_row, r.row_mut(i));
        }

        let mu = &lambda[system.offsets()[k]..system.offsets()[j]];
        let lead_lambda = &lambda[..lead];
        let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (c, m) in mu.iter().enumerate() {
            let active = (0..r.rows()).any(|i| r[(i, c)] != 0.0);
            if active {
                groups.entry(m.to_bits()).or_default().push(c);
            }
        }
        for &bits in groups.keys() {
            let m = f64::from_bits(bits);
            let (idx, gap) = lead_lambda
                .iter()
                .enumerate()
                .map(|(i, l)| (i, (l - m).abs()))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            if gap <= gap_limit {
                return Err(Error::Resonance {
                    block: j,
                    mu: m,
                    lambda: lead_lambda[idx],
                    gap,
                });
            }
        }

        let use_dense = lead <= options.dense_route_limit;
        let p11 = if use_dense || options.cross_validate {
            Some(a.submatrix(0..lead, 0..lead).to_dense())
        } else {
            None
        };
        let rhs_for = |c: usize| {
            let mut rhs = vec![0.0; lead];
            for (i, ri) in row_range.clone().enumerate() {
                rhs[ri] = -r[(i, c)];
            }
            rhs
        };
        let v_ref = &v;
        let v_inv_ref = &v_inv;
        let solved: Vec<Result<Vec<(usize, Vec<f64>, f64)>>> = groups
            .par_iter()
            .map(|(&bits, cols)| {
                let m = f64::from_bits(bits);
                let lu = match &p11 {
                    Some(p) if use_dense => Some(Lu::factor(&p.shifted(m))?),
                    _ => None,
                };
                let mut out = Vec::with_capacity(cols.len());
                for &c in cols {
                    let rhs = rhs_for(c);
                    let spectral = || {
                        let p12g: Vec<f64> = rhs.iter().map(|x| -x).collect();
                        let prefix_v = Prefix { m: v_ref, blocks: k };
                        let prefix_inv = Prefix { m: v_inv_ref, blocks: k };
                        pad_eigenvector_spectral(&prefix_v, &prefix_inv, lead_lambda, &p12g, m)
                    };
                    let (x, diff) = match &lu {
                        Some(lu) => {
                            let x = lu.solve(&rhs).map_err(|_| Error::Resonance {
                                block: j,
                                mu: m,
                                lambda: m,
                                gap: 0.0,
                            })?;
                            let diff = if options.cross_validate {
                                let s = spectral();
                                crate::linalg::distance(&s, &x) / norm2(&x).max(f64::MIN_POSITIVE)
                            } else {
                                0.0
                            };
                            (x, diff)
                        }
                        None => {
                            let s = spectral();
                            let diff = match &p11 {
                                Some(p) => {
                                    let x = Lu::factor(&p.shifted(m))?.solve(&rhs)?;
                                    crate::linalg::distance(&s, &x) / norm2(&x).max(f64::MIN_POSITIVE)
                                }
                                None => 0.0,
                            };
                            (s, diff)
                        }
                    };
                    out.push((c, x, diff));
                }
                Ok(out)
            })
            .collect();

        let mut fill = DenseMatrix::zeros(lead, size);
        for group in solved {
            for (c, x, diff) in group? {
                fill.set_column(c, &x);
                if options.cross_validate {
                    discrepancy = Some(discrepancy.unwrap_or(0.0).max(diff));
                }
            }
        }
        let inv_fill = inverse_fill(&v_inv, k, &fill, &v_inv.diag[k]);
        v.fills[k] = Some(fill);
        v_inv.fills[k] = Some(inv_fill);
    }

    let a_frobenius = a.frobenius_norm();
    let (residual, residual_worst_column) = eigen_residual(system, &v, &lambda);
    let residual = if a_frobenius > 0.0 { residual / a_frobenius } else { residual };
    let inverse_residual = identity_residual(&v, &v_inv);
    let kappa_direct = options
        .estimate_kappa
        .then(|| spectral_norm(&v).value * spectral_norm(&v_inv).value);
    let d = system.dim as f64;
    let ln_kappa_guggenheimer =
        2f64.ln() - v.log_abs_det() + d * (v.frobenius_norm().ln() - 0.5 * d.ln());

    if !(residual <= options.residual_tolerance) {
        return Err(Error::Residual {
            what: "‖AV − VΛ‖_F/‖A‖_F",
            value: residual,
            limit: options.residual_tolerance,
            column: residual_worst_column,
        });
    }
    if let Some(kappa) = kappa_direct {
        let limit = options.residual_tolerance * kappa;
        if !(inverse_residual <= limit) {
            return Err(Error::Residual {
                what: "‖VV⁻¹ − I‖_F",
                value: inverse_residual,
                limit,
                column: 0,
            });
        }
    }
    Ok(Diagonalization {
        lambda,
        v,
        v_inv,
        residual,
        residual_worst_column,
        inverse_residual,
        kappa_direct,
        ln_kappa_guggenheimer,
        a_frobenius,
        route_discrepancy: discrepancy,
    })
}

/// Restriction of a block-triangular matrix to its leading `blocks` blocks.
struct Prefix<'a> {
    m: &'a BlockUpperTriangular,
    blocks: usize,
}

impl LinearOperator for Prefix<'_> {
    fn nrows(&self) -> usize {
        self.m.offsets[self.blocks]
    }

    fn ncols(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.m.apply_prefix(self.blocks, x, y);
    }

    fn apply_transpose(&self, _x: &[f64], _y: &mut [f64]) {
        unimplemented!("prefix views are only applied forwards")
    }
}

/// `(‖AV − VΛ‖_F, worst column)` computed one column at a time.
pub fn eigen_residual(
    a: &dyn LinearOperator,
    v: &BlockUpperTriangular,
    lambda: &[f64],
) -> (f64, usize) {
    let d = v.dim();
    let per_column: Vec<f64> = (0..d)
        .into_par_iter()
        .map(|c| {
            let col = v.column(c);
            let mut av = vec![0.0; d];
            a.apply(&col, &mut av);
            av.iter()
                .zip(&col)
                .map(|(x, y)| (x - lambda[c] * y).powi(2))
                .sum::<f64>()
        })
        .collect();
    let worst = per_column
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, &r)| if r > acc.1 { (i, r) } else { acc })
        .0;
    (per_column.iter().sum::<f64>().sqrt(), worst)
}

/// Residual of `((A − αI)/β) V − V ((Λ − αI)/β)` using an unmodified `V`.
pub fn shifted_scaled_residual(system: &CarlemanSystem, diag: &Diagonalization, alpha: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(precondition("scale β must be positive"));
    }
    struct Scaled<'a> {
        a: &'a CarlemanSystem,
        alpha: f64,
        beta: f64,
    }
    impl LinearOperator for Scaled<'_> {
        fn nrows(&self) -> usize {
            self.a.dim
        }
        fn ncols(&self) -> usize {
            self.a.dim
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            self.a.apply(x, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = (*yi - self.alpha * xi) / self.beta;
            }
        }
        fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
            self.a.apply_transpose(x, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = (*yi - self.alpha * xi) / self.beta;
            }
        }
    }
    let scaled_lambda: Vec<f64> = diag.lambda.iter().map(|l| (l - alpha) / beta).collect();
    let op = Scaled {
        a: system,
        alpha,
        beta,
    };
    Ok(eigen_residual(&op, &diag.v, &scaled_lambda).0)
}

/// `‖V V⁻¹ − I‖_F`
pub fn identity_residual(v: &BlockUpperTriangular, v_inv: &BlockUpperTriangular) -> f64 {
    let d = v.dim();
    (0..d)
        .into_par_iter()
        .map(|c| {
            let col = v_inv.column(c);
            let mut out = vec![0.0; d];
            v.apply(&col, &mut out);
            out[c] -= 1.0;
            out.iter().map(|x| x * x).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

/// Standalone inverse of a computed `V`, independent of the one built alongside it.
pub fn invert_v(diag: &Diagonalization) -> Result<BlockUpperTriangular> {
    diag.v.invert()
}

/// `(κ_direct, ln κ_Guggenheimer)` for an arbitrary block-triangular `V`.
pub fn condition_numbers(v: &BlockUpperTriangular, v_inv: &BlockUpperTriangular) -> (f64, f64) {
    let d = v.dim() as f64;
    let direct = spectral_norm(v).value * spectral_norm(v_inv).value;
    let ln_g = 2f64.ln() - v.log_abs_det() + d * (v.frobenius_norm().ln() - 0.5 * d.ln());
    (direct, ln_g)
}
