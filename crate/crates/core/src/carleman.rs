//! Truncated Carleman embedding of `du/dt = F1 u + F_M u^{⊗M}`.
//!
//! The lifted state is `y = [u, u⊗u, …, u^{⊗N}]` and obeys `dy/dt = A y` with
//! `A` block upper triangular: Kronecker sums of `F1` on the diagonal and
//! Kronecker sums of `F_M` on the `(M−1)`-th block super-diagonal.

use std::sync::OnceLock;

use crate::error::{precondition, Error, Result};
use crate::linalg::{kron_power_vec, norm2, LinearOperator, SparseMatrix, DEFAULT_MAX_DIMENSION};
use crate::pde::{F1Eigen, FisherKppProblem, QuadraticOde};

/// `d = n + n² + … + n^N`, checked against `limit`.
pub fn carleman_dimension(n: usize, order: usize) -> Result<usize> {
    carleman_dimension_with_limit(n, order, DEFAULT_MAX_DIMENSION)
}

pub fn carleman_dimension_with_limit(n: usize, order: usize, limit: usize) -> Result<usize> {
    let over = |_| Error::CapacityExceeded {
        requested: usize::MAX,
        limit,
    };
    let mut total: usize = 0;
    let mut size: usize = 1;
    for _ in 0..order {
        size = size.checked_mul(n).ok_or(()).map_err(over)?;
        total = total.checked_add(size).ok_or(()).map_err(over)?;
    }
    if total > limit {
        return Err(Error::CapacityExceeded {
            requested: total,
            limit,
        });
    }
    Ok(total)
}

/// `Σ_{i=1}^{j} I^{⊗(i−1)} ⊗ F ⊗ I^{⊗(j−i)}` for `F` of shape `n × n^q`.
///
/// The result has shape `n^j × n^{j+q−1}`.
pub fn kron_sum(f: &SparseMatrix, j: usize, limit: usize) -> Result<SparseMatrix> {
    if j == 0 {
        return Err(precondition("block index j must be at least 1"));
    }
    let n = f.rows();
    let q = tensor_degree(n, f.cols())?;
    let rows = n
        .checked_pow(j as u32)
        .filter(|&r| r <= limit)
        .ok_or(Error::CapacityExceeded {
            requested: n.saturating_pow(j as u32),
            limit,
        })?;
    let cols = n
        .checked_pow((j + q - 1) as u32)
        .filter(|&c| c <= limit)
        .ok_or(Error::CapacityExceeded {
            requested: n.saturating_pow((j + q - 1) as u32),
            limit,
        })?;
    let mut triplets = Vec::with_capacity(rows * j * f.max_row_nnz());
    for r in 0..rows {
        for i in 1..=j {
            let below = n.pow((j - i) as u32);
            let suffix = r % below;
            let digit = (r / below) % n;
            let prefix = r / (below * n);
            let (fc, fv) = f.row(digit);
            let head = prefix * n.pow(q as u32);
            for (&c, &v) in fc.iter().zip(fv) {
                triplets.push((r, (head + c) * below + suffix, v));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, triplets)
}

fn tensor_degree(n: usize, cols: usize) -> Result<usize> {
    if n == 0 {
        return Err(precondition("base dimension must be at least 1"));
    }
    if n == 1 {
        return if cols == 1 {
            Ok(1)
        } else {
            Err(Error::DimensionMismatch {
                expected: 1,
                found: cols,
            })
        };
    }
    let mut q = 0;
    let mut c = 1usize;
    while c < cols {
        c = c.saturating_mul(n);
        q += 1;
    }
    if c != cols || q == 0 {
        return Err(precondition(format!(
            "a {n}-row coefficient matrix needs n^q columns, got {cols}"
        )));
    }
    Ok(q)
}

pub fn build_diag_block(f1: &SparseMatrix, j: usize) -> Result<SparseMatrix> {
    kron_sum(f1, j, DEFAULT_MAX_DIMENSION)
}

pub fn build_super_block(f2: &SparseMatrix, j: usize) -> Result<SparseMatrix> {
    kron_sum(f2, j, DEFAULT_MAX_DIMENSION)
}

/// `N (4D(n+1)² + a + |b|)`, the closed-form bound on `‖A‖`.
pub fn norm_bound(problem: &FisherKppProblem, n: usize, order: usize) -> f64 {
    let m = (n + 1) as f64;
    order as f64 * (4.0 * problem.diffusion * m * m + problem.linear + problem.quadratic.abs())
}

/// Lifted state, one block per tensor power.
#[derive(Clone, Debug, PartialEq)]
pub struct CarlemanVector {
    pub blocks: Vec<Vec<f64>>,
}

impl CarlemanVector {
    pub fn from_flat(n: usize, order: usize, flat: &[f64]) -> Result<Self> {
        let d = carleman_dimension_with_limit(n, order, usize::MAX)?;
        if flat.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: flat.len(),
            });
        }
        let mut blocks = Vec::with_capacity(order);
        let mut start = 0;
        let mut size = 1;
        for _ in 0..order {
            size *= n;
            blocks.push(flat[start..start + size].to_vec());
            start += size;
        }
        Ok(Self { blocks })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks.concat()
    }

    pub fn block_norms(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| norm2(b)).collect()
    }

    pub fn norm(&self) -> f64 {
        self.block_norms().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn order(&self) -> usize {
        self.blocks.len()
    }
}

/// `y_in = [u, u^{⊗2}, …, u^{⊗N}]`
pub fn lift_initial(u_in: &[f64], order: usize) -> CarlemanVector {
    CarlemanVector {
        blocks: (1..=order).map(|j| kron_power_vec(u_in, j)).collect(),
    }
}

/// Off-diagonal block `A^{row}_{col}` with `col = row + M − 1`, unscaled by γ.
#[derive(Clone, Debug)]
pub struct OffBlock {
    pub row: usize,
    pub col: usize,
    pub matrix: SparseMatrix,
}

/// The truncated Carleman matrix, stored blockwise.
#[derive(Debug)]
pub struct CarlemanSystem {
    pub n: usize,
    pub order: usize,
    pub degree: usize,
    pub gamma: f64,
    pub dim: usize,
    pub diag_blocks: Vec<SparseMatrix>,
    pub off_blocks: Vec<OffBlock>,
    pub eigen: F1Eigen,
    pub norm_f1: f64,
    pub norm_fm: f64,
    offsets: Vec<usize>,
    assembled: OnceLock<SparseMatrix>,
}

impl Clone for CarlemanSystem {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            order: self.order,
            degree: self.degree,
            gamma: self.gamma,
            dim: self.dim,
            diag_blocks: self.diag_blocks.clone(),
            off_blocks: self.off_blocks.clone(),
            eigen: self.eigen.clone(),
            norm_f1: self.norm_f1,
            norm_fm: self.norm_fm,
            offsets: self.offsets.clone(),
            assembled: OnceLock::new(),
        }
    }
}

impl CarlemanSystem {
    /// Quadratic embedding of `ode` truncated at order `N`.
    pub fn build(ode: &QuadraticOde, order: usize) -> Result<Self> {
        build_general_degree(
            &ode.f1,
            ode.eigen.clone(),
            &ode.f2,
            2,
            order,
            ode.norm_f1,
            ode.norm_f2,
        )
    }

    /// Same blocks with the off-diagonal part multiplied by `gamma`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(precondition("gamma must be finite and non-negative"));
        }
        let mut s = self.clone();
        s.gamma = gamma;
        Ok(s)
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Size `n^j` of block `j` (1-based).
    pub fn block_size(&self, j: usize) -> usize {
        self.offsets[j] - self.offsets[j - 1]
    }

    pub fn block_range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j - 1]..self.offsets[j]
    }

    /// Block `j` of the off-diagonal part, if present.
    pub fn off_block(&self, row: usize) -> Option<&OffBlock> {
        self.off_blocks.iter().find(|b| b.row == row)
    }

    /// Assembled sparse `A` (computed on first use, then cached).
    pub fn assembled(&self) -> &SparseMatrix {
        self.assembled.get_or_init(|| self.assemble())
    }

    fn assemble(&self) -> SparseMatrix {
        let mut t = Vec::new();
        for (k, b) in self.diag_blocks.iter().enumerate() {
            let o = self.offsets[k];
            t.extend(b.triplets().map(|(i, j, v)| (i + o, j + o, v)));
        }
        if self.gamma != 0.0 {
            for ob in &self.off_blocks {
                let ro = self.offsets[ob.row - 1];
                let co = self.offsets[ob.col - 1];
                t.extend(
                    ob.matrix
                        .triplets()
                        .map(|(i, j, v)| (i + ro, j + co, self.gamma * v)),
                );
            }
        }
        SparseMatrix::from_triplets(self.dim, self.dim, t).expect("blocks fit the assembled matrix")
    }

    /// `‖A‖ ≤ N‖F1‖ + (N−1)γ‖F_M‖ ≤ N(‖F1‖ + γ‖F_M‖)`
    pub fn norm_bound(&self) -> f64 {
        self.order as f64 * (self.norm_f1 + self.gamma * self.norm_fm)
    }

    pub fn lift(&self, u_in: &[f64]) -> Vec<f64> {
        lift_initial(u_in, self.order).to_flat()
    }

    pub fn split(&self, y: &[f64]) -> CarlemanVector {
        CarlemanVector {
            blocks: (1..=self.order).map(|j| y[self.block_range(j)].to_vec()).collect(),
        }
    }
}

impl LinearOperator for CarlemanSystem {
    fn nrows(&self) -> usize {
        self.dim
    }

    fn ncols(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for j in 1..=self.order {
            let r = self.block_range(j);
            self.diag_blocks[j - 1].apply(&x[r.clone()], &mut y[r]);
        }
        if self.gamma != 0.0 {
            for ob in &self.off_blocks {
                let r = self.block_range(ob.row);
                let c = self.block_range(ob.col);
                ob.matrix.matvec_add(self.gamma, &x[c], &mut y[r]);
            }
        }
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let mut tmp = Vec::new();
        for j in 1..=self.order {
            let r = self.block_range(j);
            self.diag_blocks[j - 1].apply_transpose(&x[r.clone()], &mut y[r]);
        }
        if self.gamma != 0.0 {
            for ob in &self.off_blocks {
                let r = self.block_range(ob.row);
                let c = self.block_range(ob.col);
                tmp.resize(c.len(), 0.0);
                ob.matrix.apply_transpose(&x[r], &mut tmp);
                crate::linalg::axpy(self.gamma, &tmp, &mut y[c]);
            }
        }
    }
}

/// Embedding of `du/dt = F1 u + F_M u^{⊗M}` (single monomial nonlinearity).
pub fn build_general_degree(
    f1: &SparseMatrix,
    eigen: F1Eigen,
    fm: &SparseMatrix,
    degree: usize,
    order: usize,
    norm_f1: f64,
    norm_fm: f64,
) -> Result<CarlemanSystem> {
    let n = f1.rows();
    if n == 0 || f1.cols() != n || fm.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: fm.rows(),
        });
    }
    if degree < 2 {
        return Err(precondition("nonlinearity degree M must be at least 2"));
    }
    if order == 0 {
        return Err(precondition("truncation order N must be at least 1"));
    }
    let expected_cols = n.checked_pow(degree as u32).ok_or(Error::CapacityExceeded {
        requested: usize::MAX,
        limit: DEFAULT_MAX_DIMENSION,
    })?;
    if fm.cols() != expected_cols {
        return Err(Error::DimensionMismatch {
            expected: expected_cols,
            found: fm.cols(),
        });
    }
    if eigen.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: eigen.len(),
        });
    }
    let dim = carleman_dimension(n, order)?;
    let mut offsets = vec![0];
    let mut size = 1;
    for _ in 0..order {
        size *= n;
        offsets.push(offsets.last().unwrap() + size);
    }
    let diag_blocks = (1..=order)
        .map(|j| kron_sum(f1, j, DEFAULT_MAX_DIMENSION))
        .collect::<Result<Vec<_>>>()?;
    let off_blocks = (1..=order)
        .filter(|j| j + degree - 1 <= order)
        .map(|j| {
            Ok(OffBlock {
                row: j,
                col: j + degree - 1,
                matrix: kron_sum(fm, j, DEFAULT_MAX_DIMENSION)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CarlemanSystem {
        n,
        order,
        degree,
        gamma: 1.0,
        dim,
        diag_blocks,
        off_blocks,
        eigen,
        norm_f1,
        norm_fm,
        offsets,
        assembled: OnceLock::new(),
    })
}

/// Embedding for a sum of monomials `Σ_k F_k u^{⊗k}`. Only a single
/// nonlinear term is supported; the mixed case is rejected.
pub fn build_mixed_degree(
    f1: &SparseMatrix,
    eigen: F1Eigen,
    terms: &[(usize, SparseMatrix)],
    order: usize,
    norm_f1: f64,
) -> Result<CarlemanSystem> {
    match terms {
        [(degree, fm)] => {
            let norm_fm = crate::linalg::spectral_norm(fm).value;
            build_general_degree(f1, eigen, fm, *degree, order, norm_f1, norm_fm)
        }
        [] => Err(precondition("at least one nonlinear term is required")),
        _ => Err(Error::Unsupported(
            "mixed-degree Carleman embedding (open problem)",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, kron_vec, spectral_norm, DenseMatrix};
    use crate::pde::{discretize, rescale, Profile};
    use proptest::prelude::*;

    fn ode(n: usize) -> QuadraticOde {
        discretize(&FisherKppProblem::desk(), n).unwrap()
    }

    fn kron_sum_oracle(f: &SparseMatrix, j: usize) -> SparseMatrix {
        let n = f.rows();
        let mut acc: Option<SparseMatrix> = None;
        for i in 1..=j {
            let left = SparseMatrix::identity(n.pow((i - 1) as u32));
            let right = SparseMatrix::identity(n.pow((j - i) as u32));
            let term = kron(&kron(&left, f).unwrap(), &right).unwrap();
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term).unwrap(),
            });
        }
        acc.unwrap()
    }

    #[test]
    fn diag_block_examples() {
        let f1 = SparseMatrix::from_diagonal(&[1.5, -0.5]);
        assert_eq!(build_diag_block(&f1, 1).unwrap(), f1);
        let a2 = build_diag_block(&f1, 2).unwrap();
        assert_eq!(a2.to_dense(), DenseMatrix::from_diagonal(&[3.0, 1.0, 1.0, -1.0]));
        let o = ode(3);
        for j in 1..=3 {
            let b = build_diag_block(&o.f1, j).unwrap();
            let expected = j as f64 * 3f64.powi(j as i32 - 1) * o.f1.trace();
            assert!((b.trace() - expected).abs() < 1e-10 * expected.abs());
            assert_eq!(b, kron_sum_oracle(&o.f1, j));
        }
    }

    #[test]
    fn super_block_examples() {
        let o = ode(2);
        assert_eq!(build_super_block(&o.f2, 1).unwrap(), o.f2);
        let s2 = build_super_block(&o.f2, 2).unwrap();
        assert_eq!((s2.rows(), s2.cols()), (4, 8));
        assert_eq!(s2, kron_sum_oracle(&o.f2, 2));
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(carleman_dimension(8, 3).unwrap(), 584);
        assert_eq!(carleman_dimension(2, 1).unwrap(), 2);
        assert_eq!(carleman_dimension(4, 5).unwrap(), 1364);
        assert_eq!(carleman_dimension(1, 4).unwrap(), 4);
        assert!(matches!(
            carleman_dimension(32, 4),
            Err(Error::CapacityExceeded { .. })
        ));
        let sys = CarlemanSystem::build(&ode(8), 3).unwrap();
        assert_eq!(sys.dim, 584);
        assert_eq!(sys.assembled().rows(), 584);
        assert_eq!(sys.diag_blocks.len(), 3);
        assert_eq!(sys.off_blocks.len(), 2);
    }

    #[test]
    fn first_order_is_f1() {
        let o = ode(4);
        let sys = CarlemanSystem::build(&o, 1).unwrap();
        assert_eq!(sys.assembled(), &o.f1);
    }

    #[test]
    fn lift_examples() {
        let y = lift_initial(&[0.0, 1.0, 0.0], 3);
        for b in &y.blocks {
            assert_eq!(b.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(b.iter().filter(|&&v| v == 0.0).count(), b.len() - 1);
        }
        let y = lift_initial(&[0.3, 0.4], 3);
        let norms = y.block_norms();
        for (got, want) in norms.iter().zip([0.5, 0.25, 0.125]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(lift_initial(&[2.0], 3).to_flat(), vec![2.0, 4.0, 8.0]);
    }

    #[test]
    fn norm_bound_examples() {
        let p = FisherKppProblem::desk();
        assert!((norm_bound(&p, 8, 3) - 198.6).abs() < 1e-12);
        let lin = p.with_quadratic(0.0);
        assert!((norm_bound(&lin, 8, 1) - (0.2 * 324.0 + 0.4)).abs() < 1e-12);
        let sys = CarlemanSystem::build(&ode(4), 3).unwrap();
        let actual = spectral_norm(sys.assembled()).value;
        assert!(norm_bound(&p, 4, 3) >= actual);
        assert!(sys.norm_bound() >= actual);
    }

    #[test]
    fn sparsity_and_derivative_identity() {
        let o = ode(8);
        let (r, info) = rescale(&o, None).unwrap();
        let sys = CarlemanSystem::build(&o, 3).unwrap().with_gamma(info.gamma).unwrap();
        assert!(sys.assembled().max_row_nnz() <= 9);
        let y = sys.lift(&r.u_in);
        let ay = sys.assembled().matvec(&y).unwrap();
        let mut expected = vec![0.0; 8];
        r.rhs(&r.u_in, &mut expected);
        for (a, b) in ay[..8].iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn blockwise_apply_matches_assembly() {
        let o = ode(3);
        let sys = CarlemanSystem::build(&o, 3).unwrap().with_gamma(0.7).unwrap();
        let x: Vec<f64> = (0..sys.dim).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; sys.dim];
        sys.apply(&x, &mut y);
        for (a, b) in y.iter().zip(&sys.assembled().matvec(&x).unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
        sys.apply_transpose(&x, &mut y);
        let yt = sys.assembled().transpose().matvec(&x).unwrap();
        for (a, b) in y.iter().zip(&yt) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_scales_super_blocks_only() {
        let sys = CarlemanSystem::build(&ode(2), 3).unwrap();
        let g = sys.with_gamma(2.5).unwrap();
        let off = |j: usize| sys.offsets()[j];
        for (i, j, v) in sys.assembled().triplets() {
            let diag_block = (0..3).any(|k| (off(k)..off(k + 1)).contains(&i) && (off(k)..off(k + 1)).contains(&j));
            let expected = if diag_block { v } else { 2.5 * v };
            assert_eq!(g.assembled().get(i, j), expected);
        }
        let decoupled = sys.with_gamma(0.0).unwrap();
        assert_eq!(decoupled.assembled().nnz(), sys.diag_blocks.iter().map(|b| b.nnz()).sum::<usize>());
    }

    #[test]
    fn cubic_degree_block_pattern() {
        let o = ode(2);
        let fm = SparseMatrix::from_triplets(2, 8, vec![(0, 0, -1.0), (1, 7, -1.0)]).unwrap();
        let sys = build_general_degree(&o.f1, o.eigen.clone(), &fm, 3, 3, o.norm_f1, 1.0).unwrap();
        assert_eq!(sys.off_blocks.len(), 1);
        assert_eq!((sys.off_blocks[0].row, sys.off_blocks[0].col), (1, 3));
        assert_eq!(sys.off_blocks[0].matrix, fm);
        let quad = CarlemanSystem::build(&o, 3).unwrap();
        let via_general = build_general_degree(&o.f1, o.eigen.clone(), &o.f2, 2, 3, o.norm_f1, o.norm_f2).unwrap();
        assert_eq!(quad.assembled(), via_general.assembled());
    }

    #[test]
    fn mixed_degree_is_rejected() {
        let o = ode(2);
        let f3 = SparseMatrix::zeros(2, 8);
        let err = build_mixed_degree(&o.f1, o.eigen.clone(), &[(2, o.f2.clone()), (3, f3)], 3, o.norm_f1);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    #[test]
    fn linear_problem_is_block_diagonal() {
        let p = FisherKppProblem::new(0.2, 0.4, 0.0, 1.0, Profile::default()).unwrap();
        let o = discretize(&p, 3).unwrap();
        let sys = CarlemanSystem::build(&o, 3).unwrap();
        let y = sys.lift(&o.u_in);
        let ay = sys.assembled().matvec(&y).unwrap();
        assert_eq!(&ay[..3], &o.f1.matvec(&o.u_in).unwrap()[..]);
    }

    proptest! {
        #[test]
        fn super_block_acts_as_product_rule(u in prop::collection::vec(-1.0f64..1.0, 3)) {
            let o = ode(3);
            let a32 = build_super_block(&o.f2, 2).unwrap();
            let uuu = kron_vec(&kron_vec(&u, &u), &u);
            let lhs = a32.matvec(&uuu).unwrap();
            let f2uu = o.f2.matvec(&kron_vec(&u, &u)).unwrap();
            let rhs: Vec<f64> = kron_vec(&f2uu, &u)
                .iter()
                .zip(kron_vec(&u, &f2uu))
                .map(|(a, b)| a + b)
                .collect();
            for (a, b) in lhs.iter().zip(&rhs) {
                prop_assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
