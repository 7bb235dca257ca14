use super::{DenseMatrix, LinearOperator};
use crate::error::{precondition, Error, Result};

/// Largest row or column count a Kronecker product may produce unless the
/// caller asks for more.
pub const DEFAULT_MAX_DIMENSION: usize = 100_000;

/// Sparse matrix in canonical compressed-row form.
///
/// Canonical means: column indices strictly increasing within each row, no
/// explicit zeros, all values finite. Iterating [`SparseMatrix::triplets`]
/// therefore yields the sorted, duplicate-free triplet list.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        row_ptr.push(0);
        for (i, &d) in diag.iter().enumerate() {
            if d != 0.0 {
                col_idx.push(i);
                values.push(d);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: n,
            cols: n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Canonicalizes a triplet list: sorts, sums duplicates and drops zeros.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for &(i, j, v) in &triplets {
            if i >= rows || j >= cols {
                return Err(precondition(format!(
                    "triplet ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(precondition("sparse values must be finite"));
            }
        }
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_of = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_of.push(i);
                last = Some((i, j));
            }
        }
        // Drop entries that cancelled to zero.
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((j, v), i) in col_idx.into_iter().zip(values).zip(row_of) {
            if v != 0.0 {
                keep_cols.push(j);
                keep_vals.push(v);
                row_ptr[i + 1] += 1;
            }
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        })
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), triplets).expect("dense entries are finite")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    pub fn max_row_nnz(&self) -> usize {
        (0..self.rows)
            .map(|i| self.row_ptr[i + 1] - self.row_ptr[i])
            .max()
            .unwrap_or(0)
    }

    pub fn max_col_nnz(&self) -> usize {
        let mut counts = vec![0usize; self.cols];
        for &j in &self.col_idx {
            counts[j] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.rows];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// `y += alpha * self * x` without bounds re-checking; callers guarantee sizes.
    pub fn matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.rows) {
            let (c, v) = self.row(i);
            let s: f64 = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
            *yi += alpha * s;
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        SparseMatrix::from_triplets(self.cols, self.rows, triplets).expect("valid transpose")
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        if alpha == 0.0 {
            return SparseMatrix::zeros(self.rows, self.cols);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        let triplets = self.triplets().chain(other.triplets()).collect();
        SparseMatrix::from_triplets(self.rows, self.cols, triplets)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        super::norm2(&self.values)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.triplets().all(|(i, j, v)| self.get(j, i) == v)
    }

    /// Rows `row_range` and columns `col_range` as a new matrix.
    pub fn submatrix(
        &self,
        row_range: std::ops::Range<usize>,
        col_range: std::ops::Range<usize>,
    ) -> SparseMatrix {
        let mut triplets = Vec::new();
        for i in row_range.clone() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if col_range.contains(&j) {
                    triplets.push((i - row_range.start, j - col_range.start, x));
                }
            }
        }
        SparseMatrix::from_triplets(row_range.len(), col_range.len(), triplets)
            .expect("submatrix of a canonical matrix is canonical")
    }
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        self.matvec_add(1.0, x, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate().take(self.rows) {
            if xi == 0.0 {
                continue;
            }
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                y[j] += a * xi;
            }
        }
    }
}

/// Kronecker product with the default dimension cap.
pub fn kron(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    kron_with_limit(a, b, DEFAULT_MAX_DIMENSION)
}

/// Kronecker product; entry `(ia·b.rows + ib, ja·b.cols + jb)` is `a[ia,ja]·b[ib,jb]`.
///
/// Fails with [`Error::CapacityExceeded`] if either result dimension exceeds
/// `max_dimension`.
pub fn kron_with_limit(
    a: &SparseMatrix,
    b: &SparseMatrix,
    max_dimension: usize,
) -> Result<SparseMatrix> {
    let rows = checked_dim(a.rows, b.rows, max_dimension)?;
    let cols = checked_dim(a.cols, b.cols, max_dimension)?;

    let mut row_ptr = Vec::with_capacity(rows + 1);
    let mut col_idx = Vec::with_capacity(a.nnz() * b.nnz());
    let mut values = Vec::with_capacity(a.nnz() * b.nnz());
    row_ptr.push(0);
    for ia in 0..a.rows {
        let (ac, av) = a.row(ia);
        for ib in 0..b.rows {
            let (bc, bv) = b.row(ib);
            for (&ja, &x) in ac.iter().zip(av) {
                for (&jb, &y) in bc.iter().zip(bv) {
                    let v = x * y;
                    if v != 0.0 {
                        col_idx.push(ja * b.cols + jb);
                        values.push(v);
                    }
                }
            }
            row_ptr.push(col_idx.len());
        }
    }
    Ok(SparseMatrix {
        rows,
        cols,
        row_ptr,
        col_idx,
        values,
    })
}

fn checked_dim(a: usize, b: usize, limit: usize) -> Result<usize> {
    match a.checked_mul(b) {
        Some(d) if d <= limit => Ok(d),
        Some(d) => Err(Error::CapacityExceeded {
            requested: d,
            limit,
        }),
        None => Err(Error::CapacityExceeded {
            requested: usize::MAX,
            limit,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron_vec;
    use proptest::prelude::*;

    fn small_sparse(rows: usize, cols: usize, seed: &[f64]) -> SparseMatrix {
        let triplets = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .zip(seed.iter().cycle())
            .filter(|(_, &v)| v.abs() > 0.3)
            .map(|((i, j), &v)| (i, j, v))
            .collect();
        SparseMatrix::from_triplets(rows, cols, triplets).unwrap()
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = SparseMatrix::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), SparseMatrix::identity(4));
    }

    #[test]
    fn kron_with_unit_factor_is_unchanged() {
        let nil = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0)]).unwrap();
        assert_eq!(kron(&nil, &SparseMatrix::identity(1)).unwrap(), nil);
    }

    #[test]
    fn kron_of_scalars_multiplies() {
        let a = SparseMatrix::from_diagonal(&[2.0]);
        let b = SparseMatrix::from_diagonal(&[3.0]);
        assert_eq!(kron(&a, &b).unwrap().get(0, 0), 6.0);
    }

    #[test]
    fn kron_respects_dimension_cap() {
        let a = SparseMatrix::identity(400);
        let err = kron_with_limit(&a, &a, 100_000).unwrap_err();
        assert!(matches!(err, Error::CapacityExceeded { requested: 160_000, .. }));
    }

    #[test]
    fn matvec_examples() {
        assert_eq!(
            SparseMatrix::identity(3).matvec(&[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            SparseMatrix::zeros(2, 2).matvec(&[5.0, -1.0]).unwrap(),
            vec![0.0, 0.0]
        );
        let m = SparseMatrix::from_dense(&DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]));
        assert_eq!(m.matvec(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert!(m.matvec(&[1.0]).is_err());
    }

    #[test]
    fn canonicalization_merges_and_drops() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            vec![(1, 1, 2.0), (0, 0, 1.0), (1, 1, -2.0), (0, 0, 1.0)],
        )
        .unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 2.0);
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn kron_is_associative(
            sa in prop::collection::vec(-1.0f64..1.0, 6),
            sb in prop::collection::vec(-1.0f64..1.0, 4),
            sc in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            let a = small_sparse(2, 3, &sa);
            let b = small_sparse(2, 2, &sb);
            let c = small_sparse(3, 2, &sc);
            let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
            let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(left.rows(), right.rows());
            for (i, j, v) in left.triplets() {
                prop_assert!((right.get(i, j) - v).abs() <= 1e-15);
            }
            prop_assert_eq!(left.nnz(), right.nnz());
        }

        #[test]
        fn kron_mixed_product(
            sa in prop::collection::vec(-1.0f64..1.0, 6),
            sb in prop::collection::vec(-1.0f64..1.0, 4),
            u in prop::collection::vec(-2.0f64..2.0, 3),
            v in prop::collection::vec(-2.0f64..2.0, 2),
        ) {
            let a = small_sparse(2, 3, &sa);
            let b = small_sparse(2, 2, &sb);
            let lhs = kron(&a, &b).unwrap().matvec(&kron_vec(&u, &v)).unwrap();
            let rhs = kron_vec(&a.matvec(&u).unwrap(), &b.matvec(&v).unwrap());
            for (x, y) in lhs.iter().zip(&rhs) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
