use crate::error::Result;
use crate::linalg::{DenseMatrix, LinearOperator, Lu};

/// `B^{⊗p}` for a small square `B`, applied without forming it.
#[derive(Clone, Debug)]
pub struct KronPower {
    pub base: DenseMatrix,
    pub power: usize,
}

impl KronPower {
    pub fn new(base: DenseMatrix, power: usize) -> Self {
        assert!(base.is_square() && power >= 1);
        Self { base, power }
    }

    pub fn n(&self) -> usize {
        self.base.rows()
    }

    pub fn dim(&self) -> usize {
        self.n().pow(self.power as u32)
    }

    /// Applies `M` (or `Mᵀ`) along every tensor mode in turn.
    fn apply_modes(&self, transpose: bool, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        let dim = self.dim();
        y[..dim].copy_from_slice(&x[..dim]);
        let mut v = vec![0.0; n];
        for mode in 0..self.power {
            let stride = n.pow((self.power - 1 - mode) as u32);
            let outer = dim / (stride * n);
            for o in 0..outer {
                let base = o * stride * n;
                for s in 0..stride {
                    for (k, vk) in v.iter_mut().enumerate() {
                        *vk = y[base + k * stride + s];
                    }
                    for i in 0..n {
                        let mut acc = 0.0;
                        for (k, vk) in v.iter().enumerate() {
                            let b = if transpose { self.base[(k, i)] } else { self.base[(i, k)] };
                            acc += b * vk;
                        }
                        y[base + i * stride + s] = acc;
                    }
                }
            }
        }
    }

    /// Column `c` of `B^{⊗p}`: the Kronecker product of base columns given by the digits of `c`.
    pub fn column(&self, c: usize) -> Vec<f64> {
        let n = self.n();
        let mut digits = vec![0; self.power];
        let mut rest = c;
        for d in digits.iter_mut().rev() {
            *d = rest % n;
            rest /= n;
        }
        let mut out = self.base.column(digits[0]);
        for &d in &digits[1..] {
            out = crate::linalg::kron_vec(&out, &self.base.column(d));
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let d = self.dim();
        let mut m = DenseMatrix::zeros(d, d);
        for c in 0..d {
            m.set_column(c, &self.column(c));
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.base.frobenius_norm().powi(self.power as i32)
    }

    /// `ln|det B^{⊗p}| = p n^{p−1} ln|det B|`
    pub fn log_abs_det(&self) -> f64 {
        let (_, l) = Lu::factor(&self.base).expect("square base").log_abs_determinant();
        self.power as f64 * (self.n() as f64).powi(self.power as i32 - 1) * l
    }

    pub fn inverse(&self) -> Result<KronPower> {
        Ok(KronPower::new(Lu::factor(&self.base)?.inverse()?, self.power))
    }
}

impl LinearOperator for KronPower {
    fn nrows(&self) -> usize {
        self.dim()
    }

    fn ncols(&self) -> usize {
        self.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_modes(false, x, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.apply_modes(true, x, y);
    }
}

/// Block upper-triangular matrix whose diagonal blocks are Kronecker powers
/// and whose above-diagonal part is stored one block column at a time.
///
/// `fills[k]` holds rows `0..offsets[k]` of block column `k` (absent for `k = 0`).
#[derive(Clone, Debug)]
pub struct BlockUpperTriangular {
    pub offsets: Vec<usize>,
    pub diag: Vec<KronPower>,
    pub fills: Vec<Option<DenseMatrix>>,
}

impl BlockUpperTriangular {
    pub fn block_diagonal(diag: Vec<KronPower>) -> Self {
        let mut offsets = vec![0];
        for b in &diag {
            offsets.push(offsets.last().unwrap() + b.dim());
        }
        let fills = vec![None; diag.len()];
        Self {
            offsets,
            diag,
            fills,
        }
    }

    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// `y = V x` using only the leading `blocks` block rows/columns.
    pub fn apply_prefix(&self, blocks: usize, x: &[f64], y: &mut [f64]) {
        for k in 0..blocks {
            let r = self.offsets[k]..self.offsets[k + 1];
            self.diag[k].apply(&x[r.clone()], &mut y[r]);
        }
        for k in 1..blocks {
            if let Some(f) = &self.fills[k] {
                let xk = &x[self.offsets[k]..self.offsets[k + 1]];
                for i in 0..f.rows() {
                    y[i] += crate::linalg::dot(f.row(i), xk);
                }
            }
        }
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        let k = self.offsets.partition_point(|&o| o <= c) - 1;
        let local = c - self.offsets[k];
        let mut out = vec![0.0; self.dim()];
        if let Some(f) = &self.fills[k] {
            for i in 0..f.rows() {
                out[i] = f[(i, local)];
            }
        }
        let d = self.diag[k].column(local);
        out[self.offsets[k]..self.offsets[k + 1]].copy_from_slice(&d);
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let d = self.dim();
        let mut m = DenseMatrix::zeros(d, d);
        for c in 0..d {
            m.set_column(c, &self.column(c));
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        let diag: f64 = self.diag.iter().map(|b| b.frobenius_norm().powi(2)).sum();
        let fill: f64 = self
            .fills
            .iter()
            .flatten()
            .map(|f| f.frobenius_norm().powi(2))
            .sum();
        (diag + fill).sqrt()
    }

    /// Sum of the diagonal blocks' log-determinants.
    pub fn log_abs_det(&self) -> f64 {
        self.diag.iter().map(KronPower::log_abs_det).sum()
    }

    /// Inverse with the same structure, built block column by block column:
    /// `[[P, X], [0, Q]]⁻¹ = [[P⁻¹, −P⁻¹ X Q⁻¹], [0, Q⁻¹]]`.
    pub fn invert(&self) -> Result<BlockUpperTriangular> {
        let diag_inv = self
            .diag
            .iter()
            .map(KronPower::inverse)
            .collect::<Result<Vec<_>>>()?;
        let mut inv = BlockUpperTriangular::block_diagonal(diag_inv);
        for k in 1..self.blocks() {
            if let Some(x) = &self.fills[k] {
                let fill = inverse_fill(&inv, k, x, &inv.diag[k]);
                inv.fills[k] = Some(fill);
            }
        }
        Ok(inv)
    }
}

/// `−P⁻¹ X Q⁻¹` where `P⁻¹` is the leading `k` blocks of `inv` and `Q⁻¹ = q_inv`.
pub(crate) fn inverse_fill(
    inv: &BlockUpperTriangular,
    k: usize,
    x: &DenseMatrix,
    q_inv: &KronPower,
) -> DenseMatrix {
    let lead = inv.offsets[k];
    let size = q_inv.dim();
    // rows of X Q⁻¹: (Q⁻¹)ᵀ applied to each row of X
    let mut xq = DenseMatrix::zeros(lead, size);
    for i in 0..lead {
        q_inv.apply_transpose(x.row(i), xq.row_mut(i));
    }
    let mut out = DenseMatrix::zeros(lead, size);
    let mut col = vec![0.0; lead];
    let mut res = vec![0.0; lead];
    for c in 0..size {
        for i in 0..lead {
            col[i] = xq[(i, c)];
        }
        inv.apply_prefix(k, &col, &mut res);
        for i in 0..lead {
            out[(i, c)] = -res[i];
        }
    }
    out
}

impl LinearOperator for BlockUpperTriangular {
    fn nrows(&self) -> usize {
        self.dim()
    }

    fn ncols(&self) -> usize {
        self.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_prefix(self.blocks(), x, y);
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        for k in 0..self.blocks() {
            let r = self.offsets[k]..self.offsets[k + 1];
            self.diag[k].apply_transpose(&x[r.clone()], &mut y[r.clone()]);
            if let Some(f) = &self.fills[k] {
                let yk = &mut y[r];
                for i in 0..f.rows() {
                    if x[i] != 0.0 {
                        crate::linalg::axpy(x[i], f.row(i), yk);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, SparseMatrix};
    use proptest::prelude::*;

    fn base3() -> DenseMatrix {
        DenseMatrix::from_rows(&[&[1.0, 2.0, 0.5], &[-1.0, 0.3, 0.0], &[0.2, 0.1, 2.0]])
    }

    #[test]
    fn kron_power_matches_explicit_kron() {
        let b = SparseMatrix::from_dense(&base3());
        let explicit = kron(&kron(&b, &b).unwrap(), &b).unwrap().to_dense();
        let kp = KronPower::new(base3(), 3);
        assert_eq!(kp.to_dense().sub(&explicit).unwrap().max_abs(), 0.0);
        let x: Vec<f64> = (0..27).map(|i| (i as f64).cos()).collect();
        let mut y = vec![0.0; 27];
        kp.apply(&x, &mut y);
        let want = explicit.matvec(&x).unwrap();
        assert!(y.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
        kp.apply_transpose(&x, &mut y);
        let want = explicit.transpose().matvec(&x).unwrap();
        assert!(y.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn log_det_of_power() {
        let kp = KronPower::new(base3(), 2);
        let direct = Lu::factor(&kp.to_dense()).unwrap().log_abs_determinant().1;
        assert!((kp.log_abs_det() - direct).abs() < 1e-10);
    }

    fn sample() -> BlockUpperTriangular {
        let b = DenseMatrix::from_rows(&[&[2.0, 1.0], &[0.5, -1.0]]);
        let mut m = BlockUpperTriangular::block_diagonal(vec![
            KronPower::new(b.clone(), 1),
            KronPower::new(b.clone(), 2),
            KronPower::new(b, 3),
        ]);
        let fill = |r, c, s: f64| {
            let data = (0..r * c).map(|i| ((i as f64) * s).sin()).collect();
            DenseMatrix::from_row_major(r, c, data).unwrap()
        };
        m.fills[1] = Some(fill(2, 4, 0.7));
        m.fills[2] = Some(fill(6, 8, 1.3));
        m
    }

    #[test]
    fn block_inverse_matches_dense_inverse() {
        let m = sample();
        let inv = m.invert().unwrap();
        let dense_inv = Lu::factor(&m.to_dense()).unwrap().inverse().unwrap();
        let diff = inv.to_dense().sub(&dense_inv).unwrap().max_abs();
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn frobenius_and_transpose() {
        let m = sample();
        let d = m.to_dense();
        assert!((m.frobenius_norm() - d.frobenius_norm()).abs() < 1e-12);
        let x: Vec<f64> = (0..14).map(|i| i as f64 - 3.0).collect();
        let mut y = vec![0.0; 14];
        m.apply_transpose(&x, &mut y);
        let want = d.transpose().matvec(&x).unwrap();
        assert!(y.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn apply_matches_dense(x in prop::collection::vec(-1.0f64..1.0, 14)) {
            let m = sample();
            let mut y = vec![0.0; 14];
            m.apply(&x, &mut y);
            let want = m.to_dense().matvec(&x).unwrap();
            for (a, b) in y.iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
