use crate::error::{precondition, Error, Result};
use crate::pde::{dissipativity_check, f1_spectrum};

/// Default cap on the number of enumerated eigenvalues (with multiplicity).
pub const DEFAULT_COUNT_CAP: usize = 1_000_000;
/// Default relative tolerance for declaring a resonance.
pub const DEFAULT_RESONANCE_TOLERANCE: f64 = 1e-9;
/// Gaps below this (relative) are reported as near misses even if they pass.
pub const NEAR_MISS_BAND: f64 = 1e-6;

/// Sum of `lambda[k]` over a sorted index multiset. Summing in sorted order
/// makes equal multisets produce bit-identical values.
fn multiset_value(lambda: &[f64], sorted: &[usize]) -> f64 {
    sorted.iter().map(|&k| lambda[k]).sum()
}

fn checked_count(n: usize, j: usize, cap: usize) -> Result<usize> {
    match n.checked_pow(j as u32) {
        Some(c) if c <= cap => Ok(c),
        other => Err(Error::CapacityExceeded {
            requested: other.unwrap_or(usize::MAX),
            limit: cap,
        }),
    }
}

/// Eigenvalues of the `j`-th diagonal Carleman block in Kronecker
/// lexicographic order: entry `r` with base-`n` digits `(k_1, …, k_j)` is
/// `λ_{k_1} + … + λ_{k_j}`, matching column `r` of `W^{⊗j}`.
pub fn block_eigenvalues(lambda: &[f64], j: usize) -> Result<Vec<f64>> {
    block_eigenvalues_with_cap(lambda, j, DEFAULT_COUNT_CAP)
}

pub fn block_eigenvalues_with_cap(lambda: &[f64], j: usize, cap: usize) -> Result<Vec<f64>> {
    if j == 0 {
        return Err(precondition("block index j must be at least 1"));
    }
    let n = lambda.len();
    let count = checked_count(n, j, cap)?;
    let mut digits = vec![0usize; j];
    let mut out = Vec::with_capacity(count);
    for r in 0..count {
        let mut rest = r;
        for slot in digits.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        let mut sorted = digits.clone();
        sorted.sort_unstable();
        out.push(multiset_value(lambda, &sorted));
    }
    Ok(out)
}

/// One distinct eigenvalue of the truncated Carleman matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenEntry {
    /// Sorted indices into `λ(F1)`; index `k` appearing `m_k` times.
    pub indices: Vec<usize>,
    pub value: f64,
    /// `j = Σ m_k`
    pub order: usize,
    /// Number of Kronecker positions carrying this multiset, `j! / Π m_k!`.
    pub multiplicity: u64,
}

impl EigenEntry {
    /// `m_k` as a dense vector of length `n`.
    pub fn multi_index(&self, n: usize) -> Vec<usize> {
        let mut m = vec![0; n];
        for &k in &self.indices {
            m[k] += 1;
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenEnumeration {
    pub entries: Vec<EigenEntry>,
    pub total: usize,
}

impl EigenEnumeration {
    /// Every eigenvalue repeated by multiplicity.
    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.total);
        for e in &self.entries {
            v.extend(std::iter::repeat(e.value).take(e.multiplicity as usize));
        }
        v
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.entries.iter().map(|e| e.value).fold(f64::INFINITY, f64::min)
    }
}

/// Calls `visit` with every sorted multiset of size `j` over `0..n`.
fn for_each_multiset(n: usize, j: usize, mut visit: impl FnMut(&[usize])) {
    if n == 0 {
        return;
    }
    let mut idx = vec![0usize; j];
    loop {
        visit(&idx);
        // next non-decreasing sequence
        let mut p = j;
        while p > 0 && idx[p - 1] == n - 1 {
            p -= 1;
        }
        if p == 0 {
            return;
        }
        idx[p - 1] += 1;
        let v = idx[p - 1];
        for slot in idx[p..].iter_mut() {
            *slot = v;
        }
    }
}

fn multiplicity(sorted: &[usize]) -> u64 {
    let mut result: u64 = 1;
    let mut placed: u64 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut run = 1;
        while i + run < sorted.len() && sorted[i + run] == sorted[i] {
            run += 1;
        }
        // multiply by C(placed + run, run), kept exact
        for r in 1..=run as u64 {
            result = result * (placed + r) / r;
        }
        placed += run as u64;
        i += run;
    }
    result
}

pub fn enumerate_eigenvalues(lambda: &[f64], order: usize) -> Result<EigenEnumeration> {
    enumerate_eigenvalues_with_cap(lambda, order, DEFAULT_COUNT_CAP)
}

pub fn enumerate_eigenvalues_with_cap(
    lambda: &[f64],
    order: usize,
    cap: usize,
) -> Result<EigenEnumeration> {
    let n = lambda.len();
    let total = crate::carleman::carleman_dimension_with_limit(n, order, cap)?;
    let mut entries = Vec::new();
    for j in 1..=order {
        for_each_multiset(n, j, |m| {
            entries.push(EigenEntry {
                indices: m.to_vec(),
                value: multiset_value(lambda, m),
                order: j,
                multiplicity: multiplicity(m),
            })
        });
    }
    Ok(EigenEnumeration { entries, total })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NearMiss {
    /// Index into `λ(F1)` (0-based).
    pub lambda_index: usize,
    pub lambda: f64,
    pub combination: Vec<usize>,
    pub value: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoResonanceReport {
    pub holds: bool,
    pub near_misses: Vec<NearMiss>,
    pub tolerance: f64,
    pub scale: f64,
    pub min_gap: f64,
}

/// Checks `λ_i ≠ Σ m_k λ_k` for all `2 ≤ Σ m_k ≤ N`, with a relative band
/// `tolerance · max|λ|`. Gaps below `1e-6 · max|λ|` are listed as near misses.
pub fn check_no_resonance(lambda: &[f64], order: usize, tolerance: f64) -> Result<NoResonanceReport> {
    if !(tolerance > 0.0) {
        return Err(precondition("resonance tolerance must be positive"));
    }
    let n = lambda.len();
    crate::carleman::carleman_dimension_with_limit(n, order, DEFAULT_COUNT_CAP)?;
    let scale = lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let limit = tolerance * scale;
    let band = (NEAR_MISS_BAND * scale).max(limit);
    let mut sorted: Vec<(f64, usize)> = lambda.iter().cloned().zip(0..).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut min_gap = f64::INFINITY;
    let mut near_misses = Vec::new();
    for j in 2..=order {
        for_each_multiset(n, j, |m| {
            let value = multiset_value(lambda, m);
            // only neighbours in sorted order can be closest, but the band may hold several
            let pos = sorted.partition_point(|p| p.0 < value);
            let mut lo = pos;
            while lo > 0 && value - sorted[lo - 1].0 <= band {
                lo -= 1;
            }
            let mut hi = pos;
            while hi < n && sorted[hi].0 - value <= band {
                hi += 1;
            }
            for &(lam, i) in &sorted[lo..hi] {
                near_misses.push(NearMiss {
                    lambda_index: i,
                    lambda: lam,
                    combination: m.to_vec(),
                    value,
                    gap: (lam - value).abs(),
                });
            }
            let nearest = [pos.checked_sub(1), (pos < n).then_some(pos)]
                .into_iter()
                .flatten()
                .map(|k| (sorted[k].0 - value).abs())
                .fold(f64::INFINITY, f64::min);
            min_gap = min_gap.min(nearest);
        });
    }
    let holds = near_misses.iter().all(|m| m.gap > limit);
    Ok(NoResonanceReport {
        holds,
        near_misses,
        tolerance,
        scale,
        min_gap,
    })
}

/// `(λ_max, λ_min)` of the truncated Carleman matrix of a dissipative system:
/// `λ_max = λ_1(F1)` and `λ_min = N·λ_n(F1)`.
pub fn extremal_eigenvalues(n: usize, order: usize, diffusion: f64, linear: f64) -> Result<(f64, f64)> {
    if !dissipativity_check(n, diffusion, linear).holds {
        return Err(precondition("extremal eigenvalue formulas need a dissipative F1"));
    }
    if order == 0 || n == 0 {
        return Err(precondition("n and N must be at least 1"));
    }
    let s = f1_spectrum(n, diffusion, linear);
    Ok((s[0], order as f64 * s[n - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn block_eigenvalue_examples() {
        let lam = [-1.0, -2.5];
        assert_eq!(block_eigenvalues(&lam, 1).unwrap(), lam.to_vec());
        assert_eq!(block_eigenvalues(&lam, 2).unwrap(), vec![-2.0, -3.5, -3.5, -5.0]);
        assert!(block_eigenvalues(&lam, 0).is_err());
        assert!(block_eigenvalues_with_cap(&[1.0; 10], 7, 1_000_000).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let lam = [-1.0, -2.0];
        let e = enumerate_eigenvalues(&lam, 1).unwrap();
        assert_eq!(e.values(), lam.to_vec());
        let e = enumerate_eigenvalues(&lam, 2).unwrap();
        let mut v = e.values();
        v.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(v, vec![-1.0, -2.0, -2.0, -3.0, -3.0, -4.0]);
        assert_eq!(e.total, 6);
    }

    #[test]
    fn enumeration_count_matches_dimension() {
        let lam = f1_spectrum(4, 0.2, 0.4);
        let e = enumerate_eigenvalues(&lam, 4).unwrap();
        let count: u64 = e.entries.iter().map(|x| x.multiplicity).sum();
        assert_eq!(count as usize, 4 + 16 + 64 + 256);
        assert_eq!(e.total, 340);
        // multiset view agrees with the Kronecker-ordered block lists
        for j in 1..=4 {
            let mut a = block_eigenvalues(&lam, j).unwrap();
            let mut b: Vec<f64> = e
                .entries
                .iter()
                .filter(|x| x.order == j)
                .flat_map(|x| std::iter::repeat(x.value).take(x.multiplicity as usize))
                .collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn multi_index_round_trip() {
        let e = EigenEntry {
            indices: vec![0, 0, 2],
            value: 0.0,
            order: 3,
            multiplicity: multiplicity(&[0, 0, 2]),
        };
        assert_eq!(e.multi_index(3), vec![2, 0, 1]);
        assert_eq!(e.multiplicity, 3);
        assert_eq!(multiplicity(&[0, 1, 2]), 6);
        assert_eq!(multiplicity(&[1, 1, 1]), 1);
    }

    #[test]
    fn desk_rows_have_no_resonance() {
        for (n, order) in [(8, 3), (4, 5)] {
            let r = check_no_resonance(&f1_spectrum(n, 0.2, 0.4), order, DEFAULT_RESONANCE_TOLERANCE).unwrap();
            assert!(r.holds, "n={n} N={order}");
            assert!(r.min_gap > 1e-9 * r.scale);
        }
    }

    #[test]
    fn forced_collision_is_detected() {
        let r = check_no_resonance(&[-1.0, -2.0], 2, DEFAULT_RESONANCE_TOLERANCE).unwrap();
        assert!(!r.holds);
        assert_eq!(r.min_gap, 0.0);
        let hit = &r.near_misses[0];
        assert_eq!((hit.lambda_index, hit.combination.clone()), (1, vec![0, 0]));
        // D = 1, a = 0, n = 2: λ = {−9, −27} and 3·(−9) = −27
        let lam = f1_spectrum(2, 1.0, 0.0);
        assert!(check_no_resonance(&lam, 2, DEFAULT_RESONANCE_TOLERANCE).unwrap().holds);
        assert!(!check_no_resonance(&lam, 3, DEFAULT_RESONANCE_TOLERANCE).unwrap().holds);
        assert!(check_no_resonance(&lam, 3, 0.0).is_err());
    }

    #[test]
    fn extremal_examples() {
        let (mx, mn) = extremal_eigenvalues(8, 1, 0.2, 0.4).unwrap();
        let s = f1_spectrum(8, 0.2, 0.4);
        assert_eq!((mx, mn), (s[0], s[7]));
        let (mx, mn) = extremal_eigenvalues(8, 3, 0.2, 0.4).unwrap();
        let e = enumerate_eigenvalues(&s, 3).unwrap();
        assert_eq!(mx, e.max());
        assert!((mn - e.min()).abs() < 1e-12 * mn.abs());
        assert!(extremal_eigenvalues(8, 3, 0.0, 0.4).is_err());
    }

    proptest! {
        #[test]
        fn shift_moves_block_j_by_j_delta(delta in -0.5f64..0.5, j in 1usize..4) {
            let base = f1_spectrum(3, 0.2, 0.4);
            let shifted = f1_spectrum(3, 0.2, 0.4 + delta);
            let a = block_eigenvalues(&base, j).unwrap();
            let b = block_eigenvalues(&shifted, j).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((y - x - j as f64 * delta).abs() < 1e-12 * x.abs().max(1.0));
            }
        }
    }
}
