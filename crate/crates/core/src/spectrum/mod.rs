//! Carleman eigenvalues, the no-resonance test, and the block-triangular
//! diagonalization `A = V Λ V⁻¹`.

mod diagonalize;
mod enumerate;
mod transform;

pub use diagonalize::{
    condition_numbers, eigen_residual, identity_residual, invert_v, iterative_diagonalize,
    iterative_diagonalize_with, pad_eigenvector, pad_eigenvector_spectral, shifted_scaled_residual,
    Diagonalization, DiagonalizeOptions, DENSE_ROUTE_LIMIT,
};
pub use enumerate::{
    block_eigenvalues, block_eigenvalues_with_cap, check_no_resonance, enumerate_eigenvalues,
    enumerate_eigenvalues_with_cap, extremal_eigenvalues, EigenEntry, EigenEnumeration, NearMiss,
    NoResonanceReport, DEFAULT_COUNT_CAP, DEFAULT_RESONANCE_TOLERANCE, NEAR_MISS_BAND,
};
pub use transform::{BlockUpperTriangular, KronPower};
