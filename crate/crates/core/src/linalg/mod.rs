//! Dense symmetric linear algebra used by every solver.
//!
//! All routines are pure functions on value types and safe to call from any
//! number of threads.

mod decomp;
mod eigen;
mod matrix;

pub use decomp::{
    is_psd, max_eigenvalue, min_eigenvalue, schur_complement, solve_spd, sqrt_psd, Cholesky,
    PsdSolver, PSEUDO_INVERSE_CUTOFF, SINGULAR_TOLERANCE, SQRT_PSD_TOLERANCE,
};
pub use eigen::{sym_eig, SymEigen, MAX_SWEEPS, OFF_DIAGONAL_TOLERANCE};
pub use matrix::{Matrix, SymMatrix, ASYMMETRY_TOLERANCE};
