//! PSD tests, Schur complements, square roots and SPD solves.

use super::{sym_eig, Matrix, SymMatrix};
use crate::error::{Error, Result};

/// Clamp window for [`sqrt_psd`]: eigenvalues in `[-tol, 0)` become zero.
pub const SQRT_PSD_TOLERANCE: f64 = 1e-10;

/// Relative threshold below which a pivot or eigenvalue counts as zero.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// Eigenvalues of an equilibrated singular system below this fraction of
/// the largest one are dropped from the pseudo-inverse.
pub const PSEUDO_INVERSE_CUTOFF: f64 = 1e-10;

/// True iff the smallest eigenvalue of `s` is at least `-tol`.
pub fn is_psd(s: &SymMatrix, tol: f64) -> Result<bool> {
    if s.dim() == 0 {
        return Ok(true);
    }
    Ok(sym_eig(s)?.min() >= -tol)
}

pub fn min_eigenvalue(s: &SymMatrix) -> Result<f64> {
    if s.dim() == 0 {
        return Ok(0.0);
    }
    Ok(sym_eig(s)?.min())
}

pub fn max_eigenvalue(s: &SymMatrix) -> Result<f64> {
    if s.dim() == 0 {
        return Ok(0.0);
    }
    Ok(sym_eig(s)?.max())
}

/// Returns `A − B D⁻¹ Bᵀ` for `M = [[A, B], [Bᵀ, D]]` split after row `split`.
pub fn schur_complement(m: &SymMatrix, split: usize) -> Result<SymMatrix> {
    let n = m.dim();
    if split > n {
        return Err(Error::shape("schur_complement split", format!("<= {n}"), split));
    }
    let k = n - split;
    let a = m.principal(0, split);
    if k == 0 {
        return Ok(a);
    }
    let b = m.as_matrix().block(0, split, split, k);
    let d = m.principal(split, k);
    let eig = sym_eig(&d)?;
    let scale = d.frobenius_norm();
    let min_abs = eig.values.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if !(min_abs > SINGULAR_TOLERANCE * scale) {
        return Err(Error::SingularBlock { min_abs_eig: min_abs });
    }
    let d_inv = eig.reconstruct_with(|l| 1.0 / l);
    let correction = SymMatrix::symmetrize(b.matmul(&d_inv.as_matrix().matmul(&b.transpose())));
    Ok(&a - &correction)
}

/// Symmetric PSD square root `H` with `H² = X`.
///
/// Eigenvalues in `[-1e-10·(1+‖X‖_F), 0)` are treated as rounding and
/// clamped to zero; anything more negative is an error. Positive eigenvalues
/// at the rounding level of the decomposition (`64·n·ε·|λ|_max`) are also
/// zeroed so that exact projectors map to themselves.
pub fn sqrt_psd(x: &SymMatrix) -> Result<SymMatrix> {
    if x.dim() == 0 {
        return Ok(SymMatrix::zeros(0));
    }
    let eig = sym_eig(x)?;
    let tol = SQRT_PSD_TOLERANCE * (1.0 + x.frobenius_norm());
    if eig.min() < -tol {
        return Err(Error::NotPsd {
            what: "covariance".into(),
            min_eig: eig.min(),
        });
    }
    let noise = 64.0 * x.dim() as f64 * f64::EPSILON * eig.max().abs().max(eig.min().abs());
    Ok(eig.reconstruct_with(|l| if l <= noise { 0.0 } else { l.sqrt() }))
}

/// Solves `A x = b` for symmetric positive definite `A`.
///
/// Fails with [`Error::NotPositiveDefinite`] carrying the smallest
/// eigenvalue when `A` is indefinite or its smallest eigenvalue is below
/// `1e-12·‖A‖_F`.
pub fn solve_spd(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::shape("solve_spd rhs", a.dim(), b.len()));
    }
    let chol = Cholesky::factor(a)?;
    Ok(chol.solve(b))
}

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self> {
        let n = a.dim();
        let scale = a.frobenius_norm();
        let floor = SINGULAR_TOLERANCE * scale;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) || (n > 0 && scale == 0.0) {
                return Err(Error::NotPositiveDefinite {
                    what: format!("{n}x{n} system matrix"),
                    min_eig: min_eigenvalue(a).unwrap_or(f64::NAN),
                });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Factorization of a PSD system used for repeated solves.
///
/// Tries a diagonally equilibrated Cholesky first; when the system is
/// numerically singular it falls back to an eigenvalue-thresholded
/// pseudo-inverse of the equilibrated system, which yields the
/// minimum-norm solution in equilibrated coordinates.
#[derive(Debug, Clone)]
pub enum PsdSolver {
    Cholesky { chol: Cholesky, scale: Vec<f64> },
    Pseudo {
        pinv: SymMatrix,
        scale: Vec<f64>,
        rank: usize,
    },
}

impl PsdSolver {
    pub fn new(a: &SymMatrix) -> Result<Self> {
        let n = a.dim();
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let d = a[(i, i)];
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let equilibrated = SymMatrix::symmetrize(Matrix::from_fn(n, n, |i, j| {
            a[(i, j)] * scale[i] * scale[j]
        }));
        match Cholesky::factor(&equilibrated) {
            Ok(chol) => Ok(PsdSolver::Cholesky { chol, scale }),
            Err(Error::NotPositiveDefinite { .. }) => {
                let eig = sym_eig(&equilibrated)?;
                let cutoff = PSEUDO_INVERSE_CUTOFF * eig.max().abs().max(f64::MIN_POSITIVE);
                let rank = eig.values.iter().filter(|&&v| v > cutoff).count();
                let pinv = eig.reconstruct_with(|l| if l > cutoff { 1.0 / l } else { 0.0 });
                Ok(PsdSolver::Pseudo { pinv, scale, rank })
            }
            Err(e) => Err(e),
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, PsdSolver::Pseudo { .. })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            PsdSolver::Cholesky { chol, scale } => {
                let scaled: Vec<f64> = b.iter().zip(scale).map(|(v, s)| v * s).collect();
                let y = chol.solve(&scaled);
                y.iter().zip(scale).map(|(v, s)| v * s).collect()
            }
            PsdSolver::Pseudo { pinv, scale, .. } => {
                let scaled: Vec<f64> = b.iter().zip(scale).map(|(v, s)| v * s).collect();
                let y = pinv.as_matrix().matvec(&scaled);
                y.iter().zip(scale).map(|(v, s)| v * s).collect()
            }
        }
    }
}
