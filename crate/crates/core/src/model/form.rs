use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};

/// Definiteness class a form must satisfy when a problem is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormRole {
    /// Decision block must be positive definite.
    Objective,
    /// Decision block must be positive semidefinite.
    #[default]
    Constraint,
}

/// Quadratic form on `(x, u)` partitioned as `[[Q, S], [Sᵀ, R]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockForm {
    pub q: SymMatrix,
    pub s: Matrix,
    pub r: SymMatrix,
    pub role: FormRole,
}

impl BlockForm {
    pub fn new(q: SymMatrix, s: Matrix, r: SymMatrix) -> Result<Self> {
        if s.rows() != q.dim() || s.cols() != r.dim() {
            return Err(Error::shape(
                "block form S",
                format!("{}x{}", q.dim(), r.dim()),
                format!("{}x{}", s.rows(), s.cols()),
            ));
        }
        Ok(Self {
            q,
            s,
            r,
            role: FormRole::Constraint,
        })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            q: SymMatrix::zeros(n),
            s: Matrix::zeros(n, m),
            r: SymMatrix::zeros(m),
            role: FormRole::Constraint,
        }
    }

    pub fn with_role(mut self, role: FormRole) -> Self {
        self.role = role;
        self
    }

    /// Splits a full `(n+m)×(n+m)` symmetric matrix into its blocks.
    pub fn from_full(full: &SymMatrix, n: usize) -> Result<Self> {
        if n > full.dim() {
            return Err(Error::shape("block form split", format!("<= {}", full.dim()), n));
        }
        let m = full.dim() - n;
        Self::new(
            full.principal(0, n),
            full.as_matrix().block(0, n, n, m),
            full.principal(n, m),
        )
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.q.dim()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.r.dim()
    }

    /// The assembled symmetric matrix `[[Q, S], [Sᵀ, R]]`.
    pub fn full(&self) -> SymMatrix {
        let (n, m) = (self.n(), self.m());
        let mut out = Matrix::zeros(n + m, n + m);
        out.set_block(0, 0, self.q.as_matrix());
        out.set_block(0, n, &self.s);
        out.set_block(n, 0, &self.s.transpose());
        out.set_block(n, n, self.r.as_matrix());
        SymMatrix::symmetrize(out)
    }

    /// Evaluates `(x, u)ᵀ M (x, u)`.
    pub fn eval(&self, x: &[f64], u: &[f64]) -> f64 {
        let sx = self.s.tr_matvec(x);
        self.q.quad(x) + 2.0 * sx.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() + self.r.quad(u)
    }

    /// `self + w·other`, keeping the role of `self`.
    pub fn add_scaled(&self, w: f64, other: &BlockForm) -> BlockForm {
        let mut out = self.clone();
        out.q.axpy(w, &other.q);
        out.s.axpy(w, &other.s);
        out.r.axpy(w, &other.r);
        out
    }

    /// Replaces `Q` by `Q − γ I`, folding a worst-case bound into the form.
    pub fn fold_bound(&self, gamma: f64) -> BlockForm {
        let mut out = self.clone();
        out.q = out.q.shifted(-gamma);
        out
    }
}
