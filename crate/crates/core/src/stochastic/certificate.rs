use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, sqrt_psd, Matrix, SymMatrix};
use crate::model::{closed_loop_form, BlockGain, StochasticTeamProblem};

pub const CERTIFICATE_TOLERANCE: f64 = 1e-7;

/// Per-constraint part of an [`LmiCertificate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCertificate {
    /// Slack matrix `P_j = H Φ_j(K) H`.
    pub p: SymMatrix,
    /// `[[P_j − H(Q_j + S_jF + FᵀS_jᵀ)H, HFᵀR_j], [R_jFH, R_j + εI]]`
    /// with `F = KC`.
    pub lmi: SymMatrix,
    pub min_eig: f64,
    pub trace: f64,
    pub bound: f64,
    /// `ε` added to the lower-right block; zero when `R_j` is definite.
    pub regularization: f64,
}

impl ConstraintCertificate {
    pub fn is_valid(&self) -> bool {
        self.min_eig >= -CERTIFICATE_TOLERANCE
            && self.trace <= self.bound + CERTIFICATE_TOLERANCE * (1.0 + self.bound.abs())
    }
}

/// Semidefinite certificate that a gain meets every expected-cost
/// constraint, with `H = X^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiCertificate {
    pub constraints: Vec<ConstraintCertificate>,
}

impl LmiCertificate {
    pub fn is_valid(&self) -> bool {
        self.constraints.iter().all(ConstraintCertificate::is_valid)
    }

    /// Indices of constraints whose certificate fails.
    pub fn violated(&self) -> Vec<usize> {
        (0..self.constraints.len())
            .filter(|&j| !self.constraints[j].is_valid())
            .collect()
    }
}

/// Builds the certificate, regularizing singular `R_j` by
/// `ε = 1e-10·(1 + ‖R_j‖_F)` in the lower-right block.
pub fn build_lmi_certificate(problem: &StochasticTeamProblem, gain: &BlockGain) -> Result<LmiCertificate> {
    build(problem, gain, false)
}

/// Like [`build_lmi_certificate`] but refuses singular `R_j`.
pub fn build_lmi_certificate_strict(problem: &StochasticTeamProblem, gain: &BlockGain) -> Result<LmiCertificate> {
    build(problem, gain, true)
}

fn build(problem: &StochasticTeamProblem, gain: &BlockGain, strict: bool) -> Result<LmiCertificate> {
    gain.matches(&problem.info)?;
    let h = sqrt_psd(&problem.covariance)?;
    let f = gain.assemble().matmul(problem.c());
    let (n, m) = (problem.n(), problem.m());
    let mut constraints = Vec::with_capacity(problem.constraints.len());
    for (j, (form, &bound)) in problem.constraints.iter().zip(&problem.bounds).enumerate() {
        let r_norm = form.r.frobenius_norm();
        let r_min = if m == 0 { 1.0 } else { min_eigenvalue(&form.r)? };
        let singular = r_min <= 1e-12 * (1.0 + r_norm);
        if singular && strict {
            return Err(Error::NotPositiveDefinite {
                what: format!("R of constraint {} (use the regularized certificate)", j + 1),
                min_eig: r_min,
            });
        }
        let eps = if singular { 1e-10 * (1.0 + r_norm) } else { 0.0 };

        let phi = closed_loop_form(form, gain, problem.c())?;
        let p = phi.congruence(h.as_matrix());
        let sf = form.s.matmul(&f);
        let mut affine = form.q.as_matrix().clone();
        affine.axpy(1.0, &sf);
        affine.axpy(1.0, &sf.transpose());
        let upper = p.as_matrix() - &h.as_matrix().matmul(&affine).matmul(h.as_matrix());
        let lower = form.r.as_matrix().matmul(&f).matmul(h.as_matrix());

        let mut lmi = Matrix::zeros(n + m, n + m);
        lmi.set_block(0, 0, &upper);
        lmi.set_block(n, 0, &lower);
        lmi.set_block(0, n, &lower.transpose());
        lmi.set_block(n, n, form.r.shifted(eps).as_matrix());
        let lmi = SymMatrix::symmetrize(lmi);
        let min_eig = min_eigenvalue(&lmi)?;
        constraints.push(ConstraintCertificate {
            trace: p.trace(),
            p,
            lmi,
            min_eig,
            bound,
            regularization: eps,
        });
    }
    Ok(LmiCertificate { constraints })
}
