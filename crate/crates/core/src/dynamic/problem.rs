use super::DelayPattern;
use crate::linalg::{min_eigenvalue, Matrix, SymMatrix};
use crate::model::{BlockForm, Validate, ValidationReport, DEFINITENESS_TOLERANCE};

/// Finite-horizon team problem on `x(k+1) = A x(k) + B u(k) + w(k)`.
///
/// Node `i` measures `y_i(k) = C_i x(k)` and decides `u_i(k)`, the
/// `input_dims[i]` columns of `B` belonging to it. The cost is
/// `E[x(T)ᵀ Q_f x(T) + Σ_{k<T} (x(k), u(k))ᵀ M (x(k), u(k))]`; constraint `j`
/// bounds the same stage sum for `M_j` (without a terminal term) by `γ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicTeamProblem {
    pub a: Matrix,
    pub b: Matrix,
    pub input_dims: Vec<usize>,
    pub c_list: Vec<Matrix>,
    pub stage: BlockForm,
    pub terminal: SymMatrix,
    pub constraints: Vec<BlockForm>,
    pub bounds: Vec<f64>,
    pub horizon: usize,
    pub delays: DelayPattern,
    pub init_cov: SymMatrix,
    pub noise_cov: SymMatrix,
    /// Decide which `C_l Aⁿ B` blocks vanish from the sparsity patterns of
    /// `A`, `B`, `C` rather than from their numerical values.
    pub structural: bool,
}

impl DynamicTeamProblem {
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.input_dims.iter().sum()
    }

    pub fn nodes(&self) -> usize {
        self.input_dims.len()
    }

    pub fn input_offset(&self, i: usize) -> usize {
        self.input_dims[..i].iter().sum()
    }

    /// `A⁰, A¹, …, A^T`.
    pub(crate) fn powers(&self) -> Vec<Matrix> {
        let mut out = vec![Matrix::identity(self.n())];
        for _ in 0..self.horizon {
            let next = self.a.matmul(out.last().unwrap());
            out.push(next);
        }
        out
    }
}

fn check_psd(report: &mut ValidationReport, what: &str, s: &SymMatrix, strict: bool) {
    if s.dim() == 0 {
        return;
    }
    let tol = DEFINITENESS_TOLERANCE * (1.0 + s.frobenius_norm());
    match min_eigenvalue(s) {
        Ok(min) if strict && min <= tol => report
            .violations
            .push(format!("{what} not positive definite (min eigenvalue {min:e})")),
        Ok(min) if min < -tol => report
            .violations
            .push(format!("{what} not positive semidefinite (min eigenvalue {min:e})")),
        Ok(_) => {}
        Err(e) => report.violations.push(format!("{what}: {e}")),
    }
}

impl Validate for DynamicTeamProblem {
    fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        let v = &mut r.violations;
        let n = self.n();
        let m = self.m();
        if !self.a.is_square() {
            v.push(format!("A is {}x{}, expected square", self.a.rows(), self.a.cols()));
        }
        if self.b.shape() != (n, m) {
            v.push(format!("B is {}x{}, expected {n}x{m}", self.b.rows(), self.b.cols()));
        }
        if self.input_dims.is_empty() {
            v.push("no nodes given".into());
        }
        if self.c_list.len() != self.nodes() {
            v.push(format!("{} measurement maps for {} nodes", self.c_list.len(), self.nodes()));
        }
        for (i, c) in self.c_list.iter().enumerate() {
            if c.cols() != n {
                v.push(format!("C[{i}] has {} columns, expected {n}", c.cols()));
            }
        }
        if self.delays.nodes() != self.nodes() {
            v.push(format!("delay matrix is {0}x{0} for {1} nodes", self.delays.nodes(), self.nodes()));
        }
        if self.horizon == 0 {
            v.push("horizon must be at least 1".into());
        }
        if self.bounds.len() != self.constraints.len() {
            v.push(format!("{} bounds for {} constraints", self.bounds.len(), self.constraints.len()));
        }
        let mut shapes_ok = true;
        for (name, form) in std::iter::once(("stage", &self.stage))
            .chain(self.constraints.iter().map(|f| ("constraint", f)))
        {
            if form.n() != n || form.m() != m {
                v.push(format!("{name} form is ({}, {}), expected ({n}, {m})", form.n(), form.m()));
                shapes_ok = false;
            }
        }
        for (what, s) in [("terminal", &self.terminal), ("initial covariance", &self.init_cov), ("noise covariance", &self.noise_cov)] {
            if s.dim() != n {
                v.push(format!("{what} has dimension {}, expected {n}", s.dim()));
                shapes_ok = false;
            }
        }
        if shapes_ok {
            check_psd(&mut r, "stage R", &self.stage.r, true);
            check_psd(&mut r, "stage block matrix", &self.stage.full(), false);
            check_psd(&mut r, "terminal Q_f", &self.terminal, false);
            for (j, f) in self.constraints.iter().enumerate() {
                check_psd(&mut r, &format!("constraint {} R", j + 1), &f.r, false);
            }
            check_psd(&mut r, "initial covariance", &self.init_cov, false);
            check_psd(&mut r, "noise covariance", &self.noise_cov, false);
        }
        r
    }
}
