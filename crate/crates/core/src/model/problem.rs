use std::fmt;

use super::{BlockForm, BlockGain, FormRole, InfoStructure};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, Matrix, SymMatrix};

/// Tolerance (relative to `1 + ‖·‖_F`) for definiteness checks at assembly.
pub const DEFINITENESS_TOLERANCE: f64 = 1e-9;

/// Closed-loop form `Φ(K) = [I; KC]ᵀ M [I; KC]`.
pub fn closed_loop_form(form: &BlockForm, gain: &BlockGain, c: &Matrix) -> Result<SymMatrix> {
    let k = gain.assemble();
    if c.cols() != form.n() {
        return Err(Error::shape("measurement map C columns", form.n(), c.cols()));
    }
    if k.cols() != c.rows() {
        return Err(Error::shape("gain columns vs C rows", c.rows(), k.cols()));
    }
    if k.rows() != form.m() {
        return Err(Error::shape("gain rows vs decision dimension", form.m(), k.rows()));
    }
    let f = k.matmul(c);
    Ok(closed_loop_dense(form, &f))
}

/// `Φ` for an already assembled closed-loop map `F = KC` (`m × n`).
pub(crate) fn closed_loop_dense(form: &BlockForm, f: &Matrix) -> SymMatrix {
    let sf = form.s.matmul(f);
    let mut phi = form.q.as_matrix().clone();
    phi.axpy(1.0, &sf);
    phi.axpy(1.0, &sf.transpose());
    phi.axpy(1.0, &f.tr_matmul(&form.r.as_matrix().matmul(f)));
    SymMatrix::symmetrize(phi)
}

/// Expected cost `E[(x, KCx)ᵀ M (x, KCx)] = Tr(Φ(K) X)` for `x ~ N(0, X)`.
pub fn expected_cost(form: &BlockForm, gain: &BlockGain, c: &Matrix, x: &SymMatrix) -> Result<f64> {
    let phi = closed_loop_form(form, gain, c)?;
    if x.dim() != phi.dim() {
        return Err(Error::shape("covariance", phi.dim(), x.dim()));
    }
    Ok(phi.as_matrix().dot(x.as_matrix()))
}

/// Expected-cost team problem with constraints `E[zᵀ M_j z] ≤ γ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticTeamProblem {
    pub objective: BlockForm,
    pub constraints: Vec<BlockForm>,
    pub bounds: Vec<f64>,
    pub covariance: SymMatrix,
    pub info: InfoStructure,
}

impl StochasticTeamProblem {
    pub fn new(
        objective: BlockForm,
        constraints: Vec<BlockForm>,
        bounds: Vec<f64>,
        covariance: SymMatrix,
        info: InfoStructure,
    ) -> Self {
        Self {
            objective: objective.with_role(FormRole::Objective),
            constraints: constraints
                .into_iter()
                .map(|f| f.with_role(FormRole::Constraint))
                .collect(),
            bounds,
            covariance,
            info,
        }
    }

    pub fn unconstrained(objective: BlockForm, covariance: SymMatrix, info: InfoStructure) -> Self {
        Self::new(objective, Vec::new(), Vec::new(), covariance, info)
    }

    pub fn n(&self) -> usize {
        self.info.n()
    }

    pub fn m(&self) -> usize {
        self.info.m()
    }

    pub fn c(&self) -> &Matrix {
        self.info.c()
    }

    /// `Tr(Φ_j(K) X)` for form `j` (0 is the objective).
    pub fn form_cost(&self, j: usize, gain: &BlockGain) -> Result<f64> {
        let form = if j == 0 { &self.objective } else { &self.constraints[j - 1] };
        expected_cost(form, gain, self.c(), &self.covariance)
    }

    /// Rewrites noisy measurements `y = C x + E v`, `v ~ N(0, V)`, as a
    /// noiseless problem on the augmented state `(x, v)` with covariance
    /// `diag(X, V)` and measurement map `[C, E]`.
    pub fn with_measurement_noise(&self, noise_cov: &SymMatrix, noise_map: &Matrix) -> Result<Self> {
        let n = self.n();
        let q = noise_cov.dim();
        if noise_map.shape() != (self.info.p(), q) {
            return Err(Error::shape(
                "noise map E",
                format!("{}x{}", self.info.p(), q),
                format!("{}x{}", noise_map.rows(), noise_map.cols()),
            ));
        }
        let lift = |form: &BlockForm| -> BlockForm {
            let mut qa = Matrix::zeros(n + q, n + q);
            qa.set_block(0, 0, form.q.as_matrix());
            let mut sa = Matrix::zeros(n + q, form.m());
            sa.set_block(0, 0, &form.s);
            BlockForm {
                q: SymMatrix::symmetrize(qa),
                s: sa,
                r: form.r.clone(),
                role: form.role,
            }
        };
        let mut cov = Matrix::zeros(n + q, n + q);
        cov.set_block(0, 0, self.covariance.as_matrix());
        cov.set_block(n, n, noise_cov.as_matrix());
        let mut c = Matrix::zeros(self.info.p(), n + q);
        c.set_block(0, 0, self.c());
        c.set_block(0, n, noise_map);
        Ok(Self {
            objective: lift(&self.objective),
            constraints: self.constraints.iter().map(lift).collect(),
            bounds: self.bounds.clone(),
            covariance: SymMatrix::symmetrize(cov),
            info: self.info.with_c(c)?,
        })
    }
}

/// What a deterministic problem asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeterministicMode {
    /// Find `K` with `sup_{‖x‖≤1} zᵀ M_j z ≤ 0` for every form.
    Feasibility,
    /// Minimize the worst-case value of form `objective`; the other forms are
    /// homogeneous constraints with bounds already folded in.
    GameValue { objective: usize },
}

/// Worst-case team problem over the closed unit ball `‖x‖ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicTeamProblem {
    pub forms: Vec<BlockForm>,
    pub info: InfoStructure,
    pub mode: DeterministicMode,
}

impl DeterministicTeamProblem {
    pub fn feasibility(forms: Vec<BlockForm>, info: InfoStructure) -> Self {
        Self {
            forms,
            info,
            mode: DeterministicMode::Feasibility,
        }
    }

    pub fn game_value(forms: Vec<BlockForm>, objective: usize, info: InfoStructure) -> Self {
        Self {
            forms,
            info,
            mode: DeterministicMode::GameValue { objective },
        }
    }
}

/// List of invariant violations; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidProblem(self.violations))
        }
    }

    fn push(&mut self, msg: impl Into<String>) {
        self.violations.push(msg.into());
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "- {v}")?;
        }
        Ok(())
    }
}

pub trait Validate {
    fn validate(&self) -> ValidationReport;
}

/// Checks every structural and definiteness invariant of a problem.
pub fn validate_problem<P: Validate + ?Sized>(problem: &P) -> ValidationReport {
    problem.validate()
}

fn scaled_tol(s: &SymMatrix) -> f64 {
    DEFINITENESS_TOLERANCE * (1.0 + s.frobenius_norm())
}

pub(crate) fn check_form(report: &mut ValidationReport, name: &str, form: &BlockForm, n: usize, m: usize) -> bool {
    let mut ok = true;
    if form.n() != n {
        report.push(format!("{name} Q has dimension {} but the state has {n}", form.n()));
        ok = false;
    }
    if form.m() != m {
        report.push(format!("{name} R has dimension {} but the decision has {m}", form.m()));
        ok = false;
    }
    if form.s.shape() != (form.n(), form.m()) {
        report.push(format!(
            "{name} S is {}x{}, expected {}x{}",
            form.s.rows(),
            form.s.cols(),
            form.n(),
            form.m()
        ));
        ok = false;
    }
    ok
}

fn check_r(report: &mut ValidationReport, name: &str, r: &SymMatrix, strict: bool) {
    if r.dim() == 0 {
        return;
    }
    match min_eigenvalue(r) {
        Ok(min) if strict && min <= scaled_tol(r) => {
            report.push(format!("{name} R not positive definite (min eigenvalue {min:e})"))
        }
        Ok(min) if !strict && min < -scaled_tol(r) => {
            report.push(format!("{name} R not positive semidefinite (min eigenvalue {min:e})"))
        }
        Ok(_) => {}
        Err(e) => report.push(format!("{name} R: {e}")),
    }
}

fn check_psd(report: &mut ValidationReport, what: &str, s: &SymMatrix) {
    if s.dim() == 0 {
        return;
    }
    match min_eigenvalue(s) {
        Ok(min) if min < -scaled_tol(s) => {
            report.push(format!("{what} not positive semidefinite (min eigenvalue {min:e})"))
        }
        Ok(_) => {}
        Err(e) => report.push(format!("{what}: {e}")),
    }
}

fn check_info(report: &mut ValidationReport, info: &InfoStructure) {
    let p: usize = info.players().iter().map(|pl| pl.p).sum();
    if info.c().rows() != p {
        report.push(format!("C has {} rows but players measure {p}", info.c().rows()));
    }
    if info.players().iter().all(|pl| pl.m == 0) {
        report.push("no player has a decision variable");
    }
}

impl Validate for StochasticTeamProblem {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        check_info(&mut report, &self.info);
        let (n, m) = (self.info.n(), self.info.m());
        if check_form(&mut report, "objective", &self.objective, n, m) {
            check_r(&mut report, "objective", &self.objective.r, true);
            check_psd(&mut report, "objective block matrix", &self.objective.full());
        }
        for (j, form) in self.constraints.iter().enumerate() {
            let name = format!("constraint {}", j + 1);
            if check_form(&mut report, &name, form, n, m) {
                check_r(&mut report, &name, &form.r, false);
            }
        }
        if self.bounds.len() != self.constraints.len() {
            report.push(format!(
                "{} bounds given for {} constraints",
                self.bounds.len(),
                self.constraints.len()
            ));
        }
        if let Some(j) = self.bounds.iter().position(|g| !g.is_finite()) {
            report.push(format!("bound {} is not finite", j + 1));
        }
        if self.covariance.dim() != n {
            report.push(format!("covariance has dimension {} but the state has {n}", self.covariance.dim()));
        } else {
            check_psd(&mut report, "covariance", &self.covariance);
        }
        report
    }
}

impl Validate for DeterministicTeamProblem {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        check_info(&mut report, &self.info);
        if self.forms.is_empty() {
            report.push("no quadratic forms given");
        }
        let (n, m) = (self.info.n(), self.info.m());
        let objective = match self.mode {
            DeterministicMode::GameValue { objective } => {
                if objective >= self.forms.len() {
                    report.push(format!("objective index {objective} out of range"));
                }
                Some(objective)
            }
            DeterministicMode::Feasibility => None,
        };
        for (j, form) in self.forms.iter().enumerate() {
            let name = if Some(j) == objective {
                "objective".to_string()
            } else {
                format!("form {j}")
            };
            if check_form(&mut report, &name, form, n, m) {
                check_r(&mut report, &name, &form.r, Some(j) == objective);
            }
        }
        report
    }
}
