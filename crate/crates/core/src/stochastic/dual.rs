use super::reduced::{dot, ReducedQuadratic};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix, PsdSolver, SymMatrix};
use crate::model::{validate_problem, BlockGain, StochasticTeamProblem};

/// Multipliers whose sum exceeds this are treated as diverging.
pub const LAMBDA_CAP: f64 = 1e10;

const ARMIJO: f64 = 1e-4;
const STALL_WINDOW: usize = 500;

/// Outer method over the constraint multipliers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DualMethod {
    /// Projected Newton ascent with an Armijo line search along the
    /// projection arc.
    #[default]
    Newton,
    /// Projected supergradient ascent with step `a / (b + k)`.
    Supergradient { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub method: DualMethod,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            seed: 0,
            method: DualMethod::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    /// The dual grows without bound along `ray` (unit 1-norm) at rate
    /// `growth` per unit of multiplier.
    Infeasible { ray: Vec<f64>, growth: f64 },
    UnboundedDetected,
}

impl SolveStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::Infeasible { .. } => "infeasible",
            SolveStatus::UnboundedDetected => "unbounded-detected",
        }
    }
}

/// The multipliers rescaled onto the simplex `λ_0 + Σλ_j = 1`, together
/// with the correspondingly scaled value `p_0 = λ_0 p⋆`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDual {
    pub lambda0: f64,
    pub lambda: Vec<f64>,
    pub value: f64,
}

impl NormalizedDual {
    fn from_unnormalized(lambda: &[f64], value: f64) -> Self {
        let lambda0 = 1.0 / (1.0 + lambda.iter().sum::<f64>());
        Self {
            lambda0,
            lambda: lambda.iter().map(|l| l * lambda0).collect(),
            value: value * lambda0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub k_star: BlockGain,
    pub lambda_star: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    /// `E[zᵀ M_j z]` at `k_star`, one per constraint.
    pub constraint_values: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub normalized: NormalizedDual,
    /// Some inner solve fell back to a minimum-norm solution.
    pub rank_deficient: bool,
}

impl SolveReport {
    pub fn relative_gap(&self) -> f64 {
        self.gap.abs() / (1.0 + self.primal_value.abs())
    }
}

/// Value of the dual function and the inner minimizer at one `λ`.
#[derive(Debug, Clone)]
pub struct DualEvaluation {
    pub value: f64,
    pub gain: BlockGain,
    /// `E[zᵀ M_j z] − γ_j` at the inner minimizer.
    pub supergradient: Vec<f64>,
}

/// `min_K Tr(Φ_{M(λ)}(K) X) − Σ λ_j γ_j` with `M(λ) = M_0 + Σ λ_j M_j`.
pub fn dual_function(problem: &StochasticTeamProblem, lambda: &[f64]) -> Result<DualEvaluation> {
    let dual = Dual::new(problem)?;
    let pt = dual.eval(lambda)?;
    Ok(DualEvaluation {
        value: pt.value,
        gain: BlockGain::from_vec(&problem.info, &pt.k)?,
        supergradient: pt.slack,
    })
}

/// The objective and constraint costs as quadratics in the stacked gain.
pub(crate) struct Dual {
    pub objective: ReducedQuadratic,
    pub constraints: Vec<ReducedQuadratic>,
    pub bounds: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct DualPoint {
    pub lambda: Vec<f64>,
    pub value: f64,
    pub k: Vec<f64>,
    pub primal: f64,
    pub constraint_values: Vec<f64>,
    pub slack: Vec<f64>,
    pub rank_deficient: bool,
    pub unbounded: bool,
    solver: PsdSolver,
}

impl DualPoint {
    /// `primal − dual = −Σ λ_j s_j`.
    pub fn gap(&self) -> f64 {
        -dot(&self.lambda, &self.slack)
    }

    fn max_scaled_violation(&self, bounds: &[f64]) -> f64 {
        self.slack
            .iter()
            .zip(bounds)
            .map(|(s, g)| s / (1.0 + g.abs()))
            .fold(0.0, f64::max)
    }

    fn converged(&self, bounds: &[f64], tol: f64) -> bool {
        self.max_scaled_violation(bounds) <= tol && self.gap().abs() <= tol * (1.0 + self.primal.abs())
    }
}

impl Dual {
    pub fn new(problem: &StochasticTeamProblem) -> Result<Self> {
        let x = &problem.covariance;
        let objective = ReducedQuadratic::new(&problem.objective, &problem.info, x)?;
        let constraints = problem
            .constraints
            .iter()
            .map(|f| ReducedQuadratic::new(f, &problem.info, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            objective,
            constraints,
            bounds: problem.bounds.clone(),
        })
    }

    pub fn eval(&self, lambda: &[f64]) -> Result<DualPoint> {
        if lambda.len() != self.constraints.len() {
            return Err(Error::shape("multipliers", self.constraints.len(), lambda.len()));
        }
        if let Some(l) = lambda.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
            return Err(Error::Malformed(format!("multiplier {l} is not a finite nonnegative number")));
        }
        let mut lag = self.objective.clone();
        for (l, c) in lambda.iter().zip(&self.constraints) {
            if *l != 0.0 {
                lag.add_scaled(*l, c);
            }
        }
        let min = lag.minimize()?;
        let residual: f64 = lag.gradient(&min.k).iter().map(|v| v * v).sum::<f64>().sqrt();
        let unbounded = residual > 1e-6 * (1.0 + lag.g.iter().map(|v| v * v).sum::<f64>().sqrt());
        let constraint_values: Vec<f64> = self.constraints.iter().map(|c| c.eval(&min.k)).collect();
        let slack = constraint_values.iter().zip(&self.bounds).map(|(v, g)| v - g).collect();
        Ok(DualPoint {
            lambda: lambda.to_vec(),
            value: min.value - dot(lambda, &self.bounds),
            primal: self.objective.eval(&min.k),
            k: min.k,
            constraint_values,
            slack,
            rank_deficient: min.rank_deficient,
            unbounded,
            solver: min.solver,
        })
    }

    /// `−∇²d` restricted to `free`: `2 q_aᵀ H(λ)⁻¹ q_b` with
    /// `q_j = H_j k + g_j`.
    fn neg_hessian(&self, pt: &DualPoint, free: &[usize]) -> SymMatrix {
        let q: Vec<Vec<f64>> = free
            .iter()
            .map(|&j| {
                let c = &self.constraints[j];
                let mut v = c.h.as_matrix().matvec(&pt.k);
                for (a, b) in v.iter_mut().zip(&c.g) {
                    *a += b;
                }
                v
            })
            .collect();
        let z: Vec<Vec<f64>> = q.iter().map(|v| pt.solver.solve(v)).collect();
        let f = free.len();
        SymMatrix::symmetrize(Matrix::from_fn(f, f, |a, b| 2.0 * dot(&q[a], &z[b])))
    }
}

/// Solves the constrained expected-cost team problem over block-diagonal
/// linear gains by maximizing the Lagrangian dual.
pub fn solve_constrained(problem: &StochasticTeamProblem, opts: &SolveOptions) -> Result<SolveReport> {
    validate_problem(problem).into_result()?;
    let dual = Dual::new(problem)?;
    let start = dual.eval(&vec![0.0; dual.constraints.len()])?;
    let (pt, iterations, status, rank_deficient) = if dual.constraints.is_empty() {
        let status = if start.unbounded {
            SolveStatus::UnboundedDetected
        } else {
            SolveStatus::Optimal
        };
        let rd = start.rank_deficient;
        (start, 0, status, rd)
    } else {
        match opts.method {
            DualMethod::Newton => newton(&dual, start, opts)?,
            DualMethod::Supergradient { a, b } => supergradient(&dual, start, opts, a, b)?,
        }
    };
    log::info!(
        "dual solve finished: status={} iterations={} gap={:e}",
        status.name(),
        iterations,
        pt.gap()
    );
    Ok(SolveReport {
        k_star: BlockGain::from_vec(&problem.info, &pt.k)?,
        normalized: NormalizedDual::from_unnormalized(&pt.lambda, pt.primal),
        lambda_star: pt.lambda.clone(),
        primal_value: pt.primal,
        dual_value: pt.value,
        gap: pt.gap(),
        constraint_values: pt.constraint_values.clone(),
        iterations,
        status,
        rank_deficient,
    })
}

type Outcome = (DualPoint, usize, SolveStatus, bool);

fn newton(dual: &Dual, mut pt: DualPoint, opts: &SolveOptions) -> Result<Outcome> {
    let m = dual.constraints.len();
    let mut rank_deficient = pt.rank_deficient;
    let mut damping = 1e-12;
    for iter in 0..opts.max_iter {
        if pt.unbounded {
            return Ok((pt, iter, SolveStatus::UnboundedDetected, rank_deficient));
        }
        if pt.converged(&dual.bounds, opts.tol) {
            return Ok((tighten(dual, pt, opts.tol)?, iter, SolveStatus::Optimal, rank_deficient));
        }
        let width: f64 = (0..m)
            .map(|j| (pt.lambda[j] - (pt.lambda[j] + pt.slack[j]).max(0.0)).powi(2))
            .sum::<f64>()
            .sqrt();
        let eps = width.min(1e-3);
        let free: Vec<usize> = (0..m)
            .filter(|&j| !(pt.lambda[j] <= eps && pt.slack[j] < 0.0))
            .collect();
        let hess = dual.neg_hessian(&pt, &free);
        let diag_max = (0..free.len()).map(|a| hess[(a, a)]).fold(0.0, f64::max);

        let mut accepted = None;
        while damping < 1e8 {
            let shifted = hess.shifted(damping * (1.0 + diag_max));
            let step = match Cholesky::factor(&shifted) {
                Ok(chol) => chol.solve(&free.iter().map(|&j| pt.slack[j]).collect::<Vec<_>>()),
                Err(_) => {
                    damping *= 100.0;
                    continue;
                }
            };
            let mut dir: Vec<f64> = pt.lambda.iter().map(|l| -l).collect();
            for (a, &j) in free.iter().enumerate() {
                dir[j] = step[a];
            }
            match line_search(dual, &pt, &dir)? {
                Search::Accepted(next) => {
                    accepted = Some(next);
                    break;
                }
                Search::Diverged(far) => {
                    return Ok(diverged(dual, far, iter + 1, opts.tol, rank_deficient));
                }
                Search::Failed => damping *= 100.0,
            }
        }
        match accepted {
            Some(next) => {
                rank_deficient |= next.rank_deficient;
                pt = next;
                damping = (damping * 0.1).max(1e-12);
            }
            None => {
                log::debug!("line search stalled at iteration {iter}");
                let (pt, ok) = round_feasibility(dual, pt, opts.tol)?;
                let status = if ok { SolveStatus::Optimal } else { SolveStatus::MaxIter };
                return Ok((pt, iter + 1, status, rank_deficient));
            }
        }
    }
    let (pt, ok) = round_feasibility(dual, pt, opts.tol)?;
    let status = if ok { SolveStatus::Optimal } else { SolveStatus::MaxIter };
    Ok((pt, opts.max_iter, status, rank_deficient))
}

enum Search {
    Accepted(DualPoint),
    Diverged(DualPoint),
    Failed,
}

fn line_search(dual: &Dual, pt: &DualPoint, dir: &[f64]) -> Result<Search> {
    let mut t = 1.0;
    let slop = 8.0 * f64::EPSILON * (1.0 + pt.value.abs());
    while t > 1e-10 {
        let cand: Vec<f64> = pt.lambda.iter().zip(dir).map(|(l, d)| (l + t * d).max(0.0)).collect();
        if cand.iter().sum::<f64>() > LAMBDA_CAP {
            let next = dual.eval(&cand)?;
            if next.value > pt.value {
                return Ok(Search::Diverged(next));
            }
        } else {
            let next = dual.eval(&cand)?;
            let moved: Vec<f64> = cand.iter().zip(&pt.lambda).map(|(a, b)| a - b).collect();
            let predicted = ARMIJO * dot(&pt.slack, &moved);
            if next.value >= pt.value + predicted - slop && moved.iter().any(|v| *v != 0.0) {
                return Ok(Search::Accepted(next));
            }
        }
        t *= 0.5;
    }
    Ok(Search::Failed)
}

fn diverged(dual: &Dual, far: DualPoint, iterations: usize, tol: f64, rd: bool) -> Outcome {
    let norm: f64 = far.lambda.iter().sum();
    let ray: Vec<f64> = far.lambda.iter().map(|l| l / norm).collect();
    let growth = dot(&ray, &far.slack);
    let scale = 1.0 + dual.bounds.iter().fold(0.0_f64, |a, g| a.max(g.abs()));
    let status = if growth > tol * scale {
        SolveStatus::Infeasible { ray, growth }
    } else {
        SolveStatus::MaxIter
    };
    (far, iterations, status, rd)
}

/// While some constraint is violated by at most `10·tol` (scaled) at a
/// near-optimal point, pushes the multiplier of the worst one up by bisection
/// until it holds. Returns the new point and whether it meets the
/// optimality test.
fn round_feasibility(dual: &Dual, mut pt: DualPoint, tol: f64) -> Result<(DualPoint, bool)> {
    for _ in 0..pt.slack.len() {
        let violation = pt.max_scaled_violation(&dual.bounds);
        if violation <= 0.0 || violation > 10.0 * tol || pt.gap().abs() > tol * (1.0 + pt.primal.abs()) {
            break;
        }
        match push_multiplier(dual, &pt)? {
            Some(next) => pt = next,
            None => break,
        }
    }
    let ok = pt.converged(&dual.bounds, tol);
    Ok((pt, ok))
}

/// Rounds a converged point onto the feasible side, keeping it if rounding
/// would break convergence.
fn tighten(dual: &Dual, pt: DualPoint, tol: f64) -> Result<DualPoint> {
    if pt.max_scaled_violation(&dual.bounds) <= 0.0 {
        return Ok(pt);
    }
    let (rounded, ok) = round_feasibility(dual, pt.clone(), tol)?;
    Ok(if ok { rounded } else { pt })
}

fn push_multiplier(dual: &Dual, pt: &DualPoint) -> Result<Option<DualPoint>> {
    let j = (0..pt.slack.len())
        .max_by(|&a, &b| {
            let va = pt.slack[a] / (1.0 + dual.bounds[a].abs());
            let vb = pt.slack[b] / (1.0 + dual.bounds[b].abs());
            va.total_cmp(&vb)
        })
        .expect("at least one constraint");
    let at = |lj: f64| -> Result<DualPoint> {
        let mut lam = pt.lambda.clone();
        lam[j] = lj;
        dual.eval(&lam)
    };
    let lo_start = pt.lambda[j];
    let mut hi = lo_start.max(1e-8) * 2.0;
    let mut hi_pt = at(hi)?;
    while hi_pt.slack[j] > 0.0 && hi < LAMBDA_CAP {
        hi *= 2.0;
        hi_pt = at(hi)?;
    }
    if hi_pt.slack[j] > 0.0 {
        return Ok(None);
    }
    let mut lo = lo_start;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let mid_pt = at(mid)?;
        if mid_pt.slack[j] > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            hi_pt = mid_pt;
        }
        if hi - lo <= 1e-14 * (1.0 + hi) {
            break;
        }
    }
    Ok(Some(hi_pt))
}

fn supergradient(dual: &Dual, start: DualPoint, opts: &SolveOptions, a: f64, b: f64) -> Result<Outcome> {
    let mut pt = start;
    let mut best = pt.clone();
    let mut best_gap = f64::INFINITY;
    let mut since_improvement = 0;
    let mut rank_deficient = pt.rank_deficient;
    for iter in 0..opts.max_iter {
        if pt.unbounded {
            return Ok((pt, iter, SolveStatus::UnboundedDetected, rank_deficient));
        }
        if pt.converged(&dual.bounds, opts.tol) {
            return Ok((tighten(dual, pt, opts.tol)?, iter, SolveStatus::Optimal, rank_deficient));
        }
        if pt.value > best.value {
            best = pt.clone();
        }
        let rel = pt.gap().abs() / (1.0 + pt.primal.abs()) + pt.max_scaled_violation(&dual.bounds);
        if rel < best_gap * (1.0 - 1e-9) {
            best_gap = rel;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= STALL_WINDOW {
                log::debug!("supergradient stalled with gap measure {best_gap:e}");
                return Ok((best, iter, SolveStatus::MaxIter, rank_deficient));
            }
        }
        let step = a / (b + iter as f64);
        let next: Vec<f64> = pt
            .lambda
            .iter()
            .zip(&pt.slack)
            .map(|(l, s)| (l + step * s).max(0.0))
            .collect();
        if next.iter().sum::<f64>() > LAMBDA_CAP {
            let far = dual.eval(&next)?;
            return Ok(diverged(dual, far, iter + 1, opts.tol, rank_deficient));
        }
        pt = dual.eval(&next)?;
        rank_deficient |= pt.rank_deficient;
    }
    if pt.value > best.value {
        best = pt;
    }
    let (best, ok) = round_feasibility(dual, best, opts.tol)?;
    let status = if ok { SolveStatus::Optimal } else { SolveStatus::MaxIter };
    Ok((best, opts.max_iter, status, rank_deficient))
}
