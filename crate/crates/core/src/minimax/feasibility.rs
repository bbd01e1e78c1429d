use crate::error::Result;
use crate::exec::Execution;
use crate::linalg::{max_eigenvalue, sym_eig, Matrix, SymMatrix};
use crate::model::{closed_loop_dense, validate_problem, BlockForm, BlockGain, DeterministicTeamProblem, InfoStructure};
use crate::oracle::GaussianStream;
use crate::stochastic::weighted_team_gain;

/// Threshold for declaring `φ(K) ≤ 0` and for the final LMI check.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

const STALL_ITERATIONS: usize = 50;
const MAX_ENUMERATED_INERT: usize = 10;

/// `[[Q + SKC + CᵀKᵀSᵀ, CᵀKᵀR], [RKC, −R]]`; negative semidefinite exactly
/// when the closed-loop form is, if `R ≻ 0`.
pub fn lmi_block(form: &BlockForm, gain: &BlockGain, c: &Matrix) -> Result<SymMatrix> {
    // Shape checks are shared with the closed-loop form.
    crate::model::closed_loop_form(form, gain, c)?;
    let f = gain.assemble().matmul(c);
    let (n, m) = (form.n(), form.m());
    let sf = form.s.matmul(&f);
    let mut upper = form.q.as_matrix().clone();
    upper.axpy(1.0, &sf);
    upper.axpy(1.0, &sf.transpose());
    let rf = form.r.as_matrix().matmul(&f);
    let mut out = Matrix::zeros(n + m, n + m);
    out.set_block(0, 0, &upper);
    out.set_block(n, 0, &rf);
    out.set_block(0, n, &rf.transpose());
    out.set_block(n, n, &form.r.as_matrix().scale(-1.0));
    Ok(SymMatrix::symmetrize(out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityOptions {
    /// Descent stops once `φ(K) ≤ −tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub execution: Execution,
    /// Extra starting point, tried before the random restarts.
    pub warm_start: Option<BlockGain>,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 2000,
            restarts: 5,
            seed: 0,
            execution: Execution::default(),
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityStatus {
    Feasible,
    /// `xᵀ Q_j x > 0` on a subspace no admissible gain can influence.
    InfeasibleCertified {
        form: usize,
        eigenvalue: f64,
        direction: Vec<f64>,
    },
    Undetermined,
}

impl FeasibilityStatus {
    pub fn name(&self) -> &'static str {
        match self {
            FeasibilityStatus::Feasible => "feasible",
            FeasibilityStatus::InfeasibleCertified { .. } => "infeasible-certified",
            FeasibilityStatus::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub status: FeasibilityStatus,
    /// Best gain found; absent only when infeasibility was certified.
    pub k: Option<BlockGain>,
    /// `max_j λ_max(Φ_j(K))` at `k`.
    pub phi: f64,
    pub per_constraint_eigs: Vec<f64>,
    /// `λ_max` of each [`lmi_block`] at `k`.
    pub lmi_eigs: Vec<f64>,
    pub iterations: usize,
}

/// Searches for a block-diagonal `K` with `sup_{‖x‖≤1} zᵀ M_j z ≤ 0` for
/// every form, by subgradient descent on `φ(K) = max_j λ_max(Φ_j(K))`.
pub fn feasibility_search(problem: &DeterministicTeamProblem, opts: &FeasibilityOptions) -> Result<FeasibilityReport> {
    validate_problem(problem).into_result()?;
    search(&problem.forms, &problem.info, opts)
}

pub(crate) fn search(forms: &[BlockForm], info: &InfoStructure, opts: &FeasibilityOptions) -> Result<FeasibilityReport> {
    if let Some((form, eigenvalue, direction)) = structural_certificate(forms, info)? {
        return Ok(FeasibilityReport {
            status: FeasibilityStatus::InfeasibleCertified {
                form,
                eigenvalue,
                direction,
            },
            k: None,
            phi: f64::INFINITY,
            per_constraint_eigs: Vec::new(),
            lmi_eigs: Vec::new(),
            iterations: 0,
        });
    }
    let starts = starting_points(forms, info, opts);
    let runs = opts
        .execution
        .map_indexed(starts.len(), |r| descend(forms, info, &starts[r], opts));
    let mut best: Option<Run> = None;
    let mut iterations = 0;
    for run in runs {
        let run = run?;
        iterations += run.iterations;
        if best.as_ref().map_or(true, |b| run.phi < b.phi) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one starting point");
    let k = BlockGain::from_vec(info, &best.k)?;
    let per_constraint_eigs = phis(forms, info, &best.k)?;
    let phi = per_constraint_eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lmi_eigs = forms
        .iter()
        .map(|f| max_eigenvalue(&lmi_block(f, &k, info.c())?))
        .collect::<Result<Vec<_>>>()?;
    let feasible = phi <= FEASIBILITY_TOLERANCE && lmi_eigs.iter().all(|e| *e <= FEASIBILITY_TOLERANCE);
    log::debug!("feasibility search: phi={phi:e} after {iterations} iterations");
    Ok(FeasibilityReport {
        status: if feasible {
            FeasibilityStatus::Feasible
        } else {
            FeasibilityStatus::Undetermined
        },
        k: Some(k),
        phi,
        per_constraint_eigs,
        lmi_eigs,
        iterations,
    })
}

fn starting_points(forms: &[BlockForm], info: &InfoStructure, opts: &FeasibilityOptions) -> Vec<Vec<f64>> {
    let dof = info.gain_dof();
    let mut starts = vec![vec![0.0; dof]];
    if let Some(w) = &opts.warm_start {
        if w.matches(info).is_ok() {
            starts.push(w.to_vec());
        }
    }
    let mut total = BlockForm::zeros(info.n(), info.m());
    for f in forms {
        total = total.add_scaled(1.0, f);
    }
    let mut scale = 1.0;
    if let Ok(tg) = weighted_team_gain(&total, info, &SymMatrix::identity(info.n())) {
        scale += tg.gain.frobenius_norm() / (dof as f64).sqrt();
        starts.push(tg.gain.to_vec());
    }
    let base = GaussianStream::base(opts.seed);
    for r in 0..opts.restarts.saturating_sub(1) {
        let mut g = GaussianStream::from_base(&base, r as u64);
        starts.push(g.gaussians(dof).into_iter().map(|v| v * scale).collect());
    }
    starts
}

struct Run {
    k: Vec<f64>,
    phi: f64,
    iterations: usize,
}

/// Value of `φ` at `k` with the index of the active form and its top
/// eigenvector (lowest index wins ties within 1e-12).
fn active(forms: &[BlockForm], f: &Matrix) -> Result<(f64, usize, Vec<f64>)> {
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for (j, form) in forms.iter().enumerate() {
        let eig = sym_eig(&closed_loop_dense(form, f))?;
        let top = eig.max();
        if best.as_ref().map_or(true, |(b, _, _)| top > b + 1e-12) {
            best = Some((top, j, eig.top_vector()));
        }
    }
    Ok(best.expect("at least one form"))
}

fn phis(forms: &[BlockForm], info: &InfoStructure, k: &[f64]) -> Result<Vec<f64>> {
    let f = BlockGain::from_vec(info, k)?.assemble().matmul(info.c());
    forms
        .iter()
        .map(|form| max_eigenvalue(&closed_loop_dense(form, &f)))
        .collect()
}

/// Projected subgradient `2·P_𝕂((R_j K C + S_jᵀ) v vᵀ Cᵀ)` as a stacked vector.
fn subgradient(form: &BlockForm, info: &InfoStructure, f: &Matrix, v: &[f64]) -> Vec<f64> {
    let c = info.c();
    let mut a = form.r.as_matrix().matvec(&f.matvec(v));
    for (x, y) in a.iter_mut().zip(form.s.tr_matvec(v)) {
        *x += y;
    }
    let cv = c.matvec(v);
    info.pattern().iter().map(|&(row, col)| 2.0 * a[row] * cv[col]).collect()
}

fn descend(forms: &[BlockForm], info: &InfoStructure, start: &[f64], opts: &FeasibilityOptions) -> Result<Run> {
    let assemble = |k: &[f64]| -> Result<Matrix> { Ok(BlockGain::from_vec(info, k)?.assemble().matmul(info.c())) };
    let mut k = start.to_vec();
    let mut best = Run {
        k: k.clone(),
        phi: f64::INFINITY,
        iterations: 0,
    };
    let mut delta: Option<f64> = None;
    let mut stall = 0;
    for iter in 0..opts.max_iter {
        let f = assemble(&k)?;
        let (phi, j, v) = active(forms, &f)?;
        if phi < best.phi {
            if best.phi - phi > 1e-12 * (1.0 + phi.abs()) {
                stall = 0;
            }
            best.k = k.clone();
            best.phi = phi;
        } else {
            stall += 1;
        }
        best.iterations = iter + 1;
        if best.phi <= -opts.tol {
            break;
        }
        let d = delta.get_or_insert(1e-3 * (1.0 + best.phi.abs()));
        if stall >= STALL_ITERATIONS {
            *d *= 0.5;
            stall = 0;
            k = best.k.clone();
            continue;
        }
        let g = subgradient(&forms[j], info, &f, &v);
        let g2: f64 = g.iter().map(|x| x * x).sum();
        if g2 <= 1e-30 {
            break;
        }
        let target = (best.phi - *d).min(-*d);
        let step = (phi - target) / g2;
        for (ki, gi) in k.iter_mut().zip(&g) {
            *ki -= step * gi;
        }
    }
    Ok(best)
}

/// Looks for a form `j` and a subspace on which `zᵀ M_j z = xᵀ Q_j x` for
/// every admissible gain, with `Q_j` positive there.
///
/// Player `i` affects form `j` on `x` only through `u_i = K_i C_i x`. If
/// `R_j` vanishes on player `i`'s decisions, `u_i` enters linearly through
/// `S_jᵀ x` and can be silenced by `S_j[:, i]ᵀ x = 0` instead.
fn structural_certificate(forms: &[BlockForm], info: &InfoStructure) -> Result<Option<(usize, f64, Vec<f64>)>> {
    let n = info.n();
    for (j, form) in forms.iter().enumerate() {
        let q_scale = 1.0 + form.q.frobenius_norm();
        if max_eigenvalue(&form.q)? <= FEASIBILITY_TOLERANCE * q_scale {
            continue;
        }
        let inert: Vec<usize> = (0..info.num_players())
            .filter(|&i| {
                let (off, m) = (info.m_offset(i), info.players()[i].m);
                form.r.principal(off, m).as_matrix().max_abs() == 0.0
            })
            .collect();
        let subsets: Vec<Vec<usize>> = if inert.len() <= MAX_ENUMERATED_INERT {
            (0..1usize << inert.len())
                .map(|mask| (0..inert.len()).filter(|b| mask >> b & 1 == 1).map(|b| inert[b]).collect())
                .collect()
        } else {
            vec![Vec::new(), inert.clone()]
        };
        for subset in subsets {
            let mut rows: Vec<Vec<f64>> = Vec::new();
            for i in 0..info.num_players() {
                if subset.contains(&i) {
                    let (off, m) = (info.m_offset(i), info.players()[i].m);
                    for a in off..off + m {
                        rows.push((0..n).map(|x| form.s[(x, a)]).collect());
                    }
                } else {
                    let ci = info.c_block(i);
                    rows.extend(ci.to_rows());
                }
            }
            let Some(basis) = null_space(&rows, n)? else { continue };
            let restricted = form.q.congruence(&basis);
            let eig = sym_eig(&restricted)?;
            if eig.max() > FEASIBILITY_TOLERANCE * q_scale {
                let direction = basis.matvec(&eig.top_vector());
                return Ok(Some((j, eig.max(), direction)));
            }
        }
    }
    Ok(None)
}

/// Orthonormal basis (as columns) of `{x : row·x = 0 for all rows}`, or
/// `None` if the space is trivial.
fn null_space(rows: &[Vec<f64>], n: usize) -> Result<Option<Matrix>> {
    if rows.is_empty() {
        return Ok(Some(Matrix::identity(n)));
    }
    let a = Matrix::from_rows(rows)?;
    let gram = SymMatrix::symmetrize(a.tr_matmul(&a));
    let eig = sym_eig(&gram)?;
    let cutoff = 1e-12 * (1.0 + eig.max().abs());
    let keep: Vec<usize> = (0..n).filter(|&k| eig.values[k] <= cutoff).collect();
    if keep.is_empty() {
        return Ok(None);
    }
    Ok(Some(Matrix::from_fn(n, keep.len(), |r, c| eig.vectors[(r, keep[c])])))
}
