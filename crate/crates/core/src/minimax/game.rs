use super::feasibility::{search, FeasibilityOptions, FeasibilityReport, FeasibilityStatus};
use crate::error::{Error, Result};
use crate::linalg::{max_eigenvalue, schur_complement};
use crate::model::{validate_problem, BlockForm, BlockGain, DeterministicMode, DeterministicTeamProblem};

const MAX_EXPANSIONS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct GameValueOptions {
    /// Bisection stops once `hi − lo ≤ resolution`.
    pub resolution: f64,
    pub feasibility: FeasibilityOptions,
}

impl Default for GameValueOptions {
    fn default() -> Self {
        Self {
            resolution: 1e-6,
            feasibility: FeasibilityOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameValueReport {
    /// Upper end of the final bracket; `k` is certified at this value.
    pub gamma_star: f64,
    pub k: BlockGain,
    pub bisection_interval: (f64, f64),
    /// Feasibility report for the objective folded at `gamma_star`.
    pub certificate: FeasibilityReport,
    pub bisection_steps: usize,
}

/// Smallest `γ` for which some block-diagonal `K` keeps
/// `sup_{‖x‖=1} zᵀ M_0 z ≤ γ` while meeting the remaining forms.
pub fn game_value(problem: &DeterministicTeamProblem, opts: &GameValueOptions) -> Result<GameValueReport> {
    validate_problem(problem).into_result()?;
    let DeterministicMode::GameValue { objective } = problem.mode else {
        return Err(Error::Malformed("game value requested for a feasibility problem".into()));
    };
    let info = &problem.info;
    let base = &problem.forms[objective];
    let trial = |gamma: f64, warm: Option<BlockGain>| -> Result<FeasibilityReport> {
        let forms: Vec<BlockForm> = problem
            .forms
            .iter()
            .enumerate()
            .map(|(j, f)| if j == objective { f.fold_bound(gamma) } else { f.clone() })
            .collect();
        let mut fo = opts.feasibility.clone();
        if warm.is_some() {
            fo.warm_start = warm;
        }
        search(&forms, info, &fo)
    };

    // Full-information lower bound: Φ_0(K) ⪰ Q − S R⁻¹ Sᵀ for every K.
    let full = base.full();
    let mut lo = max_eigenvalue(&schur_complement(&full, base.n())?)?;
    let at_lo = trial(lo, None)?;
    if at_lo.status == FeasibilityStatus::Feasible {
        return Ok(GameValueReport {
            gamma_star: lo,
            k: at_lo.k.clone().expect("feasible report has a gain"),
            bisection_interval: (lo, lo),
            certificate: at_lo,
            bisection_steps: 0,
        });
    }

    let mut hi = max_eigenvalue(&base.q)?.max(lo);
    let mut best = trial(hi, at_lo.k.clone())?;
    let mut expansions = 0;
    while best.status != FeasibilityStatus::Feasible {
        if let FeasibilityStatus::InfeasibleCertified { form, .. } = best.status {
            if form != objective {
                return Err(Error::Infeasible(format!(
                    "form {form} cannot be met by any block-diagonal gain"
                )));
            }
        }
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Infeasible(
                "no feasible upper bound for the game value was found".into(),
            ));
        }
        lo = lo.max(hi);
        hi = lo + 2.0 * (hi - lo).max(1.0 + hi.abs()).max(1.0);
        best = trial(hi, best.k.clone())?;
    }

    let mut steps = 0;
    while hi - lo > opts.resolution {
        let mid = 0.5 * (lo + hi);
        let rep = trial(mid, best.k.clone())?;
        if rep.status == FeasibilityStatus::Feasible {
            hi = mid;
            best = rep;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    log::info!("game value in [{lo}, {hi}] after {steps} bisection steps");
    Ok(GameValueReport {
        gamma_star: hi,
        k: best.k.clone().expect("feasible report has a gain"),
        bisection_interval: (lo, hi),
        certificate: best,
        bisection_steps: steps,
    })
}
