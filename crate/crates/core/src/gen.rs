//! Seeded random instance generators for tests and benchmarks.

use crate::linalg::{Matrix, SymMatrix};
use crate::model::{
    closed_loop_form, expected_cost, BlockForm, BlockGain, DeterministicTeamProblem, InfoStructure, Player,
    StochasticTeamProblem,
};
use crate::oracle::GaussianStream;
use crate::stochastic::weighted_team_gain;
use crate::Result;

/// Uniform integer in `lo..=hi`.
pub fn int_in(g: &mut GaussianStream, lo: usize, hi: usize) -> usize {
    lo + ((g.uniform() * (hi - lo + 1) as f64) as usize).min(hi - lo)
}

pub fn gaussian_matrix(g: &mut GaussianStream, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| g.next_gaussian())
}

/// `GGᵀ / k` for an `n × k` Gaussian `G`: PSD of rank `min(k, n)`.
pub fn random_psd(g: &mut GaussianStream, n: usize, rank: usize) -> SymMatrix {
    let b = gaussian_matrix(g, n, rank);
    SymMatrix::gram(&b).scale(1.0 / rank.max(1) as f64)
}

/// Random positive definite matrix with smallest eigenvalue at least `floor`.
pub fn random_spd(g: &mut GaussianStream, n: usize, floor: f64) -> SymMatrix {
    random_psd(g, n, n).shifted(floor)
}

/// Splits `total` into `parts` positive sizes.
fn split(g: &mut GaussianStream, total: usize, parts: usize) -> Vec<usize> {
    let mut sizes = vec![1; parts];
    for _ in parts..total {
        sizes[int_in(g, 0, parts - 1)] += 1;
    }
    sizes
}

/// `players` players sharing `m` decisions and `p` Gaussian measurement rows.
pub fn random_info(g: &mut GaussianStream, n: usize, players: usize, m: usize, p: usize) -> InfoStructure {
    let ms = split(g, m, players);
    let ps = split(g, p, players);
    let layout = ms.into_iter().zip(ps).map(|(m, p)| Player { m, p }).collect();
    InfoStructure::new(layout, gaussian_matrix(g, p, n)).expect("sizes are consistent")
}

/// Random form with PSD block matrix and `R ⪰ floor·I`.
pub fn random_form(g: &mut GaussianStream, n: usize, m: usize, floor: f64) -> BlockForm {
    let mut full = random_psd(g, n + m, n + m);
    let shift: Vec<f64> = (0..n + m).map(|i| if i < n { 0.0 } else { floor }).collect();
    full.axpy(1.0, &SymMatrix::from_diag(&shift));
    BlockForm::from_full(&full, n).expect("split within bounds")
}

/// Random gain on the admissible pattern with entries `N(0, scale²)`.
pub fn random_gain(g: &mut GaussianStream, info: &InfoStructure, scale: f64) -> BlockGain {
    let k: Vec<f64> = (0..info.gain_dof()).map(|_| scale * g.next_gaussian()).collect();
    BlockGain::from_vec(info, &k).expect("length matches")
}

/// Unconstrained problem with `n, m ≤ max_dim` and 2 to 4 players.
pub fn random_unconstrained(g: &mut GaussianStream, max_dim: usize) -> StochasticTeamProblem {
    let players = int_in(g, 2, 4);
    let n = int_in(g, players, max_dim.max(players));
    let m = int_in(g, players, max_dim.max(players));
    let p = int_in(g, players, (2 * players).max(n).min(max_dim.max(players)));
    let info = random_info(g, n, players, m, p);
    let objective = random_form(g, n, m, 0.1);
    let x = random_spd(g, n, 0.05);
    StochasticTeamProblem::unconstrained(objective, x, info)
}

/// Constrained instance that is strictly feasible at a known gain `K₀`.
#[derive(Debug, Clone)]
pub struct ConstrainedInstance {
    pub problem: StochasticTeamProblem,
    pub k0: BlockGain,
}

/// Builds `constraints` forms around a random structured `K₀`.
///
/// The first form is `E‖u − K₀y‖²`, the rest are random PSD forms. Each
/// bound sits at `c_j(K₀) + 0.9·|c_j(K_u) − c_j(K₀)| + margin`, where `K_u`
/// is the unconstrained optimum: slack at `K₀` and 10% tighter than `K_u`
/// whenever `K_u` costs more.
pub fn random_constrained(g: &mut GaussianStream, max_dim: usize, constraints: usize) -> Result<ConstrainedInstance> {
    let base = random_unconstrained(g, max_dim);
    let info = base.info.clone();
    let (n, m) = (info.n(), info.m());
    let k0 = random_gain(g, &info, 0.5);
    let free = weighted_team_gain(&base.objective, &info, &base.covariance)?.gain;

    let mut forms = Vec::with_capacity(constraints);
    if constraints > 0 {
        let f = k0.assemble().matmul(info.c());
        let mut e = Matrix::zeros(m, n + m);
        e.set_block(0, 0, &f.scale(-1.0));
        e.set_block(0, n, &Matrix::identity(m));
        forms.push(BlockForm::from_full(&SymMatrix::gram(&e.transpose()), n)?);
    }
    while forms.len() < constraints {
        forms.push(random_form(g, n, m, 0.0));
    }
    let bounds = forms
        .iter()
        .map(|f| {
            let at_k0 = expected_cost(f, &k0, info.c(), &base.covariance)?;
            let at_free = expected_cost(f, &free, info.c(), &base.covariance)?;
            Ok(at_k0 + 0.9 * (at_free - at_k0).abs() + 1e-3 * (1.0 + at_k0.abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let problem = StochasticTeamProblem::new(base.objective, forms, bounds, base.covariance, info);
    Ok(ConstrainedInstance { problem, k0 })
}

/// Deterministic feasibility instance built backwards: every form has
/// `Φ_j(K₀) = −margin·I` for a random structured `K₀`.
pub fn backwards_feasible(
    g: &mut GaussianStream,
    max_dim: usize,
    forms: usize,
    margin: f64,
) -> Result<(DeterministicTeamProblem, BlockGain)> {
    let players = int_in(g, 2, 3);
    let n = int_in(g, players, max_dim.max(players));
    let m = int_in(g, players, max_dim.max(players));
    let p = int_in(g, players, n.max(players));
    let info = random_info(g, n, players, m, p);
    let k0 = random_gain(g, &info, 0.5);
    let list = (0..forms)
        .map(|_| {
            let mut form = random_form(g, n, m, 0.1);
            form.q = SymMatrix::zeros(n);
            let phi = closed_loop_form(&form, &k0, info.c())?;
            form.q = phi.scale(-1.0).shifted(-margin);
            Ok(form)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((DeterministicTeamProblem::feasibility(list, info), k0))
}

/// Leading `players`-player truncation of a scalar team on `universe`
/// state components.
///
/// Player `i` observes `x_i`; the cost is `E (u − x)ᵀ R (u − x)` with
/// `R_ij = ρ^{|i−j|}` and `u_i = 0` for the players left out. The state has
/// correlation `ρ^{|i−j|}` and standard deviations `(1 + i)^{−decay}`.
pub fn truncation_instance(players: usize, universe: usize, rho: f64, decay: f64) -> Result<StochasticTeamProblem> {
    let kms = |n: usize| Matrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()));
    let r = kms(universe);
    let sd: Vec<f64> = (0..universe).map(|i| (1.0 + i as f64).powf(-decay)).collect();
    let x = Matrix::from_fn(universe, universe, |i, j| r[(i, j)] * sd[i] * sd[j]);
    let mut c = Matrix::zeros(players, universe);
    for i in 0..players {
        c[(i, i)] = 1.0;
    }
    let info = InfoStructure::new(vec![Player { m: 1, p: 1 }; players], c)?;
    let objective = BlockForm::new(
        SymMatrix::symmetrize(r.clone()),
        r.block(0, 0, universe, players).scale(-1.0),
        SymMatrix::symmetrize(kms(players)),
    )?;
    Ok(StochasticTeamProblem::unconstrained(objective, SymMatrix::symmetrize(x), info))
}
