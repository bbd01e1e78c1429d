use super::{check_partially_nested, DynamicTeamProblem};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymMatrix};
use crate::model::{validate_problem, BlockForm, InfoStructure, Player, StochasticTeamProblem};
use crate::stochastic::{solve_constrained, SolveOptions, SolveReport};

/// Decision block of node `node` at time `time` in the lifted problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftedPlayer {
    pub node: usize,
    pub time: usize,
    pub decision_offset: usize,
    pub m: usize,
}

/// One row of the lifted measurement map: row `row` of `y̌_source(source_time)`
/// as seen by lifted player `player`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementRow {
    pub player: usize,
    pub source: usize,
    pub source_time: usize,
    pub row: usize,
}

/// Static equivalent of a partially nested dynamic problem.
///
/// The lifted state is `(x(0), w(0), …, w(T−1))`; decisions are ordered by
/// time, then node. Player `(i, k)` measures the control-free outputs
/// `y̌_l(κ) = C_l(x(κ) − Σ_{τ<κ} A^{κ−1−τ} B u(τ))` for every `(l, κ)` it
/// holds, ordered by `κ` then `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedProblem {
    pub static_problem: StochasticTeamProblem,
    pub index_map: Vec<LiftedPlayer>,
    pub measurement_map: Vec<MeasurementRow>,
}

impl LiftedProblem {
    /// Lifted player index of node `node` at time `time`.
    pub fn player_index(&self, node: usize, time: usize) -> usize {
        let nodes = self.index_map.iter().filter(|p| p.time == 0).count();
        time * nodes + node
    }

    /// `(source, source_time)` pairs measured by a lifted player, in order.
    pub fn held_measurements(&self, player: usize) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for r in self.measurement_map.iter().filter(|r| r.player == player) {
            if out.last() != Some(&(r.source, r.source_time)) {
                out.push((r.source, r.source_time));
            }
        }
        out
    }
}

/// `x(k) = Ex_k ξ + Eu_k ū` for `k = 0..=T`.
pub(crate) fn state_maps(p: &DynamicTeamProblem) -> (Vec<Matrix>, Vec<Matrix>) {
    let (n, m, t) = (p.n(), p.m(), p.horizon);
    let prim = n * (t + 1);
    let powers = p.powers();
    let mut ex = Vec::with_capacity(t + 1);
    let mut eu = Vec::with_capacity(t + 1);
    for k in 0..=t {
        let mut e = Matrix::zeros(n, prim);
        e.set_block(0, 0, &powers[k]);
        let mut f = Matrix::zeros(n, m * t);
        for tau in 0..k {
            e.set_block(0, n * (tau + 1), &powers[k - 1 - tau]);
            f.set_block(0, m * tau, &powers[k - 1 - tau].matmul(&p.b));
        }
        ex.push(e);
        eu.push(f);
    }
    (ex, eu)
}

/// Rewrites the dynamic problem as a static team problem whose expected cost
/// equals the dynamic cost for every linear policy on corrected outputs.
pub fn lift_to_static(p: &DynamicTeamProblem) -> Result<LiftedProblem> {
    validate_problem(p).into_result()?;
    let violations = check_partially_nested(p);
    if !violations.is_empty() {
        return Err(Error::NotPartiallyNested(violations));
    }
    let (n, m, t, nodes) = (p.n(), p.m(), p.horizon, p.nodes());
    let prim = n * (t + 1);
    let dec = m * t;
    let (ex, eu) = state_maps(p);

    let z_map = |k: usize| -> Matrix {
        let mut out = Matrix::zeros(n + m, prim + dec);
        out.set_block(0, 0, &ex[k]);
        out.set_block(0, prim, &eu[k]);
        if k < t {
            out.set_block(n, prim + m * k, &Matrix::identity(m));
        }
        out
    };
    let stage_sum = |form: &BlockForm| -> SymMatrix {
        let full = form.full();
        let mut acc = SymMatrix::zeros(prim + dec);
        for k in 0..t {
            acc.axpy(1.0, &full.congruence(&z_map(k)));
        }
        acc
    };

    let mut objective = stage_sum(&p.stage);
    let mut terminal = Matrix::zeros(n, prim + dec);
    terminal.set_block(0, 0, &ex[t]);
    terminal.set_block(0, prim, &eu[t]);
    objective.axpy(1.0, &p.terminal.congruence(&terminal));
    let objective = BlockForm::from_full(&objective, prim)?;
    let constraints = p
        .constraints
        .iter()
        .map(|f| BlockForm::from_full(&stage_sum(f), prim))
        .collect::<Result<Vec<_>>>()?;

    let mut cov = Matrix::zeros(prim, prim);
    cov.set_block(0, 0, p.init_cov.as_matrix());
    for tau in 0..t {
        cov.set_block(n * (tau + 1), n * (tau + 1), p.noise_cov.as_matrix());
    }

    let mut players = Vec::with_capacity(nodes * t);
    let mut index_map = Vec::with_capacity(nodes * t);
    let mut measurement_map = Vec::new();
    let mut c_rows: Vec<Vec<f64>> = Vec::new();
    for k in 0..t {
        for i in 0..nodes {
            let player = index_map.len();
            let mut rows = 0;
            for kappa in 0..=k {
                for l in (0..nodes).filter(|&l| p.delays.knows(i, l, kappa, k)) {
                    let y = p.c_list[l].matmul(&ex[kappa]);
                    for row in 0..y.rows() {
                        c_rows.push(y.row(row).to_vec());
                        measurement_map.push(MeasurementRow {
                            player,
                            source: l,
                            source_time: kappa,
                            row,
                        });
                    }
                    rows += y.rows();
                }
            }
            players.push(Player {
                m: p.input_dims[i],
                p: rows,
            });
            index_map.push(LiftedPlayer {
                node: i,
                time: k,
                decision_offset: m * k + p.input_offset(i),
                m: p.input_dims[i],
            });
        }
    }
    let c = if c_rows.is_empty() {
        Matrix::zeros(0, prim)
    } else {
        Matrix::from_rows(&c_rows)?
    };
    let info = InfoStructure::new(players, c)?;
    let static_problem = StochasticTeamProblem::new(
        objective,
        constraints,
        p.bounds.clone(),
        SymMatrix::symmetrize(cov),
        info,
    );
    Ok(LiftedProblem {
        static_problem,
        index_map,
        measurement_map,
    })
}

/// Linear map of node `node` at time `time` from its stacked corrected
/// outputs (in `measurements` order) to `u_node(time)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedGain {
    pub node: usize,
    pub time: usize,
    pub gain: Matrix,
    pub measurements: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicSolution {
    pub gains: Vec<TimedGain>,
    pub report: SolveReport,
    pub lifted: LiftedProblem,
}

impl DynamicSolution {
    pub fn gain(&self, node: usize, time: usize) -> &TimedGain {
        &self.gains[self.lifted.player_index(node, time)]
    }
}

/// Lifts, solves the static problem, and splits the block gain back into
/// per-node, per-time maps.
pub fn solve_dynamic(p: &DynamicTeamProblem, opts: &SolveOptions) -> Result<DynamicSolution> {
    let lifted = lift_to_static(p)?;
    let report = solve_constrained(&lifted.static_problem, opts)?;
    let gains = lifted
        .index_map
        .iter()
        .enumerate()
        .map(|(q, lp)| TimedGain {
            node: lp.node,
            time: lp.time,
            gain: report.k_star.block(q).clone(),
            measurements: lifted.held_measurements(q),
        })
        .collect();
    Ok(DynamicSolution { gains, report, lifted })
}
