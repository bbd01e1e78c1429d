use std::collections::BTreeSet;

use super::{DynamicTeamProblem, Violation};
use crate::linalg::Matrix;

/// Relative threshold below which an entry of `C_l Aⁿ B` counts as zero.
pub const INFLUENCE_TOLERANCE: f64 = 1e-12;

/// `influence[n][l][j]`: input `u_j` reaches measurement `y_l` after lag `n`.
pub(crate) fn influence(p: &DynamicTeamProblem) -> Vec<Vec<Vec<bool>>> {
    let lags = p.horizon.saturating_sub(1);
    let nodes = p.nodes();
    let offsets: Vec<usize> = (0..nodes).map(|j| p.input_offset(j)).collect();
    let block_hits = |prod: &dyn Fn(usize, usize) -> bool, rows: usize| -> Vec<bool> {
        (0..nodes)
            .map(|j| (0..rows).any(|r| (offsets[j]..offsets[j] + p.input_dims[j]).any(|c| prod(r, c))))
            .collect()
    };
    if p.structural {
        let pattern = |m: &Matrix| Matrix::from_fn(m.rows(), m.cols(), |r, c| f64::from(m[(r, c)] != 0.0));
        let a = pattern(&p.a);
        let mut reach = pattern(&p.b);
        let mut out = Vec::with_capacity(lags);
        for _ in 0..lags {
            out.push(
                p.c_list
                    .iter()
                    .map(|c| {
                        let prod = pattern(c).matmul(&reach);
                        block_hits(&|r, col| prod[(r, col)] > 0.0, c.rows())
                    })
                    .collect(),
            );
            reach = pattern(&a.matmul(&reach));
        }
        out
    } else {
        let mut reach = p.b.clone();
        let mut out = Vec::with_capacity(lags);
        for _ in 0..lags {
            out.push(
                p.c_list
                    .iter()
                    .map(|c| {
                        let prod = c.matmul(&reach);
                        let cutoff = INFLUENCE_TOLERANCE * prod.max_abs();
                        block_hits(&|r, col| prod[(r, col)].abs() > cutoff, c.rows())
                    })
                    .collect(),
            );
            reach = p.a.matmul(&reach);
        }
        out
    }
}

/// Lists every place where a node holds a measurement influenced by an input
/// it does not know; an empty list means the structure is partially nested.
///
/// For node `i` at time `k` and each held measurement `y_l(κ)`
/// (`κ + d(i, l) ≤ k`), every `u_j(κ − n − 1)` with a nonzero block
/// `[C_l Aⁿ B]_{·j}` must itself be known: `κ − n − 1 + d(i, j) ≤ k`.
pub fn check_partially_nested(p: &DynamicTeamProblem) -> Vec<Violation> {
    let infl = influence(p);
    let nodes = p.nodes();
    let mut found = BTreeSet::new();
    for i in 0..nodes {
        for k in 0..p.horizon {
            for kappa in 0..=k {
                for l in (0..nodes).filter(|&l| p.delays.knows(i, l, kappa, k)) {
                    for lag in 0..kappa {
                        let tau = kappa - lag - 1;
                        for j in (0..nodes).filter(|&j| infl[lag][l][j]) {
                            if !p.delays.knows(i, j, tau, k) {
                                found.insert(Violation {
                                    node: i,
                                    input: j,
                                    time: k,
                                    lag,
                                    measurement: l,
                                    measured_at: kappa,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    found.into_iter().collect()
}
