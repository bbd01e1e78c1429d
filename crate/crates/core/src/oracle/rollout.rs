use super::estimate::{estimate, McEstimate};
use crate::dynamic::{DynamicTeamProblem, TimedGain};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::sqrt_psd;

/// Monte Carlo cost of time-indexed linear policies on the dynamic system.
///
/// Each trajectory is simulated forward. Node `i` at time `k` subtracts the
/// input contribution `C_l Σ_{τ<κ} A^{κ−1−τ} B u(τ)` from every raw output
/// `y_l(κ)` it holds, then applies its gain to the stacked corrected
/// outputs in `measurements` order. Sample `s` draws `x(0)` followed by
/// `w(0), …, w(T−1)` from stream `s`.
pub fn rollout_cost(
    p: &DynamicTeamProblem,
    gains: &[TimedGain],
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    let (n, m, t, nodes) = (p.n(), p.m(), p.horizon, p.nodes());
    let mut table: Vec<Option<&TimedGain>> = vec![None; nodes * t];
    for g in gains {
        if g.node >= nodes || g.time >= t {
            return Err(Error::Malformed(format!("gain for node {} at time {} is out of range", g.node, g.time)));
        }
        let rows: usize = g.measurements.iter().map(|(l, _)| p.c_list[*l].rows()).sum();
        if g.gain.shape() != (p.input_dims[g.node], rows) {
            return Err(Error::shape(
                format!("gain of node {} at time {}", g.node, g.time),
                format!("{}x{}", p.input_dims[g.node], rows),
                format!("{}x{}", g.gain.rows(), g.gain.cols()),
            ));
        }
        if g.measurements.iter().any(|(_, kappa)| *kappa > g.time) {
            return Err(Error::Malformed(format!("node {} uses a future output at time {}", g.node, g.time)));
        }
        table[g.time * nodes + g.node] = Some(g);
    }
    let table: Vec<&TimedGain> = table
        .into_iter()
        .enumerate()
        .map(|(q, g)| g.ok_or_else(|| Error::Malformed(format!("missing gain for node {} at time {}", q % nodes, q / nodes))))
        .collect::<Result<_>>()?;
    let h0 = sqrt_psd(&p.init_cov)?.into_matrix();
    let hw = sqrt_psd(&p.noise_cov)?.into_matrix();
    let full = p.stage.full();

    estimate(samples, seed, exec, |g| {
        let mut x = h0.matvec(&g.gaussians(n));
        // drift = Σ_{τ<k} A^{k−1−τ} B u(τ), the input part of x(k).
        let mut drift = vec![0.0; n];
        let mut corrected: Vec<Vec<Vec<f64>>> = Vec::with_capacity(t);
        let mut cost = 0.0;
        for k in 0..t {
            corrected.push(
                p.c_list
                    .iter()
                    .map(|c| {
                        let raw = c.matvec(&x);
                        let known = c.matvec(&drift);
                        raw.iter().zip(&known).map(|(r, c)| r - c).collect()
                    })
                    .collect(),
            );
            let mut u = vec![0.0; m];
            for i in 0..nodes {
                let gain = table[k * nodes + i];
                let y: Vec<f64> = gain
                    .measurements
                    .iter()
                    .flat_map(|&(l, kappa)| corrected[kappa][l].iter().copied())
                    .collect();
                let ui = gain.gain.matvec(&y);
                u[p.input_offset(i)..p.input_offset(i) + ui.len()].copy_from_slice(&ui);
            }
            let z: Vec<f64> = x.iter().chain(&u).copied().collect();
            cost += full.quad(&z);
            let w = hw.matvec(&g.gaussians(n));
            let ax = p.a.matvec(&x);
            let bu = p.b.matvec(&u);
            let ad = p.a.matvec(&drift);
            x = (0..n).map(|r| ax[r] + bu[r] + w[r]).collect();
            drift = (0..n).map(|r| ad[r] + bu[r]).collect();
        }
        Ok(cost + p.terminal.quad(&x))
    })
}
