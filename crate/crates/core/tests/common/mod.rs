//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use teamlq::dynamic::DynamicTeamProblem;
use teamlq::linalg::{sym_eig, Matrix, SymMatrix};
use teamlq::model::{BlockForm, BlockGain, InfoStructure, StochasticTeamProblem};

pub fn scalar_form(q: f64, s: f64, r: f64) -> BlockForm {
    BlockForm::new(
        SymMatrix::from_diag(&[q]),
        Matrix::from_rows(&[[s]]).unwrap(),
        SymMatrix::from_diag(&[r]),
    )
    .unwrap()
}

/// `x ~ N(0, 4)`, minimize `E u²` subject to `E (x − u)² ≤ 1`.
pub fn scalar_power_problem() -> StochasticTeamProblem {
    StochasticTeamProblem::new(
        scalar_form(0.0, 0.0, 1.0),
        vec![scalar_form(1.0, -1.0, 1.0)],
        vec![1.0],
        SymMatrix::from_diag(&[4.0]),
        InfoStructure::diagonal(1),
    )
}

/// Two scalar players seeing their own coordinate of
/// `x ~ N(0, [[4, 1], [1, 2]])`: minimize `E ‖u‖²` subject to
/// `E (x₁ + x₂ − u₁ − u₂)² ≤ 1`.
pub fn two_player_power_problem() -> StochasticTeamProblem {
    let ones = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
    let constraint = BlockForm::new(
        SymMatrix::symmetrize(ones.clone()),
        ones.scale(-1.0),
        SymMatrix::symmetrize(ones),
    )
    .unwrap();
    StochasticTeamProblem::new(
        BlockForm::new(SymMatrix::zeros(2), Matrix::zeros(2, 2), SymMatrix::identity(2)).unwrap(),
        vec![constraint],
        vec![1.0],
        SymMatrix::from_rows(&[[4.0, 1.0], [1.0, 2.0]]).unwrap(),
        InfoStructure::diagonal(2),
    )
}

/// Expected cost of `u = K y` by expanding `E[(x, KCx)ᵀ M (x, KCx)]`
/// entrywise against `X`.
pub fn brute_expected_cost(form: &BlockForm, gain: &BlockGain, info: &InfoStructure, x: &SymMatrix) -> f64 {
    let f = gain.assemble().matmul(info.c());
    let (n, m) = (form.n(), form.m());
    let mut z = Matrix::zeros(n + m, n);
    for i in 0..n {
        z[(i, i)] = 1.0;
    }
    for r in 0..m {
        for c in 0..n {
            z[(n + r, c)] = f[(r, c)];
        }
    }
    let full = form.full();
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            let mut v = 0.0;
            for p in 0..n + m {
                for q in 0..n + m {
                    v += z[(p, a)] * full.as_matrix()[(p, q)] * z[(q, b)];
                }
            }
            total += v * x.as_matrix()[(a, b)];
        }
    }
    total
}

/// Central finite-difference gradient.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

/// Minimizes a function known to be an exact convex quadratic by
/// identifying its coefficients from point evaluations and solving the
/// normal equations. Returns `(minimum, argmin)`.
pub fn minimize_identified_quadratic(f: impl Fn(&[f64]) -> f64, dim: usize) -> (f64, Vec<f64>) {
    let zero = vec![0.0; dim];
    let c = f(&zero);
    let unit = |i: usize, s: f64| {
        let mut v = zero.clone();
        v[i] = s;
        v
    };
    let plus: Vec<f64> = (0..dim).map(|i| f(&unit(i, 1.0))).collect();
    let minus: Vec<f64> = (0..dim).map(|i| f(&unit(i, -1.0))).collect();
    let b: Vec<f64> = (0..dim).map(|i| (plus[i] - minus[i]) / 4.0).collect();
    let mut a = Matrix::zeros(dim, dim);
    for i in 0..dim {
        a[(i, i)] = (plus[i] + minus[i] - 2.0 * c) / 2.0;
    }
    for i in 0..dim {
        for j in i + 1..dim {
            let mut v = zero.clone();
            v[i] = 1.0;
            v[j] = 1.0;
            let aij = (f(&v) - a[(i, i)] - a[(j, j)] - 2.0 * b[i] - 2.0 * b[j] - c) / 2.0;
            a[(i, j)] = aij;
            a[(j, i)] = aij;
        }
    }
    let theta = pseudo_solve(&SymMatrix::symmetrize(a), &b.iter().map(|v| -v).collect::<Vec<_>>());
    let value = c + b.iter().zip(&theta).map(|(b, t)| b * t).sum::<f64>();
    (value, theta)
}

/// Minimum-norm solution of `A θ = r` for symmetric PSD `A`, dropping
/// eigenvalues below `1e-10·λ_max`.
pub fn pseudo_solve(a: &SymMatrix, r: &[f64]) -> Vec<f64> {
    let e = sym_eig(a).unwrap();
    let cutoff = 1e-10 * e.max().abs();
    let mut theta = vec![0.0; r.len()];
    for (k, &l) in e.values.iter().enumerate() {
        if l > cutoff {
            let v = e.vector(k);
            let coef = v.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() / l;
            theta.iter_mut().zip(&v).for_each(|(t, v)| *t += coef * v);
        }
    }
    theta
}

/// Measurements `(source, time)` node `i` holds at time `k`, by time then
/// source.
pub fn held(p: &DynamicTeamProblem, i: usize, k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for kappa in 0..=k {
        for l in 0..p.nodes() {
            if let Some(d) = p.delays.get(i, l) {
                if kappa + d <= k {
                    out.push((l, kappa));
                }
            }
        }
    }
    out
}

/// Number of free gain entries over all nodes and times.
pub fn dynamic_dof(p: &DynamicTeamProblem) -> usize {
    (0..p.horizon)
        .flat_map(|k| (0..p.nodes()).map(move |i| (i, k)))
        .map(|(i, k)| {
            let rows: usize = held(p, i, k).iter().map(|(l, _)| p.c_list[*l].rows()).sum();
            p.input_dims[i] * rows
        })
        .sum()
}

/// Input-free state maps `x̌(κ) = A^κ x(0) + Σ_{τ<κ} A^{κ−1−τ} w(τ)` as
/// matrices acting on `(x(0), w(0), …, w(T−1))`, for `κ = 0..=T`.
pub fn free_state_maps(p: &DynamicTeamProblem) -> Vec<Matrix> {
    let (n, t) = (p.n(), p.horizon);
    let d = n * (t + 1);
    let mut x = Matrix::zeros(n, d);
    x.set_block(0, 0, &Matrix::identity(n));
    let mut out = vec![x];
    for k in 0..t {
        let mut next = p.a.matmul(&out[k]);
        let mut w = Matrix::zeros(n, d);
        w.set_block(0, n * (k + 1), &Matrix::identity(n));
        next.axpy(1.0, &w);
        out.push(next);
    }
    out
}

/// Exact expected cost of time-indexed linear policies on control-free
/// outputs, by propagating the state as a linear map of
/// `(x(0), w(0), …, w(T−1))`. `theta` stacks each `(node, time)` gain
/// row-major, ordered by time then node.
pub fn dynamic_exact_cost(p: &DynamicTeamProblem, theta: &[f64]) -> f64 {
    let (n, t) = (p.n(), p.horizon);
    let d = n * (t + 1);
    let mut sigma = Matrix::zeros(d, d);
    sigma.set_block(0, 0, p.init_cov.as_matrix());
    for k in 0..t {
        sigma.set_block(n * (k + 1), n * (k + 1), p.noise_cov.as_matrix());
    }
    let sigma = SymMatrix::symmetrize(sigma);
    let noise = |k: usize| {
        let mut w = Matrix::zeros(n, d);
        w.set_block(0, n * (k + 1), &Matrix::identity(n));
        w
    };
    let free = free_state_maps(p);
    let mut x = free[0].clone();
    let full = p.stage.full();
    let mut cost = 0.0;
    let mut offset = 0;
    for k in 0..t {
        let mut u = Matrix::zeros(p.m(), d);
        for i in 0..p.nodes() {
            let meas = held(p, i, k);
            let rows: Vec<Matrix> = meas.iter().map(|(l, kappa)| p.c_list[*l].matmul(&free[*kappa])).collect();
            let y = Matrix::vstack(d, &rows.iter().collect::<Vec<_>>());
            let mi = p.input_dims[i];
            let g = Matrix::new(mi, y.rows(), theta[offset..offset + mi * y.rows()].to_vec()).unwrap();
            offset += mi * y.rows();
            u.set_block(p.input_offset(i), 0, &g.matmul(&y));
        }
        let z = Matrix::vstack(d, &[&x, &u]);
        cost += full.congruence(&z).as_matrix().dot(sigma.as_matrix());
        let mut next = p.a.matmul(&x);
        next.axpy(1.0, &p.b.matmul(&u));
        next.axpy(1.0, &noise(k));
        x = next;
    }
    cost + p.terminal.congruence(&x).as_matrix().dot(sigma.as_matrix())
}

/// Least-squares line through `(xs, ys)`; returns its `R²`.
pub fn linear_fit_r2(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - my - slope * (x - mx);
            r * r
        })
        .sum();
    1.0 - sse / syy
}

/// Smallest `|u|` on a uniform grid over `[lo, hi]` with `(x − u)² ≤ γ`.
pub fn grid_min_power(x: f64, gamma: f64, lo: f64, hi: f64, points: usize) -> Option<f64> {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .filter(|u| (x - u) * (x - u) <= gamma)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
}
