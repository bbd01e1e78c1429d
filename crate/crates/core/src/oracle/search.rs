use super::estimate::{chunk_ranges, estimate, pairwise, sample_stream, McEstimate};
use super::policy::{PiecewiseConstant, Policy, StateSampler};
use super::GaussianStream;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{BlockForm, BlockGain, StochasticTeamProblem};

/// Table layout: `bins` intervals per player with breakpoints spread evenly
/// over `±range_sigmas·σ_i`, where `σ_i² = Var y_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    pub range_sigmas: f64,
    pub bins: usize,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            range_sigmas: 4.0,
            bins: 21,
        }
    }
}

impl SearchGrid {
    /// `bins − 1` breakpoints from `−rσ` to `rσ`.
    pub fn breakpoints(&self, sigma: f64) -> Vec<f64> {
        let half = self.range_sigmas * sigma;
        let count = self.bins - 1;
        if count == 1 {
            return vec![0.0];
        }
        (0..count)
            .map(|i| -half + 2.0 * half * i as f64 / (count - 1) as f64)
            .collect()
    }

    /// Representative point of each bin: midpoints inside, half a spacing
    /// beyond the outermost breakpoints.
    fn centers(breakpoints: &[f64]) -> Vec<f64> {
        let step = if breakpoints.len() > 1 {
            breakpoints[1] - breakpoints[0]
        } else {
            1.0
        };
        let mut out = Vec::with_capacity(breakpoints.len() + 1);
        out.push(breakpoints[0] - 0.5 * step);
        out.extend(breakpoints.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        out.push(breakpoints[breakpoints.len() - 1] + 0.5 * step);
        out
    }
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub grid: SearchGrid,
    pub samples: usize,
    pub seed: u64,
    pub execution: Execution,
    /// Initial table values are this gain evaluated at the bin centers;
    /// defaults to the linear comparison gain.
    pub start: Option<BlockGain>,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            grid: SearchGrid::default(),
            samples: 100_000,
            seed: 0,
            execution: Execution::default(),
            start: None,
            max_sweeps: 1000,
            tol: 1e-12,
        }
    }
}

/// Outcome of a table-policy search on the Lagrangian at fixed multipliers.
///
/// All estimates are of `E[zᵀ(M_0 + Σ λ_j M_j)z] − Σ λ_j γ_j` and use
/// samples independent of those the tables were fitted on.
#[derive(Debug, Clone)]
pub struct SearchReport {
    pub policy: Policy,
    pub lambda: Vec<f64>,
    /// Sample-average Lagrangian of the fitted tables on the fitting draws.
    pub in_sample: f64,
    pub table_cost: McEstimate,
    pub linear_cost: McEstimate,
    /// Table minus linear on common draws.
    pub difference: McEstimate,
    pub sweeps: usize,
}

impl SearchReport {
    /// The tables beat the linear gain by more than `k` standard errors.
    pub fn improves_on_linear(&self, k: f64) -> bool {
        self.difference.mean < -k * self.difference.std_error
    }
}

/// Sample sums of the Lagrangian as a quadratic in the stacked table values
/// `v`: `Σ cost = c + 2 gᵀv + vᵀHv`.
#[derive(Debug, Clone)]
struct TableQuadratic {
    count: usize,
    c: f64,
    g: Vec<f64>,
    h: Vec<f64>,
}

impl TableQuadratic {
    fn zeros(dim: usize) -> Self {
        Self {
            count: 0,
            c: 0.0,
            g: vec![0.0; dim],
            h: vec![0.0; dim * dim],
        }
    }

    fn merge(mut a: Self, b: Self) -> Self {
        a.count += b.count;
        a.c += b.c;
        a.g.iter_mut().zip(&b.g).for_each(|(x, y)| *x += y);
        a.h.iter_mut().zip(&b.h).for_each(|(x, y)| *x += y);
        a
    }
}

/// Coordinate descent over per-player piecewise-constant tables on the
/// Lagrangian `M_0 + Σ λ_j M_j`.
///
/// Each player must have a scalar measurement and a scalar decision. The
/// sample Lagrangian is exactly quadratic in the table values, so it is
/// accumulated once and each coordinate step minimizes it exactly.
/// `linear` is the comparison gain, usually the solver's `K⋆` at `lambda`.
pub fn nonlinear_search(
    problem: &StochasticTeamProblem,
    lambda: &[f64],
    linear: &BlockGain,
    opts: &SearchOptions,
) -> Result<SearchReport> {
    let info = &problem.info;
    if let Some((i, pl)) = info.players().iter().enumerate().find(|(_, pl)| pl.m != 1 || pl.p != 1) {
        return Err(Error::UnsupportedPolicy(format!(
            "table search needs scalar measurements and decisions, player {i} has p={}, m={}",
            pl.p, pl.m
        )));
    }
    if lambda.len() != problem.constraints.len() || problem.bounds.len() != lambda.len() {
        return Err(Error::shape("multipliers", problem.constraints.len(), lambda.len()));
    }
    if lambda.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::Malformed("multipliers must be finite and nonnegative".into()));
    }
    if opts.grid.bins < 2 || !(opts.grid.range_sigmas > 0.0) {
        return Err(Error::Malformed("search grid needs at least 2 bins and a positive range".into()));
    }
    linear.matches(info)?;
    let start = opts.start.as_ref().unwrap_or(linear);
    start.matches(info)?;

    let form = problem
        .constraints
        .iter()
        .zip(lambda)
        .fold(problem.objective.clone(), |acc, (f, l)| acc.add_scaled(*l, f));
    let offset: f64 = lambda.iter().zip(&problem.bounds).map(|(l, g)| l * g).sum();

    let players = info.num_players();
    let bins = opts.grid.bins;
    let y_cov = problem.covariance.congruence(&info.c().transpose());
    let tables: Vec<Vec<f64>> = (0..players)
        .map(|i| {
            let var = y_cov.as_matrix()[(i, i)];
            let sigma = if var > 0.0 { var.sqrt() } else { 1.0 };
            opts.grid.breakpoints(sigma)
        })
        .collect();

    let quad = accumulate(problem, &form, &tables, bins, opts)?;
    let dim = players * bins;
    let scale = 1.0 / quad.count as f64;

    let mut v: Vec<f64> = (0..players)
        .flat_map(|i| {
            let k = start.block(i)[(0, 0)];
            SearchGrid::centers(&tables[i]).into_iter().map(move |y| k * y)
        })
        .collect();
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut change: f64 = 0.0;
        for a in 0..dim {
            let haa = quad.h[a * dim + a];
            if haa <= 0.0 {
                continue;
            }
            let row = &quad.h[a * dim..(a + 1) * dim];
            let grad: f64 = row.iter().zip(&v).map(|(h, x)| h * x).sum::<f64>() + quad.g[a];
            let step = grad / haa;
            v[a] -= step;
            change = change.max(step.abs() / (1.0 + v[a].abs()));
        }
        if change <= opts.tol {
            break;
        }
    }
    let in_sample = scale
        * (quad.c
            + 2.0 * quad.g.iter().zip(&v).map(|(g, x)| g * x).sum::<f64>()
            + (0..dim)
                .map(|a| v[a] * quad.h[a * dim..(a + 1) * dim].iter().zip(&v).map(|(h, x)| h * x).sum::<f64>())
                .sum::<f64>())
        - offset;

    let policy = Policy::Table(
        tables
            .into_iter()
            .enumerate()
            .map(|(i, t)| PiecewiseConstant::new(t, v[i * bins..(i + 1) * bins].to_vec()))
            .collect::<Result<Vec<_>>>()?,
    );
    let lin = Policy::Linear(linear.clone());
    let sampler = StateSampler::new(&problem.covariance)?;
    let eval_seed = opts.seed.wrapping_add(1);
    let both = |g: &mut GaussianStream, which: u8| {
        let s = sampler.draw(g);
        let y = info.c().matvec(&s);
        let t = form.eval(&s, &policy.decide(&y));
        let l = form.eval(&s, &lin.decide(&y));
        match which {
            0 => t - offset,
            1 => l - offset,
            _ => t - l,
        }
    };
    let run = |which: u8| estimate(opts.samples, eval_seed, opts.execution, |g| Ok(both(g, which)));
    let table_cost = run(0)?;
    let linear_cost = run(1)?;
    let difference = run(2)?;
    Ok(SearchReport {
        policy,
        lambda: lambda.to_vec(),
        in_sample,
        table_cost,
        linear_cost,
        difference,
        sweeps,
    })
}

fn accumulate(
    problem: &StochasticTeamProblem,
    form: &BlockForm,
    tables: &[Vec<f64>],
    bins: usize,
    opts: &SearchOptions,
) -> Result<TableQuadratic> {
    if opts.samples < 2 {
        return Err(Error::Malformed(format!("at least 2 samples are needed, got {}", opts.samples)));
    }
    let info = &problem.info;
    let players = tables.len();
    let dim = players * bins;
    let sampler = StateSampler::new(&problem.covariance)?;
    let base = GaussianStream::base(opts.seed);
    let ranges = chunk_ranges(opts.samples);
    let parts = opts.execution.map_indexed(ranges.len(), |c| {
        let (start, end) = ranges[c];
        let mut acc = TableQuadratic::zeros(dim);
        let mut idx = vec![0usize; players];
        for s in start..end {
            let x = sampler.draw(&mut sample_stream(&base, s));
            let y = info.c().matvec(&x);
            for i in 0..players {
                idx[i] = i * bins + tables[i].partition_point(|t| *t <= y[i]);
            }
            let sx = form.s.tr_matvec(&x);
            acc.count += 1;
            acc.c += form.q.quad(&x);
            for i in 0..players {
                acc.g[idx[i]] += sx[i];
                for j in 0..players {
                    acc.h[idx[i] * dim + idx[j]] += form.r.as_matrix()[(i, j)];
                }
            }
        }
        acc
    });
    Ok(pairwise(parts, TableQuadratic::merge).expect("nonempty"))
}
