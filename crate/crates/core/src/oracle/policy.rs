use std::fmt;
use std::sync::Arc;

use super::estimate::{estimate, McEstimate};
use super::GaussianStream;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{sqrt_psd, Matrix, SymMatrix};
use crate::model::{BlockForm, BlockGain, InfoStructure};

/// Piecewise-constant scalar map: `values[b]` on the `b`-th interval of
/// `(−∞, t_0), [t_0, t_1), …, [t_last, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::shape("table values", breakpoints.len() + 1, values.len()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Malformed("table breakpoints must be strictly increasing".into()));
        }
        if breakpoints.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Malformed("table entries must be finite".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bin(&self, y: f64) -> usize {
        self.breakpoints.partition_point(|t| *t <= y)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.values[self.bin(y)]
    }
}

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A decentralized policy `u_i = μ_i(y_i)`.
#[derive(Clone)]
pub enum Policy {
    Linear(BlockGain),
    /// One table per player; every player must have `m_i = p_i = 1`.
    Table(Vec<PiecewiseConstant>),
    /// One scalar function per player; same restriction as tables.
    Callback(Vec<ScalarMap>),
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Linear(k) => f.debug_tuple("Linear").field(k).finish(),
            Policy::Table(t) => f.debug_tuple("Table").field(t).finish(),
            Policy::Callback(c) => write!(f, "Callback({} players)", c.len()),
        }
    }
}

impl Policy {
    /// Checks the policy against the player layout.
    pub fn check(&self, info: &InfoStructure) -> Result<()> {
        let scalar = |count: usize, kind: &str| -> Result<()> {
            if count != info.num_players() {
                return Err(Error::shape(format!("{kind} policy players"), info.num_players(), count));
            }
            if let Some((i, pl)) = info.players().iter().enumerate().find(|(_, pl)| pl.m != 1 || pl.p != 1) {
                return Err(Error::UnsupportedPolicy(format!(
                    "{kind} policies need scalar measurements and decisions, player {i} has p={}, m={}",
                    pl.p, pl.m
                )));
            }
            Ok(())
        };
        match self {
            Policy::Linear(k) => k.matches(info),
            Policy::Table(t) => scalar(t.len(), "table"),
            Policy::Callback(c) => scalar(c.len(), "callback"),
        }
    }

    /// Decisions for the stacked measurement `y`; call [`Policy::check`] first.
    pub fn decide(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Policy::Linear(k) => k.apply(y),
            Policy::Table(t) => t.iter().zip(y).map(|(t, y)| t.eval(*y)).collect(),
            Policy::Callback(c) => c.iter().zip(y).map(|(f, y)| f(*y)).collect(),
        }
    }
}

/// Draws `x ~ N(0, X)` as `H z` with `H = X^{1/2}`.
#[derive(Debug, Clone)]
pub(crate) struct StateSampler {
    h: Matrix,
    z: usize,
}

impl StateSampler {
    pub fn new(x: &SymMatrix) -> Result<Self> {
        Ok(Self {
            h: sqrt_psd(x)?.into_matrix(),
            z: x.dim(),
        })
    }

    pub fn draw(&self, g: &mut GaussianStream) -> Vec<f64> {
        self.h.matvec(&g.gaussians(self.z))
    }
}

fn check_dims(form: &BlockForm, info: &InfoStructure, x: &SymMatrix) -> Result<()> {
    if form.n() != info.n() || x.dim() != info.n() {
        return Err(Error::shape("state dimension", info.n(), format!("form {}, covariance {}", form.n(), x.dim())));
    }
    if form.m() != info.m() {
        return Err(Error::shape("decision dimension", info.m(), form.m()));
    }
    Ok(())
}

/// Monte Carlo estimate of `E[(x, μ(Cx))ᵀ M (x, μ(Cx))]`, `x ~ N(0, X)`.
///
/// Sample `i` uses ChaCha8 stream `i` keyed by `seed`, so the estimate is
/// reproducible bit for bit and independent of the execution mode.
pub fn mc_cost(
    policy: &Policy,
    form: &BlockForm,
    info: &InfoStructure,
    x: &SymMatrix,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_cost_with(policy, form, info, x, samples, seed, Execution::default())
}

pub fn mc_cost_with(
    policy: &Policy,
    form: &BlockForm,
    info: &InfoStructure,
    x: &SymMatrix,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    policy.check(info)?;
    check_dims(form, info, x)?;
    let sampler = StateSampler::new(x)?;
    estimate(samples, seed, exec, |g| {
        let s = sampler.draw(g);
        let u = policy.decide(&info.c().matvec(&s));
        Ok(form.eval(&s, &u))
    })
}

/// Estimate of `E[cost(a) − cost(b)]` evaluating both policies on the same
/// draws (common random numbers).
pub fn mc_difference(
    a: &Policy,
    b: &Policy,
    form: &BlockForm,
    info: &InfoStructure,
    x: &SymMatrix,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    a.check(info)?;
    b.check(info)?;
    check_dims(form, info, x)?;
    let sampler = StateSampler::new(x)?;
    estimate(samples, seed, exec, |g| {
        let s = sampler.draw(g);
        let y = info.c().matvec(&s);
        Ok(form.eval(&s, &a.decide(&y)) - form.eval(&s, &b.decide(&y)))
    })
}

/// Pointwise minimizer of `‖u‖²` subject to `‖x − u‖² ≤ γ`:
/// `(‖x‖ − √γ) x / ‖x‖` when `‖x‖² > γ`, otherwise `0`.
pub fn soft_threshold(x: &[f64], gamma: f64) -> Vec<f64> {
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if norm2 > gamma {
        let norm = norm2.sqrt();
        let scale = (norm - gamma.sqrt()) / norm;
        x.iter().map(|v| v * scale).collect()
    } else {
        vec![0.0; x.len()]
    }
}
