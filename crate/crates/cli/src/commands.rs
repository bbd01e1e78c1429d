use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use teamlq::dynamic::{lift_to_static, solve_dynamic, DynamicTeamProblem};
use teamlq::linalg::max_eigenvalue;
use teamlq::minimax::{
    feasibility_search, game_value, lmi_block, FeasibilityOptions, FeasibilityStatus, GameValueOptions,
    FEASIBILITY_TOLERANCE,
};
use teamlq::model::{closed_loop_form, DeterministicMode, DeterministicTeamProblem, StochasticTeamProblem};
use teamlq::oracle::{mc_cost_with, nonlinear_search, rollout_cost, Policy, SearchGrid, SearchOptions};
use teamlq::stochastic::{build_lmi_certificate, solve_constrained, ConstraintCertificate, SolveOptions, SolveStatus};
use teamlq::Execution;

use crate::error::{CliError, EXIT_INFEASIBLE, EXIT_NUMERICAL, EXIT_OK};
use crate::report::{
    gain_rows, CertificateEntry, ConstraintCheck, DeterministicVerifyResult, DynamicResult, Estimate,
    FeasibilityResult, FormCheck, Format, GameValueResult, LiftedPlayerEntry, Options, ReduceResult, Report,
    SearchResult, StochasticResult, StochasticVerifyResult, TableEntry, TimedGainEntry, TOOL, VERSION,
};
use crate::schema::{parse_gain, parse_problem, write_problem, Kind, Problem};

const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Parser)]
#[command(name = "teamlq", version, about = "Linear-quadratic team decision problems with quadratic constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Convergence tolerance (each command has its own default)
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Iteration cap (each command has its own default)
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo sample count
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Write the report here instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Worker threads for sampling and restarts; 1 runs sequentially
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize expected cost subject to expected-cost constraints
    SolveStochastic { problem: PathBuf },
    /// Search for a gain meeting every worst-case constraint
    SolveMinimax {
        problem: PathBuf,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
    },
    /// Bisect on the worst-case value of the objective form
    GameValue {
        problem: PathBuf,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
    },
    /// Emit the static problem equivalent to a dynamic one
    ReduceDynamic { problem: PathBuf },
    /// Lift, solve and split the gain back per node and time
    SolveDynamic { problem: PathBuf },
    /// Check a gain against a problem by certificate and Monte Carlo
    Verify {
        problem: PathBuf,
        /// JSON object with a "K" field, e.g. a solve report
        #[arg(long)]
        gain: PathBuf,
    },
    /// Compare piecewise-constant policies with the optimal linear gain
    OracleSearch {
        problem: PathBuf,
        #[arg(long, default_value_t = 21)]
        bins: usize,
        /// Table half-width in measurement standard deviations
        #[arg(long, default_value_t = 4.0)]
        range: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SolveStochastic { .. } => "solve-stochastic",
            Command::SolveMinimax { .. } => "solve-minimax",
            Command::GameValue { .. } => "game-value",
            Command::ReduceDynamic { .. } => "reduce-dynamic",
            Command::SolveDynamic { .. } => "solve-dynamic",
            Command::Verify { .. } => "verify",
            Command::OracleSearch { .. } => "oracle-search",
        }
    }

    fn problem(&self) -> &Path {
        match self {
            Command::SolveStochastic { problem }
            | Command::SolveMinimax { problem, .. }
            | Command::GameValue { problem, .. }
            | Command::ReduceDynamic { problem }
            | Command::SolveDynamic { problem }
            | Command::Verify { problem, .. }
            | Command::OracleSearch { problem, .. } => problem,
        }
    }
}

struct Outcome {
    status: String,
    exit_code: i32,
    result: Value,
    /// Replaces the machine report (used to emit a problem document).
    document: Option<String>,
}

impl Outcome {
    fn new(status: &str, exit_code: i32, result: impl Serialize) -> Self {
        Self {
            status: status.into(),
            exit_code,
            result: serde_json::to_value(result).expect("results serialize"),
            document: None,
        }
    }
}

/// Per-command settings resolved from the flags.
struct Settings {
    tol: Option<f64>,
    max_iter: Option<usize>,
    seed: u64,
    samples: usize,
    /// `--samples` was given, so `solve-dynamic` also runs a rollout check.
    rollout: bool,
    execution: Execution,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let start = Instant::now();
    let c = &cli.common;
    if c.threads == Some(0) {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    if c.samples.is_some_and(|s| s < 2) {
        return Err(CliError::Input("--samples must be at least 2".into()));
    }
    if c.tol.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
        return Err(CliError::Input("--tol must be positive and finite".into()));
    }
    let problem = parse_problem(&read(cli.command.problem())?)?;
    let settings = Settings {
        tol: c.tol,
        max_iter: c.max_iter,
        seed: c.seed,
        samples: c.samples.unwrap_or(DEFAULT_SAMPLES),
        rollout: c.samples.is_some(),
        execution: if c.threads == Some(1) {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    let mut options = Options {
        tol: 0.0,
        max_iter: 0,
        seed: c.seed,
        samples: settings.samples,
        threads: c.threads,
        format: c.format,
        restarts: None,
        bins: None,
        range_sigmas: None,
        gain_file: None,
    };
    let outcome = with_threads(c.threads, || dispatch(&cli.command, &problem, &settings, &mut options))??;
    let report = Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: cli.command.name().into(),
        input: cli.command.problem().display().to_string(),
        options,
        status: outcome.status,
        exit_code: outcome.exit_code,
        result: outcome.result,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let text = match (c.format, outcome.document) {
        (Format::Machine, Some(doc)) => doc,
        _ => report.render(c.format),
    };
    match &c.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })?,
    }
    Ok(report.exit_code)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads.filter(|&n| n > 1) {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?;
        return Ok(pool.install(f));
    }
    #[cfg(not(feature = "parallel"))]
    if threads.is_some_and(|n| n > 1) {
        log::warn!("built without the parallel feature; running sequentially");
    }
    Ok(f())
}

fn wrong_kind(command: &str, found: Kind) -> CliError {
    CliError::Input(format!("{command} does not accept {found} problems"))
}

fn dispatch(cmd: &Command, problem: &Problem, s: &Settings, o: &mut Options) -> Result<Outcome, CliError> {
    match (cmd, problem) {
        (Command::SolveStochastic { .. }, Problem::Stochastic(p)) => solve_stochastic(p, s, o),
        (Command::SolveMinimax { restarts, .. }, Problem::Deterministic(p)) => solve_minimax(p, *restarts, s, o),
        (Command::GameValue { restarts, .. }, Problem::Deterministic(p)) => run_game_value(p, *restarts, s, o),
        (Command::ReduceDynamic { .. }, Problem::Dynamic(p)) => reduce(p, o),
        (Command::SolveDynamic { .. }, Problem::Dynamic(p)) => run_solve_dynamic(p, s, o),
        (Command::Verify { gain, .. }, Problem::Stochastic(p)) => {
            o.gain_file = Some(gain.display().to_string());
            verify_stochastic(p, &read(gain)?, s, o)
        }
        (Command::Verify { gain, .. }, Problem::Deterministic(p)) => {
            o.gain_file = Some(gain.display().to_string());
            verify_deterministic(p, &read(gain)?, s, o)
        }
        (Command::OracleSearch { bins, range, .. }, Problem::Stochastic(p)) => oracle_search(p, *bins, *range, s, o),
        (cmd, p) => Err(wrong_kind(cmd.name(), p.kind())),
    }
}

fn solve_options(s: &Settings, o: &mut Options) -> SolveOptions {
    let d = SolveOptions::default();
    let opts = SolveOptions {
        tol: s.tol.unwrap_or(d.tol),
        max_iter: s.max_iter.unwrap_or(d.max_iter),
        seed: s.seed,
        method: d.method,
    };
    o.tol = opts.tol;
    o.max_iter = opts.max_iter;
    opts
}

fn status_code(status: &SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::MaxIter | SolveStatus::Infeasible { .. } => EXIT_INFEASIBLE,
        SolveStatus::UnboundedDetected => EXIT_NUMERICAL,
    }
}

fn certificate_entry(c: &ConstraintCertificate) -> CertificateEntry {
    CertificateEntry {
        min_eig: c.min_eig,
        trace: c.trace,
        bound: c.bound,
        regularization: c.regularization,
        valid: c.is_valid(),
    }
}

fn solve_stochastic(p: &StochasticTeamProblem, s: &Settings, o: &mut Options) -> Result<Outcome, CliError> {
    let r = solve_constrained(p, &solve_options(s, o))?;
    let cert = build_lmi_certificate(p, &r.k_star)?;
    let ray = match &r.status {
        SolveStatus::Infeasible { ray, .. } => Some(ray.clone()),
        _ => None,
    };
    let result = StochasticResult {
        k: gain_rows(&r.k_star),
        lambda: r.lambda_star.clone(),
        primal_value: r.primal_value,
        dual_value: r.dual_value,
        gap: r.gap,
        constraint_values: r.constraint_values.clone(),
        iterations: r.iterations,
        rank_deficient: r.rank_deficient,
        infeasibility_ray: ray,
        certificate: cert.constraints.iter().map(certificate_entry).collect(),
    };
    Ok(Outcome::new(r.status.name(), status_code(&r.status), result))
}

fn feasibility_options(restarts: usize, tol: f64, s: &Settings, o: &mut Options) -> FeasibilityOptions {
    let d = FeasibilityOptions::default();
    let opts = FeasibilityOptions {
        tol,
        max_iter: s.max_iter.unwrap_or(d.max_iter),
        restarts,
        seed: s.seed,
        execution: s.execution,
        warm_start: None,
    };
    o.max_iter = opts.max_iter;
    o.restarts = Some(restarts);
    opts
}

fn solve_minimax(p: &DeterministicTeamProblem, restarts: usize, s: &Settings, o: &mut Options) -> Result<Outcome, CliError> {
    if p.mode != DeterministicMode::Feasibility {
        return Err(CliError::Input("solve-minimax needs a document in feasibility mode".into()));
    }
    let tol = s.tol.unwrap_or(FeasibilityOptions::default().tol);
    o.tol = tol;
    let r = feasibility_search(p, &feasibility_options(restarts, tol, s, o))?;
    let code = match r.status {
        FeasibilityStatus::Feasible => EXIT_OK,
        _ => EXIT_INFEASIBLE,
    };
    Ok(Outcome::new(r.status.name(), code, FeasibilityResult::from(&r)))
}

fn run_game_value(p: &DeterministicTeamProblem, restarts: usize, s: &Settings, o: &mut Options) -> Result<Outcome, CliError> {
    if !matches!(p.mode, DeterministicMode::GameValue { .. }) {
        return Err(CliError::Input("game-value needs a document in game-value mode".into()));
    }
    let d = GameValueOptions::default();
    let opts = GameValueOptions {
        resolution: s.tol.unwrap_or(d.resolution),
        feasibility: feasibility_options(restarts, d.feasibility.tol, s, o),
    };
    o.tol = opts.resolution;
    let r = game_value(p, &opts)?;
    let result = GameValueResult {
        gamma_star: r.gamma_star,
        k: gain_rows(&r.k),
        bisection_interval: [r.bisection_interval.0, r.bisection_interval.1],
        bisection_steps: r.bisection_steps,
        certificate: FeasibilityResult::from(&r.certificate),
    };
    Ok(Outcome::new("converged", EXIT_OK, result))
}

fn reduce(p: &DynamicTeamProblem, o: &mut Options) -> Result<Outcome, CliError> {
    let lifted = lift_to_static(p)?;
    let sp = &lifted.static_problem;
    let players = lifted
        .index_map
        .iter()
        .enumerate()
        .map(|(q, lp)| LiftedPlayerEntry {
            player: q,
            node: lp.node,
            time: lp.time,
            decision_offset: lp.decision_offset,
            m: lp.m,
            measurements: lifted.held_measurements(q).iter().map(|&(l, k)| [l, k]).collect(),
        })
        .collect();
    let result = ReduceResult {
        n: sp.n(),
        m: sp.m(),
        p: sp.c().rows(),
        players,
    };
    o.tol = 0.0;
    let mut outcome = Outcome::new("partially-nested", EXIT_OK, result);
    outcome.document = Some(write_problem(&Problem::Stochastic(sp.clone())));
    Ok(outcome)
}

fn run_solve_dynamic(p: &DynamicTeamProblem, s: &Settings, o: &mut Options) -> Result<Outcome, CliError> {
    let sol = solve_dynamic(p, &solve_options(s, o))?;
    let r = &sol.report;
    let rollout = match s.rollout {
        false => None,
        true => Some(Estimate::from(rollout_cost(p, &sol.gains, s.samples, s.seed, s.execution)?)),
    };
    let result = DynamicResult {
        gains: sol
            .gains
            .iter()
            .map(|g| TimedGainEntry {
                node: g.node,
                time: g.time,
                gain: g.gain.to_rows(),
                measurements: g.measurements.iter().map(|&(l, k)| [l, k]).collect(),
            })
            .collect(),
        lambda: r.lambda_star.clone(),
        primal_value: r.primal_value,
        dual_value: r.dual_value,
        gap: r.gap,
        constraint_values: r.constraint_values.clone(),
        iterations: r.iterations,
        rollout,
    };
    Ok(Outcome::new(r.status.name(), status_code(&r.status), result))
}

fn verify_stochastic(p: &StochasticTeamProblem, gain: &str, s: &Settings, o: &mut Options) -> Result<Outcome, CliError> {
    let k = parse_gain(gain, &p.info)?;
    let cert = build_lmi_certificate(p, &k)?;
    let policy = Policy::Linear(k.clone());
    let estimate = |j: usize| -> Result<Estimate, CliError> {
        let form = if j == 0 { &p.objective } else { &p.constraints[j - 1] };
        let e = mc_cost_with(&policy, form, &p.info, &p.covariance, s.samples, s.seed, s.execution)?;
        Ok(e.into())
    };
    let constraints = cert
        .constraints
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let value = p.form_cost(j + 1, &k)?;
            let mc = estimate(j + 1)?;
            Ok(ConstraintCheck {
                index: j,
                value,
                bound: p.bounds[j],
                certificate: certificate_entry(c),
                monte_carlo_agrees: agrees(&mc, value),
                monte_carlo: mc,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let violated = cert.violated();
    let result = StochasticVerifyResult {
        objective_value: p.form_cost(0, &k)?,
        objective_monte_carlo: estimate(0)?,
        constraints,
        violated: violated.clone(),
    };
    o.tol = teamlq::stochastic::CERTIFICATE_TOLERANCE;
    if !violated.is_empty() {
        eprintln!("violated constraints: {violated:?}");
    }
    Ok(if violated.is_empty() {
        Outcome::new("certified", EXIT_OK, result)
    } else {
        Outcome::new("violated", EXIT_INFEASIBLE, result)
    })
}

fn agrees(e: &Estimate, value: f64) -> bool {
    (e.mean - value).abs() <= 4.0 * e.std_error + 1e-12 * (1.0 + value.abs())
}

fn verify_deterministic(p: &DeterministicTeamProblem, gain: &str, s: &Settings, o: &mut Options) -> Result<Outcome, CliError> {
    let k = parse_gain(gain, &p.info)?;
    let tol = s.tol.unwrap_or(FEASIBILITY_TOLERANCE);
    o.tol = tol;
    let objective = match p.mode {
        DeterministicMode::GameValue { objective } => Some(objective),
        DeterministicMode::Feasibility => None,
    };
    let forms = p
        .forms
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let max_eig = max_eigenvalue(&closed_loop_form(f, &k, p.info.c())?)?;
            let lmi_max_eig = max_eigenvalue(&lmi_block(f, &k, p.info.c())?)?;
            let valid = Some(j) == objective || (max_eig <= tol && lmi_max_eig <= tol);
            Ok(FormCheck {
                index: j,
                max_eig,
                lmi_max_eig,
                valid,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let violated: Vec<usize> = forms.iter().filter(|f| !f.valid).map(|f| f.index).collect();
    if !violated.is_empty() {
        eprintln!("violated constraints: {violated:?}");
    }
    let result = DeterministicVerifyResult {
        forms,
        violated: violated.clone(),
    };
    Ok(if violated.is_empty() {
        Outcome::new("certified", EXIT_OK, result)
    } else {
        Outcome::new("violated", EXIT_INFEASIBLE, result)
    })
}

fn oracle_search(p: &StochasticTeamProblem, bins: usize, range: f64, s: &Settings, o: &mut Options) -> Result<Outcome, CliError> {
    let solved = solve_constrained(p, &solve_options(s, o))?;
    if solved.status != SolveStatus::Optimal {
        return Ok(Outcome::new(
            solved.status.name(),
            status_code(&solved.status),
            serde_json::json!({ "lambda": solved.lambda_star }),
        ));
    }
    let d = SearchOptions::default();
    let opts = SearchOptions {
        grid: SearchGrid {
            range_sigmas: range,
            bins,
        },
        samples: s.samples,
        seed: s.seed,
        execution: s.execution,
        start: None,
        max_sweeps: s.max_iter.unwrap_or(d.max_sweeps),
        tol: s.tol.unwrap_or(d.tol),
    };
    o.bins = Some(bins);
    o.range_sigmas = Some(range);
    let r = nonlinear_search(p, &solved.lambda_star, &solved.k_star, &opts)?;
    let tables = match &r.policy {
        Policy::Table(t) => t
            .iter()
            .map(|t| TableEntry {
                breakpoints: t.breakpoints().to_vec(),
                values: t.values().to_vec(),
            })
            .collect(),
        _ => Vec::new(),
    };
    let improves = r.improves_on_linear(4.0);
    let result = SearchResult {
        lambda: r.lambda.clone(),
        k: gain_rows(&solved.k_star),
        tables,
        in_sample: r.in_sample,
        table_cost: r.table_cost.into(),
        linear_cost: r.linear_cost.into(),
        difference: r.difference.into(),
        improves_on_linear: improves,
        sweeps: r.sweeps,
    };
    let status = if improves { "tables-improve" } else { "linear-not-beaten" };
    Ok(Outcome::new(status, EXIT_OK, result))
}
