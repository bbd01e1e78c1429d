//! JSON problem documents.
//!
//! A document is `{"schema_version", "kind", "payload"}`. Matrices are
//! arrays of rows; dimensions are inferred from the covariance (or `A`) and
//! the player layout, then cross-checked. Unknown fields are rejected.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use teamlq::dynamic::{DelayPattern, DynamicTeamProblem};
use teamlq::linalg::{Matrix, SymMatrix};
use teamlq::model::{
    validate_problem, BlockForm, BlockGain, DeterministicMode, DeterministicTeamProblem, InfoStructure, Player,
    StochasticTeamProblem,
};

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1.0";

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Stochastic(StochasticTeamProblem),
    Deterministic(DeterministicTeamProblem),
    Dynamic(DynamicTeamProblem),
}

impl Problem {
    pub fn kind(&self) -> Kind {
        match self {
            Problem::Stochastic(_) => Kind::Stochastic,
            Problem::Deterministic(_) => Kind::Deterministic,
            Problem::Dynamic(_) => Kind::Dynamic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Stochastic,
    Deterministic,
    Dynamic,
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Kind::Stochastic => "stochastic",
            Kind::Deterministic => "deterministic",
            Kind::Dynamic => "dynamic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    schema_version: String,
    kind: Kind,
    payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormDoc {
    #[serde(rename = "Q")]
    pub q: Rows,
    #[serde(rename = "S")]
    pub s: Rows,
    #[serde(rename = "R")]
    pub r: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerDoc {
    pub m: usize,
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoDoc {
    pub players: Vec<PlayerDoc>,
    #[serde(rename = "C")]
    pub c: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticDoc {
    pub objective: FormDoc,
    #[serde(default)]
    pub constraints: Vec<FormDoc>,
    #[serde(default)]
    pub bounds: Vec<f64>,
    pub covariance: Rows,
    pub info: InfoDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeDoc {
    Feasibility,
    GameValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeterministicDoc {
    pub forms: Vec<FormDoc>,
    pub info: InfoDoc,
    pub mode: ModeDoc,
    /// Index of the objective form; required for `game-value`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<usize>,
}

/// A delay entry: a step count or the string `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DelayDoc {
    Steps(usize),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaysDoc {
    pub d: Vec<Vec<DelayDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicDoc {
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
    pub input_dims: Vec<usize>,
    #[serde(rename = "C_list")]
    pub c_list: Vec<Rows>,
    pub stage_form: FormDoc,
    pub terminal: Rows,
    #[serde(default)]
    pub constraint_forms: Vec<FormDoc>,
    #[serde(default)]
    pub bounds: Vec<f64>,
    pub horizon: usize,
    pub info: DelaysDoc,
    pub init_cov: Rows,
    pub noise_cov: Rows,
    #[serde(default)]
    pub structural: bool,
}

/// Parses and validates a problem document.
pub fn parse_problem(text: &str) -> Result<Problem, CliError> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| CliError::Input(format!("syntax error: {e}")))?;
    if env.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "unsupported schema_version \"{}\" (expected \"{SCHEMA_VERSION}\")",
            env.schema_version
        )));
    }
    let problem = match env.kind {
        Kind::Stochastic => Problem::Stochastic(stochastic_from_doc(&payload(env.payload)?)?),
        Kind::Deterministic => Problem::Deterministic(deterministic_from_doc(&payload(env.payload)?)?),
        Kind::Dynamic => Problem::Dynamic(dynamic_from_doc(&payload(env.payload)?)?),
    };
    let report = match &problem {
        Problem::Stochastic(p) => validate_problem(p),
        Problem::Deterministic(p) => validate_problem(p),
        Problem::Dynamic(p) => validate_problem(p),
    };
    if !report.is_valid() {
        return Err(CliError::Input(format!("invalid problem: {}", report.violations.join("; "))));
    }
    Ok(problem)
}

fn payload<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." { "payload".to_string() } else { format!("payload.{path}") };
        CliError::Input(format!("{at}: {}", e.inner()))
    })
}

/// Serializes a problem as a pretty-printed document.
pub fn write_problem(problem: &Problem) -> String {
    let payload = match problem {
        Problem::Stochastic(p) => serde_json::to_value(stochastic_to_doc(p)),
        Problem::Deterministic(p) => serde_json::to_value(deterministic_to_doc(p)),
        Problem::Dynamic(p) => serde_json::to_value(dynamic_to_doc(p)),
    }
    .expect("documents serialize");
    let env = Envelope {
        schema_version: SCHEMA_VERSION.into(),
        kind: problem.kind(),
        payload,
    };
    serde_json::to_string_pretty(&env).expect("documents serialize") + "\n"
}

fn matrix(rows: &Rows, path: &str, shape: (usize, usize)) -> Result<Matrix, CliError> {
    if rows.len() != shape.0 {
        return Err(CliError::Input(format!("{path}: expected {} rows, found {}", shape.0, rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != shape.1 {
            return Err(CliError::Input(format!(
                "{path}[{i}]: expected {} entries, found {}",
                shape.1,
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(CliError::Input(format!("{path}[{i}][{j}]: entry is not finite")));
        }
    }
    let data = rows.iter().flatten().copied().collect();
    Ok(Matrix::new(shape.0, shape.1, data)?)
}

fn sym(rows: &Rows, path: &str, n: usize) -> Result<SymMatrix, CliError> {
    let m = matrix(rows, path, (n, n))?;
    SymMatrix::from_matrix(m).map_err(|e| CliError::Input(format!("{path}: {e}")))
}

fn form(doc: &FormDoc, path: &str, n: usize, m: usize) -> Result<BlockForm, CliError> {
    Ok(BlockForm::new(
        sym(&doc.q, &format!("{path}.Q"), n)?,
        matrix(&doc.s, &format!("{path}.S"), (n, m))?,
        sym(&doc.r, &format!("{path}.R"), m)?,
    )?)
}

fn form_to_doc(f: &BlockForm) -> FormDoc {
    FormDoc {
        q: f.q.as_matrix().to_rows(),
        s: f.s.to_rows(),
        r: f.r.as_matrix().to_rows(),
    }
}

fn info(doc: &InfoDoc, path: &str, n: usize) -> Result<InfoStructure, CliError> {
    let players: Vec<Player> = doc.players.iter().map(|p| Player { m: p.m, p: p.p }).collect();
    let p: usize = players.iter().map(|pl| pl.p).sum();
    let c = matrix(&doc.c, &format!("{path}.C"), (p, n))?;
    InfoStructure::new(players, c).map_err(|e| CliError::Input(format!("{path}: {e}")))
}

fn info_to_doc(info: &InfoStructure) -> InfoDoc {
    InfoDoc {
        players: info.players().iter().map(|p| PlayerDoc { m: p.m, p: p.p }).collect(),
        c: info.c().to_rows(),
    }
}

/// Dimension of a square matrix given as rows, taken from its row count.
fn square_dim(rows: &Rows) -> usize {
    rows.len()
}

fn decision_dim(doc: &InfoDoc) -> usize {
    doc.players.iter().map(|p| p.m).sum()
}

fn forms(docs: &[FormDoc], path: &str, n: usize, m: usize) -> Result<Vec<BlockForm>, CliError> {
    docs.iter()
        .enumerate()
        .map(|(j, f)| form(f, &format!("{path}[{j}]"), n, m))
        .collect()
}

fn check_bounds(bounds: &[f64], constraints: usize, path: &str) -> Result<(), CliError> {
    if bounds.len() != constraints {
        return Err(CliError::Input(format!(
            "{path}: expected {constraints} bounds, found {}",
            bounds.len()
        )));
    }
    if let Some(j) = bounds.iter().position(|b| !b.is_finite()) {
        return Err(CliError::Input(format!("{path}[{j}]: bound is not finite")));
    }
    Ok(())
}

pub fn stochastic_from_doc(doc: &StochasticDoc) -> Result<StochasticTeamProblem, CliError> {
    let n = square_dim(&doc.covariance);
    let m = decision_dim(&doc.info);
    let covariance = sym(&doc.covariance, "covariance", n)?;
    let info = info(&doc.info, "info", n)?;
    let objective = form(&doc.objective, "objective", n, m)?;
    let constraints = forms(&doc.constraints, "constraints", n, m)?;
    check_bounds(&doc.bounds, constraints.len(), "bounds")?;
    Ok(StochasticTeamProblem::new(objective, constraints, doc.bounds.clone(), covariance, info))
}

pub fn stochastic_to_doc(p: &StochasticTeamProblem) -> StochasticDoc {
    StochasticDoc {
        objective: form_to_doc(&p.objective),
        constraints: p.constraints.iter().map(form_to_doc).collect(),
        bounds: p.bounds.clone(),
        covariance: p.covariance.as_matrix().to_rows(),
        info: info_to_doc(&p.info),
    }
}

pub fn deterministic_from_doc(doc: &DeterministicDoc) -> Result<DeterministicTeamProblem, CliError> {
    let n = match doc.info.c.first() {
        Some(row) => row.len(),
        None => doc.forms.first().map_or(0, |f| f.q.len()),
    };
    let m = decision_dim(&doc.info);
    let info = info(&doc.info, "info", n)?;
    let list = forms(&doc.forms, "forms", n, m)?;
    match (doc.mode, doc.objective) {
        (ModeDoc::Feasibility, None) => Ok(DeterministicTeamProblem::feasibility(list, info)),
        (ModeDoc::Feasibility, Some(_)) => Err(CliError::Input("objective: only allowed in game-value mode".into())),
        (ModeDoc::GameValue, Some(j)) if j < list.len() => Ok(DeterministicTeamProblem::game_value(list, j, info)),
        (ModeDoc::GameValue, Some(j)) => Err(CliError::Input(format!(
            "objective: index {j} out of range for {} forms",
            list.len()
        ))),
        (ModeDoc::GameValue, None) => Err(CliError::Input("objective: required in game-value mode".into())),
    }
}

pub fn deterministic_to_doc(p: &DeterministicTeamProblem) -> DeterministicDoc {
    let (mode, objective) = match p.mode {
        DeterministicMode::Feasibility => (ModeDoc::Feasibility, None),
        DeterministicMode::GameValue { objective } => (ModeDoc::GameValue, Some(objective)),
    };
    DeterministicDoc {
        forms: p.forms.iter().map(form_to_doc).collect(),
        info: info_to_doc(&p.info),
        mode,
        objective,
    }
}

fn delays(doc: &DelaysDoc) -> Result<DelayPattern, CliError> {
    let d = doc
        .d
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, e)| match e {
                    DelayDoc::Steps(s) => Ok(Some(*s)),
                    DelayDoc::Word(w) if w == "inf" => Ok(None),
                    DelayDoc::Word(w) => Err(CliError::Input(format!(
                        "info.d[{i}][{j}]: expected a step count or \"inf\", found \"{w}\""
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    DelayPattern::new(d).map_err(|e| CliError::Input(format!("info.d: {e}")))
}

pub fn dynamic_from_doc(doc: &DynamicDoc) -> Result<DynamicTeamProblem, CliError> {
    let n = square_dim(&doc.a);
    let m: usize = doc.input_dims.iter().sum();
    let nodes = doc.input_dims.len();
    if doc.c_list.len() != nodes {
        return Err(CliError::Input(format!(
            "C_list: expected {nodes} matrices (one per node), found {}",
            doc.c_list.len()
        )));
    }
    let c_list = doc
        .c_list
        .iter()
        .enumerate()
        .map(|(i, c)| matrix(c, &format!("C_list[{i}]"), (c.len(), n)))
        .collect::<Result<Vec<_>, _>>()?;
    let constraints = forms(&doc.constraint_forms, "constraint_forms", n, m)?;
    check_bounds(&doc.bounds, constraints.len(), "bounds")?;
    let delays = delays(&doc.info)?;
    if delays.nodes() != nodes {
        return Err(CliError::Input(format!("info.d: expected {nodes} rows, found {}", delays.nodes())));
    }
    Ok(DynamicTeamProblem {
        a: matrix(&doc.a, "A", (n, n))?,
        b: matrix(&doc.b, "B", (n, m))?,
        input_dims: doc.input_dims.clone(),
        c_list,
        stage: form(&doc.stage_form, "stage_form", n, m)?,
        terminal: sym(&doc.terminal, "terminal", n)?,
        constraints,
        bounds: doc.bounds.clone(),
        horizon: doc.horizon,
        delays,
        init_cov: sym(&doc.init_cov, "init_cov", n)?,
        noise_cov: sym(&doc.noise_cov, "noise_cov", n)?,
        structural: doc.structural,
    })
}

pub fn dynamic_to_doc(p: &DynamicTeamProblem) -> DynamicDoc {
    let d = p
        .delays
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| e.map_or_else(|| DelayDoc::Word("inf".into()), DelayDoc::Steps))
                .collect()
        })
        .collect();
    DynamicDoc {
        a: p.a.to_rows(),
        b: p.b.to_rows(),
        input_dims: p.input_dims.clone(),
        c_list: p.c_list.iter().map(Matrix::to_rows).collect(),
        stage_form: form_to_doc(&p.stage),
        terminal: p.terminal.as_matrix().to_rows(),
        constraint_forms: p.constraints.iter().map(form_to_doc).collect(),
        bounds: p.bounds.clone(),
        horizon: p.horizon,
        info: DelaysDoc { d },
        init_cov: p.init_cov.as_matrix().to_rows(),
        noise_cov: p.noise_cov.as_matrix().to_rows(),
        structural: p.structural,
    }
}

/// Reads `"K"` (one matrix per player) from a JSON object, either at the top
/// level or under `"result"` as in a solve report.
pub fn parse_gain(text: &str, info: &InfoStructure) -> Result<BlockGain, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("gain file: {e}")))?;
    let (path, field) = match (v.get("K"), v.get("result").and_then(|r| r.get("K"))) {
        (Some(k), _) => ("K", k.clone()),
        (None, Some(k)) => ("result.K", k.clone()),
        (None, None) => return Err(CliError::Input("gain file: no \"K\" or \"result.K\" field".into())),
    };
    let k: Vec<Rows> = serde_path_to_error::deserialize(field)
        .map_err(|e| CliError::Input(format!("gain file {path}{}: {}", e.path(), e.inner())))?;
    let players = info.players();
    if k.len() != players.len() {
        return Err(CliError::Input(format!(
            "K: expected {} blocks, found {}",
            players.len(),
            k.len()
        )));
    }
    let blocks = k
        .iter()
        .zip(players)
        .enumerate()
        .map(|(i, (rows, pl))| matrix(rows, &format!("K[{i}]"), (pl.m, pl.p)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BlockGain::new(info, blocks)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = r#"{
        "schema_version": "1.0",
        "kind": "stochastic",
        "payload": {
            "objective": {"Q": [[0]], "S": [[0]], "R": [[1]]},
            "constraints": [{"Q": [[1]], "S": [[-1]], "R": [[1]]}],
            "bounds": [1],
            "covariance": [[4]],
            "info": {"players": [{"m": 1, "p": 1}], "C": [[1]]}
        }
    }"#;

    fn err(text: &str) -> String {
        match parse_problem(text) {
            Err(CliError::Input(msg)) => msg,
            other => panic!("expected an input error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_scalar_document() {
        let Problem::Stochastic(p) = parse_problem(SCALAR).unwrap() else { panic!() };
        assert_eq!((p.n(), p.m()), (1, 1));
        assert_eq!(p.bounds, vec![1.0]);
    }

    #[test]
    fn ragged_row_names_its_path() {
        let text = SCALAR
            .replace("\"covariance\": [[4]]", "\"covariance\": [[4, 0], [0, 1]]")
            .replace("\"objective\": {\"Q\": [[0]]", "\"objective\": {\"Q\": [[0, 0], [0]]")
            .replace("\"C\": [[1]]", "\"C\": [[1, 0]]");
        assert!(err(&text).starts_with("objective.Q[1]"), "{}", err(&text));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = SCALAR.replace("\"bounds\"", "\"extra\": 1, \"bounds\"");
        assert!(err(&text).contains("unknown field `extra`"));
        let text = SCALAR.replace("\"kind\"", "\"note\": \"x\", \"kind\"");
        assert!(err(&text).contains("unknown field `note`"));
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let msg = err("{\n  \"schema_version\": \"1.0\",\n  \"kind\": ");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn wrong_version_is_rejected() {
        assert!(err(&SCALAR.replace("\"1.0\"", "\"0.9\"")).contains("schema_version"));
    }

    #[test]
    fn bad_delay_word_is_rejected() {
        let doc = DelaysDoc {
            d: vec![vec![DelayDoc::Steps(0), DelayDoc::Word("never".into())]],
        };
        assert!(delays(&doc).is_err());
    }

    #[test]
    fn scalar_round_trip() {
        let p = parse_problem(SCALAR).unwrap();
        assert_eq!(parse_problem(&write_problem(&p)).unwrap(), p);
    }
}
