//! Command reports in machine (JSON) and human (fixed-width) form.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use teamlq::minimax::{FeasibilityReport, FeasibilityStatus};
use teamlq::model::BlockGain;
use teamlq::oracle::McEstimate;

use crate::schema::Rows;

pub const TOOL: &str = "teamlq";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Human,
    Machine,
}

/// Every option a command ran with, defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Options {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub samples: usize,
    pub threads: Option<usize>,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_sigmas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input: String,
    pub options: Options,
    pub status: String,
    pub exit_code: i32,
    pub result: Value,
    pub wall_time_s: f64,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Machine => serde_json::to_string_pretty(self).expect("reports serialize") + "\n",
            Format::Human => {
                let mut rows = Vec::new();
                flatten("", &serde_json::to_value(self).expect("reports serialize"), &mut rows);
                table(&rows)
            }
        }
    }
}

/// Two-column table with the key column padded to the longest key.
pub fn table(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

fn is_numeric(v: &Value) -> bool {
    match v {
        Value::Number(_) | Value::Null => true,
        Value::Array(items) => items.iter().all(is_numeric),
        _ => false,
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) if !items.is_empty() && !is_numeric(v) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), item, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

pub fn gain_rows(k: &BlockGain) -> Vec<Rows> {
    k.blocks().iter().map(|b| b.to_rows()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl From<McEstimate> for Estimate {
    fn from(e: McEstimate) -> Self {
        Self {
            mean: e.mean,
            std_error: e.std_error,
            samples: e.samples,
            seed: e.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub min_eig: f64,
    pub trace: f64,
    pub bound: f64,
    pub regularization: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticResult {
    #[serde(rename = "K")]
    pub k: Vec<Rows>,
    pub lambda: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub constraint_values: Vec<f64>,
    pub iterations: usize,
    pub rank_deficient: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasibility_ray: Option<Vec<f64>>,
    pub certificate: Vec<CertificateEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub form: usize,
    pub eigenvalue: f64,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult {
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Rows>>,
    pub phi: f64,
    pub per_constraint_eigs: Vec<f64>,
    pub lmi_eigs: Vec<f64>,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasibility: Option<InfeasibilityCertificate>,
}

impl From<&FeasibilityReport> for FeasibilityResult {
    fn from(r: &FeasibilityReport) -> Self {
        let infeasibility = match &r.status {
            FeasibilityStatus::InfeasibleCertified {
                form,
                eigenvalue,
                direction,
            } => Some(InfeasibilityCertificate {
                form: *form,
                eigenvalue: *eigenvalue,
                direction: direction.clone(),
            }),
            _ => None,
        };
        Self {
            k: r.k.as_ref().map(gain_rows),
            phi: r.phi,
            per_constraint_eigs: r.per_constraint_eigs.clone(),
            lmi_eigs: r.lmi_eigs.clone(),
            iterations: r.iterations,
            infeasibility,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameValueResult {
    pub gamma_star: f64,
    #[serde(rename = "K")]
    pub k: Vec<Rows>,
    pub bisection_interval: [f64; 2],
    pub bisection_steps: usize,
    pub certificate: FeasibilityResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedGainEntry {
    pub node: usize,
    pub time: usize,
    pub gain: Rows,
    /// `(source node, measurement time)` of each stacked corrected output.
    pub measurements: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicResult {
    pub gains: Vec<TimedGainEntry>,
    pub lambda: Vec<f64>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub constraint_values: Vec<f64>,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rollout: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedPlayerEntry {
    pub player: usize,
    pub node: usize,
    pub time: usize,
    pub decision_offset: usize,
    pub m: usize,
    pub measurements: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceResult {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub players: Vec<LiftedPlayerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub index: usize,
    pub value: f64,
    pub bound: f64,
    pub certificate: CertificateEntry,
    pub monte_carlo: Estimate,
    /// Exact value within four standard errors of the estimate.
    pub monte_carlo_agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticVerifyResult {
    pub objective_value: f64,
    pub objective_monte_carlo: Estimate,
    pub constraints: Vec<ConstraintCheck>,
    pub violated: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormCheck {
    pub index: usize,
    pub max_eig: f64,
    pub lmi_max_eig: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicVerifyResult {
    pub forms: Vec<FormCheck>,
    pub violated: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub lambda: Vec<f64>,
    #[serde(rename = "K")]
    pub k: Vec<Rows>,
    pub tables: Vec<TableEntry>,
    pub in_sample: f64,
    pub table_cost: Estimate,
    pub linear_cost: Estimate,
    pub difference: Estimate,
    /// Tables beat the linear gain by more than four standard errors.
    pub improves_on_linear: bool,
    pub sweeps: usize,
}
