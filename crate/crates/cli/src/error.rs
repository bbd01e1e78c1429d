use thiserror::Error;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<teamlq::Error> for CliError {
    fn from(e: teamlq::Error) -> Self {
        use teamlq::Error as E;
        let msg = e.to_string();
        match e {
            E::NoConvergence(_) | E::SingularBlock { .. } => CliError::Numerical(msg),
            E::Infeasible(m) => CliError::Infeasible(m),
            E::NotPartiallyNested(v) => {
                let list: Vec<String> = v.iter().map(ToString::to_string).collect();
                CliError::Input(format!("{msg}: {}", list.join("; ")))
            }
            E::Shape { .. }
            | E::NotPsd { .. }
            | E::NotPositiveDefinite { .. }
            | E::Malformed(_)
            | E::InvalidProblem(_)
            | E::UnsupportedPolicy(_) => CliError::Input(msg),
        }
    }
}
