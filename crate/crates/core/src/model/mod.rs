//! Problem data: quadratic block forms, information structures,
//! block-diagonal gains and the static team problems built from them.

mod form;
mod gain;
mod info;
mod problem;

pub use form::{BlockForm, FormRole};
pub use gain::BlockGain;
pub use info::{InfoStructure, Player};
pub use problem::{
    closed_loop_form, expected_cost, validate_problem, DeterministicMode, DeterministicTeamProblem,
    StochasticTeamProblem, Validate, ValidationReport, DEFINITENESS_TOLERANCE,
};
pub(crate) use problem::closed_loop_dense;
