//! Constrained expected-cost team problems.
//!
//! For fixed multipliers `λ` the Lagrangian is one quadratic form
//! `M(λ) = M_0 + Σ λ_j M_j`, and its best block-diagonal gain comes from a
//! single structured linear solve ([`weighted_team_gain`]). The outer
//! problem maximizes the concave dual over `λ ≥ 0`.

mod certificate;
mod dual;
mod reduced;

pub use certificate::{
    build_lmi_certificate, build_lmi_certificate_strict, ConstraintCertificate, LmiCertificate,
    CERTIFICATE_TOLERANCE,
};
pub use dual::{
    dual_function, solve_constrained, DualEvaluation, DualMethod, NormalizedDual, SolveOptions,
    SolveReport, SolveStatus, LAMBDA_CAP,
};
pub use reduced::{full_info_gain, weighted_team_gain, Minimizer, ReducedQuadratic, TeamGain};
