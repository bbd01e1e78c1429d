//! Dynamic team problems with delayed information.
//!
//! When the information structure is partially nested, each node can remove
//! the effect of every input that reaches its measurements, leaving outputs
//! that depend only on `x(0)` and the noise. The problem then becomes a
//! static team problem over the stacked decisions of all `(node, time)`
//! pairs.

mod delay;
mod lift;
mod nested;
mod problem;

pub use delay::{DelayPattern, Violation};
pub use lift::{
    lift_to_static, solve_dynamic, DynamicSolution, LiftedPlayer, LiftedProblem, MeasurementRow,
    TimedGain,
};
pub use nested::{check_partially_nested, INFLUENCE_TOLERANCE};
pub use problem::DynamicTeamProblem;
