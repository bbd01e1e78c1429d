//! Worst-case team problems over the unit ball `‖x‖ ≤ 1`.
//!
//! A linear gain meets `sup_{‖x‖≤1} zᵀ M_j z ≤ 0` exactly when the
//! closed-loop form `Φ_j(K)` is negative semidefinite, so feasibility is the
//! minimization of `φ(K) = max_j λ_max(Φ_j(K))`, a convex function of `K`.

mod feasibility;
mod game;

pub use feasibility::{
    feasibility_search, lmi_block, FeasibilityOptions, FeasibilityReport, FeasibilityStatus,
    FEASIBILITY_TOLERANCE,
};
pub use game::{game_value, GameValueOptions, GameValueReport};
