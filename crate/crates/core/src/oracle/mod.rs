//! Monte Carlo oracles that check solver output independently.
//!
//! Sample `s` of an estimate draws its Gaussians from ChaCha8 stream `s` of
//! the seed (polar method), so results do not depend on the thread count.

mod estimate;
mod policy;
mod rng;
mod rollout;
mod search;

pub use estimate::{McEstimate, CHUNK};
pub use policy::{mc_cost, mc_cost_with, mc_difference, soft_threshold, PiecewiseConstant, Policy, ScalarMap};
pub use rng::GaussianStream;
pub use rollout::rollout_cost;
pub use search::{nonlinear_search, SearchGrid, SearchOptions, SearchReport};
