//! Linear-quadratic team decision problems with quadratic constraints.
//!
//! Several decision makers each see part of a Gaussian state `x` through
//! `y_i = C_i x` and pick `u_i`. The team minimizes one quadratic cost in
//! `(x, u)` subject to further quadratic constraints. This crate solves:
//!
//! * the expected-cost problem ([`stochastic`]) by an inner structured gain
//!   solve and an outer dual method over the constraint multipliers, with an
//!   LMI certificate for the result;
//! * the worst-case problem over `‖x‖ ≤ 1` ([`minimax`]) by spectral
//!   subgradient descent and bisection on the game value;
//! * dynamic problems with delayed information ([`dynamic`]) by lifting to
//!   a static problem when the information structure is partially nested.
//!
//! [`oracle`] holds independent Monte Carlo checks used by the tests and the
//! command-line tool.
//!
//! ```
//! use teamlq::linalg::{Matrix, SymMatrix};
//! use teamlq::model::{BlockForm, InfoStructure, StochasticTeamProblem};
//! use teamlq::stochastic::{solve_constrained, SolveOptions};
//!
//! // x ~ N(0, 4), minimize E u² subject to E (x − u)² ≤ 1.
//! let scalar = |q: f64, s: f64, r: f64| {
//!     BlockForm::new(
//!         SymMatrix::from_diag(&[q]),
//!         Matrix::from_rows(&[[s]]).unwrap(),
//!         SymMatrix::from_diag(&[r]),
//!     )
//!     .unwrap()
//! };
//! let problem = StochasticTeamProblem::new(
//!     scalar(0.0, 0.0, 1.0),
//!     vec![scalar(1.0, -1.0, 1.0)],
//!     vec![1.0],
//!     SymMatrix::from_diag(&[4.0]),
//!     InfoStructure::diagonal(1),
//! );
//! let report = solve_constrained(&problem, &SolveOptions::default()).unwrap();
//! assert!((report.k_star.block(0)[(0, 0)] - 0.5).abs() < 1e-6);
//! assert!((report.primal_value - 1.0).abs() < 1e-6);
//! ```

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod dynamic;
pub mod error;
pub mod exec;
pub mod gen;
pub mod linalg;
pub mod minimax;
pub mod model;
pub mod oracle;
pub mod stochastic;

pub use error::{Error, Result};
pub use exec::Execution;
