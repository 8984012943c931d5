//! Nesterov and Ravine accelerated gradient methods, their composite and
//! strongly convex variants, the inertial ODEs they discretize, and the
//! Lyapunov and rate diagnostics used to compare them.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod linalg;
pub mod objective;
pub mod prox;
pub mod random;
pub mod scalar;
pub mod solvers;

pub use scalar::Scalar;

pub type Problem = objective::SmoothProblem<f64>;
pub type Composite = prox::CompositeProblem<f64>;
pub type Prox = prox::ProxFriendly<f64>;
pub type Trace = solvers::Trace<f64>;
pub type SolverConfig = solvers::SolverConfig<f64>;
pub type OdeSpec = dynamics::OdeSpec<f64>;
pub type OdeRun = dynamics::OdeRun<f64>;
