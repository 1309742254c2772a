//! Column generation and graph generation for capacitated vehicle routing.
//!
//! The library solves the LP relaxation of set-cover formulations of CVRP by
//! generating columns (routes) on demand, and accelerates convergence by
//! also generating *route families*: acyclic graphs whose source-to-sink
//! paths are exactly the feasible routes consistent with a customer
//! ordering. Adding a family lets the restricted master buy fractional flow
//! through exponentially many routes at the cost of a polynomial number of
//! rows and variables.
//!
//! Modules, bottom up:
//!
//! - [`scalar`]: the float abstraction everything is generic over.
//! - [`instance`]: CVRP instances with integer rounded-Euclidean distances.
//! - [`column`]: routes, master columns, duals, reduced costs.
//! - [`lp`]: a two-phase primal simplex with warm starts.
//! - [`pricing`]: exact minimum-reduced-cost route search.
//! - [`family`]: orderings, family graphs, flow decomposition.
//! - [`master`]: the restricted master over columns and families.
//! - [`driver`]: the two solver loops and the benchmark harness.
//!
//! Numeric work defaults to `f64`; the `f32` instantiation exists for
//! experiments where memory traffic dominates. The aliases below pin the
//! default so downstream code does not need type parameters.

pub mod column;
pub mod driver;
pub mod family;
pub mod instance;
pub mod lp;
pub mod master;
pub mod pricing;
pub mod scalar;

pub use column::{Column, Route};
pub use driver::{run_benchmark, solve, solve_cg, solve_gg, Algorithm, SolveParams};
pub use family::FamilyGraph;
pub use instance::CvrpInstance;
pub use scalar::Scalar;

/// Default-precision duals of the master problem.
pub type Duals = column::Duals<f64>;
/// Default-precision LP instance.
pub type LpProblem = lp::LpProblem<f64>;
/// Default-precision LP solution.
pub type LpSolution = lp::LpSolution<f64>;
/// Default-precision per-iteration trace row.
pub type IterationRecord = driver::IterationRecord<f64>;
/// Default-precision solver outcome.
pub type SolveResult = driver::SolveResult<f64>;
/// Default-precision benchmark outcome.
pub type BenchmarkReport = driver::BenchmarkReport<f64>;
