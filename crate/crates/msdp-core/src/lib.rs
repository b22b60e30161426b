//! Exact and approximate solvers for constrained stage-separable
//! maximization over finite alphabets.
//!
//! The objective is a weighted sum of per-stage terms, which fits dynamic
//! programming on a trellis, but the feasible set is arbitrary: budgets,
//! orderings, permutations, or anything else expressible as a yes/no check
//! on complete assignments. Constraints couple the stages and break the
//! single-survivor recursion, so the central solver keeps multiple
//! survivors per stage ([`solver::msdp_solve`]); kept unbounded it is
//! provably exact, capped it trades memory for a certificate flag.
//!
//! The crate is `no_std` (with `alloc`) apart from the optional `std`
//! feature, which adds `std::error::Error` impls and a threaded version of
//! the exhaustive baseline.
//!
//! ```
//! use msdp_core::constraints::BudgetCsf;
//! use msdp_core::problem::{Alphabet, ProblemH, Reward};
//! use msdp_core::solver::{msdp_solve, SurvivorPolicy};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let table = vec![vec![0.0, 2.5, 1.0], vec![1.0, 0.0, 3.0], vec![2.0, 1.0, 0.0]];
//! let cost = vec![vec![1.0, 2.0, 3.0]; 3];
//! let problem = ProblemH::new(
//!     3,
//!     Alphabet::indexed(3)?,
//!     vec![1.0; 3],
//!     Reward::Table(table),
//!     Box::new(BudgetCsf::new(cost, 5.0)?),
//! )?;
//! let report = msdp_solve(&problem, &SurvivorPolicy::keep_all())?;
//! assert!(report.optimal_certified);
//! // The stage-wise best picks [1, 2, 0], which busts the budget; the
//! // constrained optimum gives up the middle stage instead.
//! assert_eq!(report.best.values, vec![1, 0, 0]);
//! assert_eq!(report.best.objective, Some(5.5));
//! # Ok(()) }
//! ```
//!
//! - [`problem`]: instance description and objective evaluation.
//! - [`constraints`]: reusable feasibility oracles.
//! - [`trellis`]: the stage graph, walk scoring, DOT dumps.
//! - [`solver`]: the multi-survivor sweep and its policies.
//! - [`baselines`]: exhaustive enumeration and simulated annealing.
//! - [`adapters`]: bit allocation, fragment ordering, and finite-horizon
//!   constrained MDPs expressed as stage problems.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod adapters;
pub mod baselines;
pub mod constraints;
pub mod problem;
pub mod solver;
pub mod trellis;

pub use problem::{
    evaluate_objective, extend, Alphabet, Assignment, CoreError, Counters, CsfOracle, Digest,
    Feasibility, PartialAssignment, ProblemH, Reward, SearchSpace, SymbolId,
};
pub use solver::{
    acms, completion_search, measure_ne_bound, msdp_solve, SolveError, SolveReport, Survivor,
    SurvivorMode, SurvivorPolicy,
};
