//! Solver library for finite constrained Markov decision processes with a
//! single constraint.
//!
//! The multiplier `mu` of the constraint is found by minimizing the dual
//! objective `O(mu)`, which is piecewise linear and convex. Each evaluation of
//! `O` runs value iteration on the penalized MDP with reward `R - mu*C`.
//!
//! * [`model`]: the CMDP container and its validation.
//! * [`penalized`]: the inner loop, returning `O(mu)` and its gradient.
//! * [`gas`]: gradient-aware search over `mu`.
//! * [`baselines`]: binary search, primal-dual descent and a grid-scan oracle.
//! * [`gridworld`], [`uav`]: environment builders.
//! * [`rollout`]: policy extraction, Bellman residuals and Monte Carlo rollouts.
//! * [`io`]: problem and configuration files.

pub mod baselines;
pub mod error;
pub mod gas;
pub mod gridworld;
pub mod instances;
pub mod io;
pub mod model;
pub mod penalized;
pub mod rollout;
pub mod uav;

pub use error::{Error, ErrorClass, Result};
pub use gas::{
    gas_solve, intersect_tangents, objective_noise, solve_dispatch, Algorithm, Bracket,
    DualEvaluator, DualPoint, GasParams, SolveParams, SolveResult, SolveTrace, TraceRecord,
};
pub use model::{Cmdp, TransitionRow, Transitions, TransitionsBuilder, ValidationReport};
pub use penalized::{evaluate_dual, value_iteration_penalized, InnerLoopParams, PenalizedSolution};
