//! Error type shared by the solvers, environment builders and file loaders.

use std::fmt;

use thiserror::Error;

use crate::gas::{DualPoint, SolveTrace};
use crate::model::ValidationReport;

/// Coarse error classes, stable across releases. The CLI maps each class to
/// its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    InfeasibleOrMuMaxTooSmall,
    Stagnation,
    Io,
    Config,
    Divergence,
    InnerLoopNotConverged,
    ConvexityViolation,
    InvalidProblem,
}

impl ErrorClass {
    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::InfeasibleOrMuMaxTooSmall => "infeasible-or-M-too-small",
            ErrorClass::Stagnation => "stagnation",
            ErrorClass::Io => "io",
            ErrorClass::Config => "config",
            ErrorClass::Divergence => "divergence",
            ErrorClass::InnerLoopNotConverged => "inner-loop-not-converged",
            ErrorClass::ConvexityViolation => "convexity-violation",
            ErrorClass::InvalidProblem => "invalid-problem",
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid CMDP: {0}")]
    InvalidCmdp(Box<ValidationReport>),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("inner loop did not converge at mu={mu} after {sweeps} sweeps")]
    NotConverged { mu: f64, sweeps: usize },

    #[error("tangent lines are parallel (gradient {gradient} at both mu={lo_mu} and mu={hi_mu})")]
    ParallelTangents {
        lo_mu: f64,
        hi_mu: f64,
        gradient: f64,
    },

    #[error(
        "tangent intersection mu={mu} lies outside bracket [{}, {}]; the dual is not convex here",
        lo.mu,
        hi.mu
    )]
    ConvexityViolation {
        lo: DualPoint,
        hi: DualPoint,
        mu: f64,
    },

    #[error("infeasible-or-M-too-small: dual gradient at mu={mu} is {gradient} < 0")]
    InfeasibleOrMuMaxTooSmall {
        mu: f64,
        gradient: f64,
        trace: Box<SolveTrace>,
    },

    #[error("stagnation: {reason}")]
    Stagnation {
        reason: String,
        trace: Box<SolveTrace>,
    },

    #[error("divergence: multiplier reached {mu}")]
    Divergence { mu: f64, trace: Box<SolveTrace> },

    #[error("unknown algorithm `{0}` (expected gas, bs or pdo)")]
    UnknownAlgorithm(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InfeasibleOrMuMaxTooSmall { .. } => ErrorClass::InfeasibleOrMuMaxTooSmall,
            Error::Stagnation { .. } => ErrorClass::Stagnation,
            Error::Io { .. } => ErrorClass::Io,
            Error::Parse { .. }
            | Error::Config(_)
            | Error::UnknownAlgorithm(_)
            | Error::Precondition(_) => ErrorClass::Config,
            Error::Divergence { .. } => ErrorClass::Divergence,
            Error::NotConverged { .. } => ErrorClass::InnerLoopNotConverged,
            Error::ConvexityViolation { .. } | Error::ParallelTangents { .. } => {
                ErrorClass::ConvexityViolation
            }
            Error::InvalidCmdp(_) | Error::Shape(_) => ErrorClass::InvalidProblem,
        }
    }

    /// Trace collected before the failure, for the error kinds that carry one.
    pub fn trace(&self) -> Option<&SolveTrace> {
        match self {
            Error::InfeasibleOrMuMaxTooSmall { trace, .. }
            | Error::Stagnation { trace, .. }
            | Error::Divergence { trace, .. } => Some(trace),
            _ => None,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
