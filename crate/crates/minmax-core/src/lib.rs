//! Solvers and measurement tools for smooth convex-concave min-max problems.
//!
//! The centerpiece is the clairvoyant extra-gradient method (CEG): each outer
//! step approximates an implicit proximal-point update by iterating the
//! contraction `w ← [z − γF(w)]_D` a logarithmic number of times. Extra-gradient,
//! optimistic gradient descent/ascent and an exact proximal-point reference are
//! provided as baselines, together with duality-gap/residual metrics and a
//! harness that checks the method's convergence bounds on a small problem zoo.

pub mod harness;
pub mod matrix;
pub mod metrics;
pub mod point;
pub mod problem;
pub mod sets;
pub mod solvers;
pub mod vecmath;
pub mod zoo;

pub use matrix::Mat;
pub use point::Point;
pub use problem::SaddleProblem;
pub use sets::FeasibleSet;
pub use solvers::{KRule, RunTrace, SolverConfig, SolverKind};

use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// An input had the wrong dimension.
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// A computed value was NaN or infinite. `index` names the offending
    /// coordinate when known.
    NonFinite {
        context: String,
        index: Option<usize>,
    },
    /// The operation is not defined for the given inputs (missing oracle,
    /// unbounded set, ...).
    Unsupported(String),
    /// An iterative routine failed to converge within its iteration cap.
    NoConvergence {
        context: &'static str,
        iterations: usize,
    },
    /// Configuration rejected; the message carries the offending field path.
    InvalidConfig(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                context,
                expected,
                got,
            } => write!(f, "{context}: expected dimension {expected}, got {got}"),
            Error::NonFinite { context, index } => match index {
                Some(i) => write!(f, "non-finite value in {context} at coordinate {i}"),
                None => write!(f, "non-finite value in {context}"),
            },
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::NoConvergence {
                context,
                iterations,
            } => write!(
                f,
                "{context} did not converge after {iterations} iterations"
            ),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl Error {
    /// True for validation-style errors (bad config or dimensions), as
    /// opposed to runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_) | Error::DimensionMismatch { .. }
        )
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
