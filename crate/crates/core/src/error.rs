use thiserror::Error;

use crate::event_space::JointDistribution;
use crate::system::{ConsistencyReport, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument names something outside the space, overlaps where it must
    /// not, or is otherwise malformed.
    #[error("domain error: {0}")]
    Domain(String),

    /// A dense table or an exhaustive enumeration would exceed its cap.
    #[error("capacity exceeded: {what} needs {requested}, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    /// The operation is only defined for a narrower class of input.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("system is not consistent: {}", .0.summary())]
    Infeasible(Box<ConsistencyReport>),

    #[error("solver did not converge after {iterations} sweeps (max residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Box<JointDistribution>,
    },

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid system: {}", format_violations(.0))]
    Validation(Vec<Violation>),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
