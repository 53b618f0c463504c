use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point {0:?} is outside the metric domain: {1}")]
    Domain([f64; 3], &'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate tangent plane at node {0}")]
    DegenerateTangent(usize),
    #[error("metric lost positive definiteness")]
    NotPositiveDefinite,
    #[error("quadrature did not converge (achieved {achieved:e})")]
    QuadratureNonConvergence { achieved: f64 },
    #[error("eigensolver failed: {0}")]
    Eigen(&'static str),
    #[error("newton solve failed: {reason}")]
    Newton { reason: NewtonFailure, trace: Vec<IterationRecord> },
    #[error("continuation stalled at t = {t_last}")]
    Continuation { t_last: f64 },
    #[error("leaf {index} of the ladder failed: {source}")]
    Ladder {
        index: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

/// Reason a Newton iteration stopped without meeting the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonFailure {
    Diverged,
    MaxIterations,
    NonPositiveMeanCurvature,
    SingularJacobian,
    InvalidGraph,
}

impl core::fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            NewtonFailure::Diverged => "residual did not decrease under damping",
            NewtonFailure::MaxIterations => "iteration limit reached",
            NewtonFailure::NonPositiveMeanCurvature => "mean curvature became non-positive",
            NewtonFailure::SingularJacobian => "jacobian singular beyond floor",
            NewtonFailure::InvalidGraph => "radial graph left the admissible set",
        };
        f.write_str(s)
    }
}

/// One Newton step as recorded in convergence traces.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub step_norm: f64,
    pub step_scale: f64,
}

pub type Result<T> = core::result::Result<T, Error>;
