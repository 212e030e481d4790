use thiserror::Error;

use crate::sim::Termination;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkerError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("inertia matrix is not invertible at the given configuration")]
    SingularInertia,

    #[error("invalid touchdown event: {0}")]
    InvalidEvent(String),

    #[error("non-dissipative impact: kinetic energy rose from {before:.6e} to {after:.6e}")]
    NonDissipativeImpact { before: f64, after: f64 },

    #[error("Poincaré map undefined: stride ended with {0:?}")]
    MapUndefined(Termination),

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("near free fall: 1 + vertical COM acceleration = {0:.4} at t = {1:.4}")]
    FreeFall(f64, f64),

    #[error("stride has zero or negative mean speed")]
    ZeroSpeed,

    #[error("section vector has dimension {got}, expected {expected}")]
    SectionDimension { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, WalkerError>;
