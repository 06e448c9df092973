//! Error types shared across the solver stack.

use thiserror::Error;

/// Errors raised while constructing grids, fields, kernels, or model parameters.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    UnsupportedDim(usize),
    #[error("grid radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("points_per_axis must be at least 16, got {0}")]
    TooFewPoints(usize),
    #[error("field has {got} values but grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field contains a non-finite value at index {0}")]
    NonFiniteValue(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("time horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("time grid needs at least one step")]
    NoTimeSteps,
    #[error("kernel bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("kernel dimension {kernel} does not match grid dimension {grid}")]
    KernelDimMismatch { kernel: usize, grid: usize },
    #[error(
        "kernel bandwidth {bandwidth} too large for the box: tail mass {tail:.3e} exceeds tolerance {tol:.3e}"
    )]
    KernelTailTooHeavy { bandwidth: f64, tail: f64, tol: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositiveParam { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative, got {value}")]
    NegativeParam { name: &'static str, value: f64 },
    #[error(
        "mu = {mu} exceeds eps = {eps}: the growth-fraction bound (eps/mu)^n requires 0 < mu <= eps"
    )]
    MuExceedsEps { mu: f64, eps: f64 },
    #[error("initial capital must be strictly positive everywhere (min = {0})")]
    NonPositiveInitialCapital(f64),
    #[error("control has {got} time slabs but the time grid has {expected} steps")]
    ControlLengthMismatch { expected: usize, got: usize },
    #[error("negative consumption {0} rejected: utility is defined for c >= 0")]
    NegativeConsumption(f64),
}

/// Errors raised by the time-stepping and optimization drivers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("non-finite state detected at time step {step}")]
    NonFiniteState { step: usize },
    #[error("non-finite adjoint detected at time step {step}")]
    NonFiniteAdjoint { step: usize },
    #[error("implicit solve failed to converge at step {step}: residual {residual:.3e} after {iterations} iterations")]
    LinearSolveFailed {
        step: usize,
        residual: f64,
        iterations: usize,
    },
    #[error(
        "fixed-point iteration on subinterval {subinterval} did not converge within {max_iter} iterations (last contraction factor {last_factor:.3e})"
    )]
    PicardNoConvergence {
        subinterval: usize,
        max_iter: usize,
        last_factor: f64,
    },
    #[error("subinterval length {subinterval} does not divide the horizon into whole time steps")]
    BadSubinterval { subinterval: f64 },
}
