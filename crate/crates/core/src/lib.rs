//! Solver library for a capital-accumulation equation with mixed
//! local-nonlocal Gaussian diffusion and an endogenous productivity term,
//! plus the PDE-constrained optimal control machinery (discrete adjoint,
//! projected gradient) that computes the equilibrium consumption path.
//!
//! Module map:
//!
//! * [`grid`] — cell-centered grids, fields, quadrature, discrete norms;
//! * [`kernel`] — Gaussian kernels, fast/direct convolution, growth fraction;
//! * [`operators`] — diffusion and productivity operators, bilinear form;
//! * [`forward`] — IMEX time stepping and the fixed-point (Picard) solver;
//! * [`control`] — time-indexed control paths;
//! * [`objective`] — discounted utility objective and admissible-set projection;
//! * [`adjoint`] — discrete adjoint, reduced gradient, projected gradient descent.

pub mod adjoint;
pub mod control;
pub mod error;
pub mod forward;
pub mod grid;
pub mod kernel;
pub mod linsolve;
pub mod objective;
pub mod operators;

pub use error::{ModelError, SolveError};
pub use grid::{Field, Grid, TimeGrid};
