//! The penalized control objective and the admissible set.
//!
//! The objective to minimize over consumption paths `c` is
//!
//! ```text
//! J(c, k) = int_0^T int -U(c) e^(-tau t - gamma |x|^2) dx dt
//!         + 1/(2 rho1) ||k(T) - k_T||_L2^2
//!         + 1/(2 rho2) ||min(0, k)||_{L2(0,T;L2)}^2,
//! ```
//!
//! with the bounded concave utility `U(c) = 1 - exp(-kappa c)`. Spatial
//! integrals use the shared midpoint quadrature; the running costs use the
//! left-endpoint rule in time, matching piecewise-constant controls (and
//! making the discrete adjoint exact). Setting `rho1` or `rho2` to infinity
//! switches the corresponding penalty off.
//!
//! The admissible set is the box-and-ball intersection
//! `{0 <= c <= c_max, ||c|| <= norm_cap}`; projections onto it use Dykstra
//! alternating projections (pointwise clip, radial scale) in the
//! quadrature-weighted norm.

use crate::control::Control;
use crate::error::ModelError;
use crate::forward::{Scenario, Trajectory};
use crate::grid::{Field, Grid, TimeGrid};

/// Discount rates, penalty weights, and utility curvature.
///
/// `rho1`/`rho2` may be `f64::INFINITY` to disable a penalty; `kappa = 0`
/// degenerates the utility to zero (useful for isolating penalty terms).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSpec {
    pub tau: f64,
    pub gamma: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub utility_kappa: f64,
}

impl ObjectiveSpec {
    pub fn new(
        tau: f64,
        gamma: f64,
        rho1: f64,
        rho2: f64,
        utility_kappa: f64,
    ) -> Result<Self, ModelError> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(ModelError::NegativeParam {
                name: "tau",
                value: tau,
            });
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(ModelError::NonPositiveParam {
                name: "gamma",
                value: gamma,
            });
        }
        for (name, value) in [("rho1", rho1), ("rho2", rho2)] {
            if !(value > 0.0) {
                return Err(ModelError::NonPositiveParam { name, value });
            }
        }
        if !utility_kappa.is_finite() || utility_kappa < 0.0 {
            return Err(ModelError::NegativeParam {
                name: "utility_kappa",
                value: utility_kappa,
            });
        }
        Ok(Self {
            tau,
            gamma,
            rho1,
            rho2,
            utility_kappa,
        })
    }

    /// Terminal-penalty coefficient `1 / (2 rho1)`; zero when disabled.
    pub fn terminal_weight(&self) -> f64 {
        if self.rho1.is_finite() {
            0.5 / self.rho1
        } else {
            0.0
        }
    }

    /// Hinge-penalty coefficient `1 / (2 rho2)`; zero when disabled.
    pub fn hinge_weight(&self) -> f64 {
        if self.rho2.is_finite() {
            0.5 / self.rho2
        } else {
            0.0
        }
    }

    /// Discount weight `w(x, t) = exp(-tau t - gamma |x|^2)` sampled on the
    /// grid; values in `(0, 1]`.
    pub fn weight_field(&self, grid: Grid, t: f64) -> Field {
        let time_factor = (-self.tau * t).exp();
        Field::from_fn(grid, |[x, y]| {
            time_factor * (-self.gamma * (x * x + y * y)).exp()
        })
    }
}

/// Bounded utility `U(c) = 1 - exp(-kappa c)`: concave, `U(0) = 0`,
/// `U <= 1`, locally Lipschitz with constant `kappa` on `[0, inf)`.
pub fn utility_value(spec: &ObjectiveSpec, c: f64) -> Result<f64, ModelError> {
    if c < 0.0 {
        return Err(ModelError::NegativeConsumption(c));
    }
    Ok(1.0 - (-spec.utility_kappa * c).exp())
}

/// `U'(c) = kappa exp(-kappa c)`.
pub fn utility_derivative(spec: &ObjectiveSpec, c: f64) -> Result<f64, ModelError> {
    if c < 0.0 {
        return Err(ModelError::NegativeConsumption(c));
    }
    Ok(spec.utility_kappa * (-spec.utility_kappa * c).exp())
}

// Unchecked smooth extensions used inside quadrature loops; the formula is
// defined for every real c, so perturbed controls in gradient checks stay
// evaluable.
pub(crate) fn utility_raw(kappa: f64, c: f64) -> f64 {
    1.0 - (-kappa * c).exp()
}

pub(crate) fn utility_deriv_raw(kappa: f64, c: f64) -> f64 {
    kappa * (-kappa * c).exp()
}

/// Evaluates the discrete objective for a control and its trajectory.
pub fn objective(
    spec: &ObjectiveSpec,
    scenario: &Scenario,
    control: &Control,
    trajectory: &Trajectory,
) -> Result<f64, ModelError> {
    control.validate(scenario.grid(), scenario.time())?;
    if trajectory.len() != scenario.time().steps() + 1
        || trajectory.states().iter().any(|s| s.grid() != scenario.grid())
    {
        return Err(ModelError::GridMismatch);
    }
    let grid = scenario.grid();
    let time = scenario.time();
    let dt = time.dt();
    let w_cell = grid.cell_volume();
    let kappa = spec.utility_kappa;

    // running utility, left-endpoint in time
    let mut running = 0.0;
    let spatial = spec.weight_field(grid, 0.0); // e^{-gamma |x|^2}
    for m in 0..time.steps() {
        let time_factor = (-spec.tau * time.node(m)).exp();
        let c = control.slab(m);
        let mut slab = 0.0;
        for (ci, wi) in c.values().iter().zip(spatial.values()) {
            slab += -utility_raw(kappa, *ci) * wi;
        }
        running += dt * w_cell * slab * time_factor;
    }

    // terminal misfit
    let terminal_weight = spec.terminal_weight();
    let mut terminal = 0.0;
    if terminal_weight > 0.0 {
        let misfit = trajectory.terminal().sub(scenario.k_target());
        terminal = terminal_weight * w_cell
            * misfit.values().iter().map(|v| v * v).sum::<f64>();
    }

    // nonnegativity hinge, left-endpoint in time
    let hinge_weight = spec.hinge_weight();
    let mut hinge = 0.0;
    if hinge_weight > 0.0 {
        for m in 0..time.steps() {
            let s = trajectory.state(m);
            let mut acc = 0.0;
            for &v in s.values() {
                let neg = v.min(0.0);
                acc += neg * neg;
            }
            hinge += hinge_weight * dt * w_cell * acc;
        }
    }

    Ok(running + terminal + hinge)
}

/// Bounded, closed, convex control set
/// `{c : 0 <= c(x, t) <= c_max(x), ||c|| <= norm_cap}`.
#[derive(Debug, Clone)]
pub struct AdmissibleSet {
    c_max: Field,
    norm_cap: f64,
}

impl AdmissibleSet {
    pub fn new(c_max: Field, norm_cap: f64) -> Result<Self, ModelError> {
        if c_max.min_value() < 0.0 {
            return Err(ModelError::NegativeParam {
                name: "c_max",
                value: c_max.min_value(),
            });
        }
        if !(norm_cap > 0.0) || !norm_cap.is_finite() {
            return Err(ModelError::NonPositiveParam {
                name: "norm_cap",
                value: norm_cap,
            });
        }
        Ok(Self { c_max, norm_cap })
    }

    pub fn c_max(&self) -> &Field {
        &self.c_max
    }

    pub fn norm_cap(&self) -> f64 {
        self.norm_cap
    }

    fn clip_box(&self, c: &Control) -> Control {
        c.map_slabs(|f| f.zip_map(&self.c_max, |v, hi| v.max(0.0).min(hi)))
    }

    fn scale_ball(&self, c: &Control, time: &TimeGrid) -> Control {
        let norm = c.norm(time);
        if norm <= self.norm_cap {
            c.clone()
        } else {
            c.scale(self.norm_cap / norm)
        }
    }

    /// Largest violation of the two constraints (for feasibility asserts).
    pub fn violation(&self, c: &Control, time: &TimeGrid) -> f64 {
        let box_violation = c
            .slabs()
            .iter()
            .map(|f| {
                f.values()
                    .iter()
                    .zip(self.c_max.values())
                    .map(|(&v, &hi)| (-v).max(v - hi).max(0.0))
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        box_violation.max(c.norm(time) - self.norm_cap)
    }
}

const DYKSTRA_TOL: f64 = 1e-10;
const DYKSTRA_MAX_ROUNDS: usize = 100;

/// Projection onto the admissible set in the quadrature-weighted L2 norm,
/// by Dykstra alternating projections with correction terms. Converges for
/// any intersection of closed convex sets; 100 rounds or a displacement
/// below 1e-10, whichever first.
pub fn project_admissible(set: &AdmissibleSet, time: &TimeGrid, c: &Control) -> Control {
    let mut x = c.clone();
    let zero = x.scale(0.0);
    let mut p = zero.clone();
    let mut q = zero;
    for _ in 0..DYKSTRA_MAX_ROUNDS {
        let y = set.clip_box(&x.add(&p));
        p = x.add(&p).sub(&y);
        let x_next = set.scale_ball(&y.add(&q), time);
        q = y.add(&q).sub(&x_next);
        let displacement = x_next.sub(&x).norm(time);
        x = x_next;
        if displacement <= DYKSTRA_TOL {
            break;
        }
    }
    x
}
