//! Discrete adjoint of the IMEX scheme, the reduced gradient of the
//! objective with respect to the control, and projected gradient descent.
//!
//! The adjoint differentiates the discretization itself, so gradients are
//! exact for the discrete objective up to solver tolerances. With the
//! forward step
//!
//! ```text
//! M k[m+1] = k[m] + dt (beta NL(k[m]) + P(k[m], t_m) - c[m]),
//! M = (1 + dt delta) I - dt alpha Lap,
//! ```
//!
//! the backward sweep is
//!
//! ```text
//! lambda[N] = (1/rho1) (k[N] - k_T),
//! psi[m]    = M^-1 lambda[m+1]                       (M is symmetric),
//! lambda[m] = psi[m] + dt beta NL(psi[m])
//!           + dt JP(k[m], t_m)^T psi[m]
//!           + (dt/rho2) min(0, k[m]),
//! ```
//!
//! where `JP^T` is the transpose of the productivity linearization: the
//! product rule over `A0 exp(fraction t) p(k)` gives a diagonal production
//! part plus fraction sensitivities routed through the two convolutions —
//! transposes of convolutions are convolutions again by kernel symmetry.
//! The reduced gradient per slab is `g[m] = -U'(c[m]) w(t_m) - psi[m]`
//! (the control enters the equation as `-c`); the sign convention is pinned
//! by the finite-difference checks below.

use crate::control::Control;
use crate::error::SolveError;
use crate::forward::{solve_forward, Scenario, Trajectory};
use crate::grid::Field;
use crate::objective::{
    objective, project_admissible, utility_deriv_raw, AdmissibleSet, ObjectiveSpec,
};
use crate::operators::{nonlocal_term, phi_transform_pair};

/// Backtracking line-search parameters: projected-gradient Armijo with
/// sufficient decrease `J(c+) <= J(c) - (sigma/s) ||c+ - c||^2`.
#[derive(Debug, Clone, Copy)]
pub struct Armijo {
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
}

impl Default for Armijo {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeConfig {
    pub max_outer: usize,
    pub armijo: Armijo,
    /// Stop when `||c - P(c - g)|| <= grad_tol`.
    pub grad_tol: f64,
    /// Run a small finite-difference agreement check at the starting point.
    pub fd_check: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            max_outer: 100,
            armijo: Armijo::default(),
            grad_tol: 1e-6,
            fd_check: false,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let a = &self.armijo;
        let ok = a.initial_step > 0.0
            && a.shrink > 0.0
            && a.shrink < 1.0
            && a.sufficient_decrease > 0.0
            && a.sufficient_decrease < 0.5
            && self.grad_tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(SolveError::Model(crate::error::ModelError::NonPositiveParam {
                name: "optimizer configuration",
                value: f64::NAN,
            }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    GradientTolerance,
    MaxOuterReached,
    /// 60 halvings without sufficient decrease; the last iterate is
    /// reported.
    LineSearchFailed,
}

/// Backward-sweep output: the adjoint state at every node plus the per-slab
/// solves `psi[m] = M^-1 lambda[m+1]` that the reduced gradient consumes.
#[derive(Debug)]
pub struct AdjointSolution {
    lambdas: Vec<Field>,
    slab_adjoints: Vec<Field>,
}

impl AdjointSolution {
    pub fn lambdas(&self) -> &[Field] {
        &self.lambdas
    }

    pub fn slab_adjoints(&self) -> &[Field] {
        &self.slab_adjoints
    }
}

/// Transpose of the productivity linearization applied to `psi`.
fn productivity_jacobian_transpose(
    scenario: &Scenario,
    k: &Field,
    t: f64,
    psi: &Field,
) -> Field {
    let params = scenario.params();
    let production = scenario.production();
    let state = scenario.productivity();
    let (phi_mu, phi_eps) = phi_transform_pair(params, state, k);
    let a0 = state.a0().values();
    let n = k.len();

    let mut term_diag = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let denom = phi_eps.values()[i] + params.xi;
        let fraction = phi_mu.values()[i] / denom;
        let envelope = a0[i] * (fraction * t).exp();
        let ki = k.values()[i];
        let psi_i = psi.values()[i];
        term_diag.push(production.deriv(ki) * envelope * psi_i);
        let wi = psi_i * envelope * production.value(ki) * t / denom;
        w.push(wi);
        v.push(wi * fraction);
    }
    let w = Field::new(k.grid(), w).expect("adjoint weights must be finite");
    let v = Field::new(k.grid(), v).expect("adjoint weights must be finite");
    let conv_mu = state.mu_cache().convolve(&w);
    let conv_eps = state.eps_cache().convolve(&v);
    let mut out = term_diag;
    for i in 0..n {
        let phi_d = params.nominal.phi_deriv(k.values()[i]);
        out[i] += phi_d * (conv_mu.values()[i] - conv_eps.values()[i]);
    }
    Field::new(k.grid(), out).expect("adjoint jacobian produced non-finite values")
}

/// Backward sweep along a forward trajectory.
pub fn adjoint_solve(
    scenario: &Scenario,
    spec: &ObjectiveSpec,
    trajectory: &Trajectory,
    control: &Control,
) -> Result<AdjointSolution, SolveError> {
    control.validate(scenario.grid(), scenario.time())?;
    let time = scenario.time();
    let n = time.steps();
    let dt = time.dt();
    let params = scenario.params();
    let solver = scenario.solver();
    let hinge_coeff = 2.0 * spec.hinge_weight(); // dt-scaled below; 1/rho2
    let terminal_coeff = 2.0 * spec.terminal_weight(); // 1/rho1

    let mut lambdas = vec![Field::zeros(scenario.grid()); n + 1];
    let mut slab_adjoints = vec![Field::zeros(scenario.grid()); n];
    lambdas[n] = trajectory
        .terminal()
        .sub(scenario.k_target())
        .scale(terminal_coeff);

    for m in (0..n).rev() {
        let psi = solver.solve(&lambdas[m + 1], m)?;
        let k_m = trajectory.state(m);
        let mut lambda = psi.clone();
        if params.beta != 0.0 {
            lambda = lambda.axpy(dt * params.beta, &nonlocal_term(scenario.productivity(), &psi));
        }
        let jac_t = productivity_jacobian_transpose(scenario, k_m, time.node(m), &psi);
        lambda = lambda.axpy(dt, &jac_t);
        if hinge_coeff > 0.0 {
            lambda = lambda.axpy(dt * hinge_coeff, &k_m.map(|x| x.min(0.0)));
        }
        if !lambda.is_finite() {
            return Err(SolveError::NonFiniteAdjoint { step: m });
        }
        slab_adjoints[m] = psi;
        lambdas[m] = lambda;
    }
    Ok(AdjointSolution {
        lambdas,
        slab_adjoints,
    })
}

/// One objective-and-gradient evaluation at a control.
pub struct GradientEval {
    pub objective: f64,
    pub gradient: Control,
    pub trajectory: Trajectory,
    pub adjoint: AdjointSolution,
}

/// Solves forward, evaluates the objective, sweeps the adjoint, and
/// assembles the reduced gradient `g[m] = -U'(c[m]) w(., t_m) - psi[m]`.
pub fn evaluate(
    scenario: &Scenario,
    spec: &ObjectiveSpec,
    control: &Control,
) -> Result<GradientEval, SolveError> {
    let trajectory = solve_forward(scenario, control)?;
    let value = objective(spec, scenario, control, &trajectory)?;
    let adjoint = adjoint_solve(scenario, spec, &trajectory, control)?;
    let kappa = spec.utility_kappa;
    let slabs = (0..scenario.time().steps())
        .map(|m| {
            let weight = spec.weight_field(scenario.grid(), scenario.time().node(m));
            let c = control.slab(m);
            let psi = &adjoint.slab_adjoints()[m];
            let values = (0..c.len())
                .map(|i| {
                    -utility_deriv_raw(kappa, c.values()[i]) * weight.values()[i]
                        - psi.values()[i]
                })
                .collect();
            Field::new(scenario.grid(), values).expect("gradient must be finite")
        })
        .collect();
    Ok(GradientEval {
        objective: value,
        gradient: Control::new(slabs),
        trajectory,
        adjoint,
    })
}

/// Reduced gradient alone.
pub fn reduced_gradient(
    scenario: &Scenario,
    spec: &ObjectiveSpec,
    control: &Control,
) -> Result<Control, SolveError> {
    Ok(evaluate(scenario, spec, control)?.gradient)
}

/// Adjoint directional derivatives against central finite differences of
/// the objective, for caller-supplied directions. Returns
/// `(analytic, finite_difference)` pairs.
pub fn gradient_fd_comparison(
    scenario: &Scenario,
    spec: &ObjectiveSpec,
    control: &Control,
    directions: &[Control],
    eps: f64,
) -> Result<Vec<(f64, f64)>, SolveError> {
    let eval = evaluate(scenario, spec, control)?;
    let time = scenario.time();
    let mut out = Vec::with_capacity(directions.len());
    for d in directions {
        let analytic = eval.gradient.dot(d, time);
        let plus = control.axpy(eps, d);
        let minus = control.axpy(-eps, d);
        let j_plus = objective(spec, scenario, &plus, &solve_forward(scenario, &plus)?)?;
        let j_minus = objective(spec, scenario, &minus, &solve_forward(scenario, &minus)?)?;
        out.push((analytic, (j_plus - j_minus) / (2.0 * eps)));
    }
    Ok(out)
}

/// Deterministic smooth test directions (no RNG dependency): oscillatory
/// space-time profiles with a mean offset so they are not orthogonal to
/// symmetric gradients, normalized in the space-time norm.
pub fn probe_directions(scenario: &Scenario, count: usize) -> Vec<Control> {
    let grid = scenario.grid();
    let time = scenario.time();
    (0..count)
        .map(|j| {
            let freq = 1.0 + j as f64 * 0.7;
            let phase = 0.3 * (j as f64 + 1.0);
            let slabs = (0..time.steps())
                .map(|m| {
                    let tm = time.node(m);
                    let modulation = 1.0 + 0.5 * (tm * (j + 1) as f64).cos();
                    Field::from_fn(grid, |[x, y]| {
                        modulation
                            * (0.2
                                + (freq * x + 0.5 * y + phase).sin()
                                + 0.4 * ((freq + 0.3) * x - 0.2 * y).cos())
                    })
                })
                .collect();
            let c = Control::new(slabs);
            let norm = c.norm(time);
            c.scale(1.0 / norm)
        })
        .collect()
}

#[derive(Debug)]
pub struct OptimizeResult {
    pub control: Control,
    pub trajectory: Trajectory,
    /// Objective at the start plus after each accepted step; non-increasing
    /// by the Armijo rule.
    pub objective_history: Vec<f64>,
    /// Final projected-gradient residual `||c - P(c - g)||`.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: TerminationReason,
    /// Largest admissible-set violation over all accepted iterates.
    pub max_constraint_violation: f64,
    /// Worst relative finite-difference error when `fd_check` is on.
    pub fd_max_rel_error: Option<f64>,
}

const LINE_SEARCH_MAX_HALVINGS: usize = 60;

/// Projected gradient descent with Armijo backtracking, starting from
/// `init` (projected onto the admissible set first).
pub fn optimize(
    scenario: &Scenario,
    spec: &ObjectiveSpec,
    set: &AdmissibleSet,
    config: &OptimizeConfig,
    init: &Control,
) -> Result<OptimizeResult, SolveError> {
    config.validate()?;
    let time = scenario.time();
    let mut c = project_admissible(set, time, init);
    let mut eval = evaluate(scenario, spec, &c)?;
    let mut history = vec![eval.objective];
    let mut max_violation = set.violation(&c, time);
    let mut status = TerminationReason::MaxOuterReached;
    let mut iterations = 0;

    let fd_max_rel_error = if config.fd_check {
        let dirs = probe_directions(scenario, 3);
        let pairs = gradient_fd_comparison(scenario, spec, &c, &dirs, 1e-5)?;
        Some(
            pairs
                .iter()
                .map(|(a, fd)| (a - fd).abs() / a.abs().max(1e-14))
                .fold(0.0, f64::max),
        )
    } else {
        None
    };

    for _ in 0..config.max_outer {
        let residual = c
            .sub(&project_admissible(set, time, &c.axpy(-1.0, &eval.gradient)))
            .norm(time);
        if residual <= config.grad_tol {
            status = TerminationReason::GradientTolerance;
            break;
        }
        iterations += 1;

        let mut step = config.armijo.initial_step;
        let mut accepted = None;
        for _ in 0..=LINE_SEARCH_MAX_HALVINGS {
            let trial = project_admissible(set, time, &c.axpy(-step, &eval.gradient));
            let displacement_sq = trial.sub(&c).norm(time).powi(2);
            if displacement_sq == 0.0 {
                break; // projected step made no progress at any scale
            }
            let trial_eval = evaluate(scenario, spec, &trial)?;
            if trial_eval.objective
                <= eval.objective - config.armijo.sufficient_decrease / step * displacement_sq
            {
                accepted = Some((trial, trial_eval));
                break;
            }
            step *= config.armijo.shrink;
        }
        match accepted {
            Some((trial, trial_eval)) => {
                c = trial;
                eval = trial_eval;
                history.push(eval.objective);
                max_violation = max_violation.max(set.violation(&c, time));
            }
            None => {
                status = TerminationReason::LineSearchFailed;
                break;
            }
        }
    }

    let kkt_residual = c
        .sub(&project_admissible(set, time, &c.axpy(-1.0, &eval.gradient)))
        .norm(time);
    if status == TerminationReason::MaxOuterReached && kkt_residual <= config.grad_tol {
        status = TerminationReason::GradientTolerance;
    }
    Ok(OptimizeResult {
        control: c,
        trajectory: eval.trajectory,
        objective_history: history,
        kkt_residual,
        iterations,
        status,
        max_constraint_violation: max_violation,
        fd_max_rel_error,
    })
}
