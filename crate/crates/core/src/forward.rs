//! Time integration of the capital equation
//!
//! ```text
//! k_t - L(k) + delta k - P(k) = -c,    k(., 0) = k0 > 0,
//! ```
//!
//! by an IMEX scheme — implicit in the stiff local terms, explicit in the
//! bounded nonlocal and productivity terms — and, independently, by the
//! fixed-point construction that iterates the linear equation with the
//! productivity forcing frozen at the previous iterate. The two solvers
//! share one discrete fixed point: at convergence the Picard iterate
//! satisfies exactly the IMEX recursion, so their trajectories agree up to
//! the stopping tolerance.
//!
//! Each IMEX step solves
//!
//! ```text
//! (I + dt delta - dt alpha Lap) k+ = k + dt (beta NL(k) + P(k)(t) - c)
//! ```
//!
//! with the symmetric positive-definite solver of [`crate::linsolve`].

use crate::control::Control;
use crate::error::{ModelError, SolveError};
use crate::grid::{h1_seminorm, l2_norm, Field, Grid, TimeGrid};
use crate::linsolve::ImplicitSolver;
use crate::objective::AdmissibleSet;
use crate::operators::{
    apply_productivity, growth_fraction_field, nonlocal_term, productivity_lipschitz_constant,
    ModelParams, ProductionSpec, ProductivityState,
};

/// Full problem data: discretization, coefficients, initial and target
/// capital.
pub struct Scenario {
    grid: Grid,
    time: TimeGrid,
    params: ModelParams,
    production: ProductionSpec,
    productivity: ProductivityState,
    k0: Field,
    k_target: Field,
}

impl Scenario {
    pub fn new(
        grid: Grid,
        time: TimeGrid,
        params: ModelParams,
        production: ProductionSpec,
        productivity: ProductivityState,
        k0: Field,
        k_target: Field,
    ) -> Result<Self, ModelError> {
        if productivity.grid() != grid || k0.grid() != grid || k_target.grid() != grid {
            return Err(ModelError::GridMismatch);
        }
        let min_k0 = k0.min_value();
        if !(min_k0 > 0.0) {
            return Err(ModelError::NonPositiveInitialCapital(min_k0));
        }
        Ok(Self {
            grid,
            time,
            params,
            production,
            productivity,
            k0,
            k_target,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn production(&self) -> &ProductionSpec {
        &self.production
    }

    pub fn productivity(&self) -> &ProductivityState {
        &self.productivity
    }

    pub fn k0(&self) -> &Field {
        &self.k0
    }

    pub fn k_target(&self) -> &Field {
        &self.k_target
    }

    /// Conservative step-size bound for the explicitly integrated terms:
    /// `dt <= 1 / (2 beta + c2)` with `c2` the productivity Lipschitz
    /// constant. The shipped scenarios satisfy it with margin.
    pub fn explicit_stability_limit(&self) -> f64 {
        let lip = productivity_lipschitz_constant(
            &self.params,
            &self.production,
            &self.productivity,
            self.time.horizon(),
        );
        1.0 / (2.0 * self.params.beta + lip).max(f64::MIN_POSITIVE)
    }

    pub(crate) fn solver(&self) -> ImplicitSolver {
        ImplicitSolver::new(self.grid, self.time.dt(), self.params.alpha, self.params.delta)
    }
}

/// Per-node solution diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    pub l2: f64,
    pub h1_semi: f64,
    pub min_value: f64,
    pub max_growth_fraction: f64,
    /// L2 norm of the beta-weighted nonlocal term; identically zero when
    /// `beta = 0` (the purely local model).
    pub nonlocal_l2: f64,
}

/// Time-indexed solution states plus diagnostics, one entry per node.
#[derive(Debug)]
pub struct Trajectory {
    states: Vec<Field>,
    diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    /// Wraps precomputed states, recomputing diagnostics.
    pub fn from_states(scenario: &Scenario, states: Vec<Field>) -> Result<Self, SolveError> {
        for (m, s) in states.iter().enumerate() {
            if !s.is_finite() {
                return Err(SolveError::NonFiniteState { step: m });
            }
        }
        let diagnostics = states
            .iter()
            .enumerate()
            .map(|(m, s)| diagnostics_at(scenario, s, scenario.time.node(m)))
            .collect();
        Ok(Self {
            states,
            diagnostics,
        })
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn state(&self, m: usize) -> &Field {
        &self.states[m]
    }

    pub fn terminal(&self) -> &Field {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn diagnostics_at(scenario: &Scenario, state: &Field, t: f64) -> StepDiagnostics {
    let params = scenario.params();
    let nonlocal_l2 = if params.beta == 0.0 {
        0.0
    } else {
        params.beta * l2_norm(&nonlocal_term(scenario.productivity(), state))
    };
    StepDiagnostics {
        t,
        l2: l2_norm(state),
        h1_semi: h1_seminorm(state),
        min_value: state.min_value(),
        max_growth_fraction: growth_fraction_field(params, scenario.productivity(), state)
            .max_value(),
        nonlocal_l2,
    }
}

/// Explicit forcing `k + dt (beta NL(k) + P(source, t) - c)`; the
/// productivity argument is split out so the fixed-point solver can freeze
/// it at the previous iterate.
fn explicit_rhs(scenario: &Scenario, k: &Field, prod_source: &Field, c: &Field, t: f64) -> Field {
    let params = scenario.params();
    let dt = scenario.time().dt();
    let mut forcing = apply_productivity(
        params,
        scenario.production(),
        scenario.productivity(),
        prod_source,
        t,
    )
    .sub(c);
    if params.beta != 0.0 {
        forcing = forcing.axpy(params.beta, &nonlocal_term(scenario.productivity(), k));
    }
    k.axpy(dt, &forcing)
}

fn step_with(
    scenario: &Scenario,
    solver: &ImplicitSolver,
    k: &Field,
    prod_source: &Field,
    c: &Field,
    t: f64,
    step: usize,
) -> Result<Field, SolveError> {
    let rhs = explicit_rhs(scenario, k, prod_source, c, t);
    let next = solver.solve(&rhs, step)?;
    if !next.is_finite() {
        return Err(SolveError::NonFiniteState { step });
    }
    Ok(next)
}

/// One IMEX step from state `k` at time `t` with slab control `c`.
pub fn step_imex(scenario: &Scenario, k: &Field, c: &Field, t: f64) -> Result<Field, SolveError> {
    step_with(scenario, &scenario.solver(), k, k, c, t, 0)
}

/// Integrates the full horizon; `control` holds one field per time slab.
pub fn solve_forward(scenario: &Scenario, control: &Control) -> Result<Trajectory, SolveError> {
    control.validate(scenario.grid(), scenario.time())?;
    let solver = scenario.solver();
    let n = scenario.time().steps();
    let mut states = Vec::with_capacity(n + 1);
    states.push(scenario.k0().clone());
    for m in 0..n {
        let t = scenario.time().node(m);
        let next = step_with(
            scenario,
            &solver,
            &states[m],
            &states[m],
            control.slab(m),
            t,
            m,
        )?;
        states.push(next);
    }
    Trajectory::from_states(scenario, states)
}

/// Convergence record of the fixed-point solve on one subinterval.
#[derive(Debug, Clone)]
pub struct ContractionRecord {
    pub subinterval: usize,
    pub iterations: usize,
    /// Successive-iterate distances in the max-over-time L2 norm.
    pub diffs: Vec<f64>,
    /// Ratios of successive distances; contraction means every entry < 1.
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct PicardReport {
    pub records: Vec<ContractionRecord>,
}

impl PicardReport {
    pub fn max_factor(&self) -> f64 {
        self.records
            .iter()
            .flat_map(|r| r.factors.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn total_iterations(&self) -> usize {
        self.records.iter().map(|r| r.iterations).sum()
    }
}

/// Solves the equation by the fixed-point construction: on each subinterval
/// of length `t_star` iterate `v -> u`, where `u` solves the linear equation
/// with the productivity forcing frozen at `v`, until successive iterates
/// differ by at most `tol` in the max-over-time L2 norm. Subinterval
/// terminal states become the next initial data.
pub fn solve_picard(
    scenario: &Scenario,
    control: &Control,
    t_star: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Trajectory, PicardReport), SolveError> {
    control.validate(scenario.grid(), scenario.time())?;
    let time = scenario.time();
    let n = time.steps();
    let horizon = time.horizon();
    if !(t_star > 0.0) || t_star > horizon {
        return Err(SolveError::BadSubinterval { subinterval: t_star });
    }
    let num_sub = (horizon / t_star).round() as usize;
    let aligned = (horizon - num_sub as f64 * t_star).abs() <= 1e-9 * horizon;
    if num_sub == 0 || !aligned || n % num_sub != 0 {
        return Err(SolveError::BadSubinterval { subinterval: t_star });
    }
    let sps = n / num_sub; // steps per subinterval

    let solver = scenario.solver();
    let mut states: Vec<Field> = Vec::with_capacity(n + 1);
    states.push(scenario.k0().clone());
    let mut report = PicardReport::default();

    for s in 0..num_sub {
        let m0 = s * sps;
        let k_init = states[m0].clone();
        // constant-in-time initial guess
        let mut v: Vec<Field> = vec![k_init.clone(); sps + 1];
        let mut record = ContractionRecord {
            subinterval: s,
            iterations: 0,
            diffs: Vec::new(),
            factors: Vec::new(),
        };
        let mut converged = false;
        for _ in 0..max_iter {
            record.iterations += 1;
            let mut u: Vec<Field> = Vec::with_capacity(sps + 1);
            u.push(k_init.clone());
            for mm in 0..sps {
                let m = m0 + mm;
                let next = step_with(
                    scenario,
                    &solver,
                    &u[mm],
                    &v[mm],
                    control.slab(m),
                    time.node(m),
                    m,
                )?;
                u.push(next);
            }
            let diff = u
                .iter()
                .zip(&v)
                .map(|(a, b)| l2_norm(&a.sub(b)))
                .fold(0.0, f64::max);
            if let Some(&prev) = record.diffs.last() {
                if prev > 0.0 {
                    record.factors.push(diff / prev);
                }
            }
            record.diffs.push(diff);
            v = u;
            if diff <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SolveError::PicardNoConvergence {
                subinterval: s,
                max_iter,
                last_factor: record.factors.last().copied().unwrap_or(f64::NAN),
            });
        }
        states.extend(v.into_iter().skip(1));
        report.records.push(record);
    }
    let trajectory = Trajectory::from_states(scenario, states)?;
    Ok((trajectory, report))
}

/// Norm triple for the a-priori estimate: the discrete
/// `(||k||_{L2(0,T;H1)}, ||k||_{Linf(0,T;L2)}, ||c|| + ||k0|| + 1)`.
/// Tests assert that `lhs / rhs` stays below a calibrated constant across a
/// scenario family.
#[derive(Debug, Clone, Copy)]
pub struct AprioriReport {
    pub state_l2_h1: f64,
    pub state_linf_l2: f64,
    pub data_norm: f64,
}

impl AprioriReport {
    /// `(||k||_{L2 H1} + ||k||_{Linf L2}) / (||c|| + ||k0|| + 1)`.
    pub fn ratio(&self) -> f64 {
        (self.state_l2_h1 + self.state_linf_l2) / self.data_norm
    }
}

pub fn apriori_report(
    scenario: &Scenario,
    trajectory: &Trajectory,
    control: &Control,
) -> AprioriReport {
    let dt = scenario.time().dt();
    let last = trajectory.len() - 1;
    let mut h1_sq = 0.0;
    let mut linf = 0.0f64;
    for (m, state) in trajectory.states().iter().enumerate() {
        let l2 = l2_norm(state);
        let semi = h1_seminorm(state);
        let weight = if m == 0 || m == last { 0.5 } else { 1.0 };
        h1_sq += weight * dt * (l2 * l2 + semi * semi);
        linf = linf.max(l2);
    }
    AprioriReport {
        state_l2_h1: h1_sq.sqrt(),
        state_linf_l2: linf,
        data_norm: control.norm(scenario.time()) + l2_norm(scenario.k0()) + 1.0,
    }
}

/// Checks the sufficient condition under which the weak solution is
/// certified bounded: `4 L_p^2 <= theta` and
/// `sup_x (|k0(x)| + T c_max(x)^2) < 1 / (16 L_p T e^(theta T / 2))`,
/// evaluated with grid suprema. Scenarios passing it are labeled
/// "theory-certified bounded"; others are merely empirical.
pub fn check_boundedness_condition(
    scenario: &Scenario,
    admissible: &AdmissibleSet,
    theta: f64,
) -> bool {
    let lp = scenario.production().lipschitz();
    // boundary cases like 4 * 0.1^2 <= 0.04 must not fail by one ulp
    if 4.0 * lp * lp > theta * (1.0 + 1e-12) {
        return false;
    }
    let horizon = scenario.time().horizon();
    let sup = scenario
        .k0()
        .values()
        .iter()
        .zip(admissible.c_max().values())
        .map(|(&k0, &cm)| k0.abs() + horizon * cm * cm)
        .fold(0.0f64, f64::max);
    sup < 1.0 / (16.0 * lp * horizon * (theta * horizon / 2.0).exp())
}
