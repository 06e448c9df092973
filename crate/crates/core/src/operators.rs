//! The two spatial operators of the capital equation and their discrete
//! diagnostics.
//!
//! Mixed diffusion applied to a capital field `k`:
//!
//! ```text
//! L(k) = alpha * Lap(k) + beta * (Gamma_eps * k - k . (Gamma_eps * 1)),
//! ```
//!
//! with the 3-point / 5-point Laplacian under reflecting ghost cells. The
//! nonlocal part uses the *gridded* kernel mass `Gamma_eps * 1`, so constant
//! fields are annihilated exactly and the double sum is antisymmetric, which
//! makes the term mass-conserving and its quadratic form positive
//! semidefinite on the truncated grid.
//!
//! Productivity-production applied pointwise:
//!
//! ```text
//! P(k)(x, t) = A0(x) * exp(fraction(k)(x) * t) * p(k(x)),
//! ```
//!
//! where `fraction` is the bounded growth fraction from [`crate::kernel`]
//! and `p` is a concave, bounded, Lipschitz production function with
//! `p(0) = 0`.

use crate::error::ModelError;
use crate::grid::{gradient, inner, l2_norm, Field, Grid};
use crate::kernel::{growth_fraction_cached, GaussianKernel, KernelCache, NominalSpec};

/// Coefficients of the capital equation.
///
/// `alpha` must stay strictly positive (the coercivity of the bilinear form
/// needs the local term); `beta = 0` is allowed and recovers the purely
/// local model. `mu <= eps` is required for the growth-fraction bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub eps: f64,
    pub mu: f64,
    pub xi: f64,
    pub nominal: NominalSpec,
}

impl ModelParams {
    pub fn new(
        alpha: f64,
        beta: f64,
        delta: f64,
        eps: f64,
        mu: f64,
        xi: f64,
        nominal: NominalSpec,
    ) -> Result<Self, ModelError> {
        for (name, value, strict) in [
            ("alpha", alpha, true),
            ("beta", beta, false),
            ("delta", delta, true),
            ("eps", eps, true),
            ("mu", mu, true),
            ("xi", xi, true),
        ] {
            if !value.is_finite() || (strict && !(value > 0.0)) || (!strict && value < 0.0) {
                return Err(if strict {
                    ModelError::NonPositiveParam { name, value }
                } else {
                    ModelError::NegativeParam { name, value }
                });
            }
        }
        if mu > eps {
            return Err(ModelError::MuExceedsEps { mu, eps });
        }
        Ok(Self {
            alpha,
            beta,
            delta,
            eps,
            mu,
            xi,
            nominal,
        })
    }

    /// `(eps/mu)^n`, the exact upper bound of the growth fraction.
    pub fn fraction_bound(&self, dim: usize) -> f64 {
        (self.eps / self.mu).powi(dim as i32)
    }
}

/// Concave, bounded, Lipschitz production function with `p(0) = 0`:
/// a saturating exponential `p(k) = M (1 - exp(-(L/M) max(k, 0)))`.
///
/// Negative capital is clamped to zero output; `|p| <= M` and
/// `|p(a) - p(b)| <= L |a - b|` hold globally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductionSpec {
    lipschitz: f64,
    bound: f64,
}

impl ProductionSpec {
    pub fn new(lipschitz: f64, bound: f64) -> Result<Self, ModelError> {
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(ModelError::NonPositiveParam {
                name: "production lipschitz",
                value: lipschitz,
            });
        }
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(ModelError::NonPositiveParam {
                name: "production bound",
                value: bound,
            });
        }
        Ok(Self { lipschitz, bound })
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn value(&self, k: f64) -> f64 {
        if k <= 0.0 {
            0.0
        } else {
            self.bound * (1.0 - (-(self.lipschitz / self.bound) * k).exp())
        }
    }

    /// One-sided derivative; zero on the clamped branch.
    pub fn deriv(&self, k: f64) -> f64 {
        if k <= 0.0 {
            0.0
        } else {
            self.lipschitz * (-(self.lipschitz / self.bound) * k).exp()
        }
    }
}

/// Initial productivity distribution plus the kernel transforms bound to a
/// grid. Immutable after construction; the caches make repeated operator
/// applications cheap and deterministic.
pub struct ProductivityState {
    a0: Field,
    mu_cache: KernelCache,
    eps_cache: KernelCache,
    a0_sup: f64,
    a0_l2: f64,
}

impl ProductivityState {
    pub fn new(a0: Field, params: &ModelParams, tail_tolerance: f64) -> Result<Self, ModelError> {
        let grid = a0.grid();
        let mu_kernel =
            GaussianKernel::new(params.mu, grid.dim())?.with_tail_tolerance(tail_tolerance);
        let eps_kernel =
            GaussianKernel::new(params.eps, grid.dim())?.with_tail_tolerance(tail_tolerance);
        let mu_cache = KernelCache::new(mu_kernel, grid)?;
        let eps_cache = KernelCache::new(eps_kernel, grid)?;
        let a0_sup = a0.max_abs();
        let a0_l2 = l2_norm(&a0);
        Ok(Self {
            a0,
            mu_cache,
            eps_cache,
            a0_sup,
            a0_l2,
        })
    }

    pub fn a0(&self) -> &Field {
        &self.a0
    }

    pub fn grid(&self) -> Grid {
        self.a0.grid()
    }

    pub fn mu_cache(&self) -> &KernelCache {
        &self.mu_cache
    }

    pub fn eps_cache(&self) -> &KernelCache {
        &self.eps_cache
    }

    pub fn a0_sup(&self) -> f64 {
        self.a0_sup
    }

    pub fn a0_l2(&self) -> f64 {
        self.a0_l2
    }
}

/// Discrete Laplacian with homogeneous-Neumann ghost-cell reflection.
pub fn laplacian(f: &Field) -> Field {
    let grid = f.grid();
    let p = grid.points_per_axis();
    let h2 = grid.spacing() * grid.spacing();
    let v = f.values();
    // reflected second difference along one axis; ghost = mirror cell
    let second_1d = |get: &dyn Fn(usize) -> f64, i: usize| -> f64 {
        let left = if i == 0 { get(0) } else { get(i - 1) };
        let right = if i == p - 1 { get(p - 1) } else { get(i + 1) };
        (left - 2.0 * get(i) + right) / h2
    };
    match grid.dim() {
        1 => {
            let out = (0..p).map(|i| second_1d(&|j| v[j], i)).collect();
            Field::new(grid, out).expect("laplacian produced non-finite values")
        }
        _ => {
            let mut out = vec![0.0; grid.num_points()];
            for i0 in 0..p {
                for i1 in 0..p {
                    out[i0 * p + i1] = second_1d(&|j| v[j * p + i1], i0)
                        + second_1d(&|j| v[i0 * p + j], i1);
                }
            }
            Field::new(grid, out).expect("laplacian produced non-finite values")
        }
    }
}

/// Nonlocal redistribution `Gamma_eps * k - k . (Gamma_eps * 1)` (without
/// the `beta` weight). Annihilates constants exactly and conserves mass.
pub fn nonlocal_term(state: &ProductivityState, k: &Field) -> Field {
    state
        .eps_cache()
        .convolve(k)
        .sub(&k.mul(state.eps_cache().mass()))
}

/// Mixed local-nonlocal diffusion `alpha Lap(k) + beta nonlocal(k)`.
pub fn apply_diffusion(params: &ModelParams, state: &ProductivityState, k: &Field) -> Field {
    let local = laplacian(k).scale(params.alpha);
    if params.beta == 0.0 {
        local
    } else {
        local.axpy(params.beta, &nonlocal_term(state, k))
    }
}

/// Growth fraction of the cached kernels; values in `(0, (eps/mu)^n]`.
pub fn growth_fraction_field(params: &ModelParams, state: &ProductivityState, k: &Field) -> Field {
    growth_fraction_cached(
        params.nominal,
        k,
        state.mu_cache(),
        state.eps_cache(),
        params.xi,
    )
}

/// The two nominal transforms `(Phi_mu(k), Phi_eps(k))` sharing one
/// pointwise `phi` evaluation; the adjoint needs both separately.
pub fn phi_transform_pair(
    params: &ModelParams,
    state: &ProductivityState,
    k: &Field,
) -> (Field, Field) {
    let phi = k.map(|v| params.nominal.phi(v));
    (
        state.mu_cache().convolve(&phi),
        state.eps_cache().convolve(&phi),
    )
}

/// Productivity-production operator at time `t`:
/// `A0 . exp(fraction(k) t) . p(k)`.
pub fn apply_productivity(
    params: &ModelParams,
    production: &ProductionSpec,
    state: &ProductivityState,
    k: &Field,
    t: f64,
) -> Field {
    let fraction = growth_fraction_field(params, state, k);
    let mut out = Vec::with_capacity(k.len());
    for i in 0..k.len() {
        let a0 = state.a0().values()[i];
        let f = fraction.values()[i];
        out.push(a0 * (f * t).exp() * production.value(k.values()[i]));
    }
    Field::new(k.grid(), out).expect("productivity operator produced non-finite values")
}

/// Upper bound `c1` with `||P(k)|| <= c1 ||k||` over `[0, T]`:
/// `c1 = sup|A0| exp(T (eps/mu)^n) L_p`.
pub fn productivity_bound_constant(
    params: &ModelParams,
    production: &ProductionSpec,
    state: &ProductivityState,
    horizon: f64,
) -> f64 {
    let bound = params.fraction_bound(state.grid().dim());
    state.a0_sup() * (horizon * bound).exp() * production.lipschitz()
}

/// Lipschitz constant `c2` of the productivity operator in the discrete L2
/// norm, traced through the product-rule split:
///
/// * the production factor contributes `L_p sup|A0| E` with
///   `E = exp(T (eps/mu)^n)`;
/// * the exponential factor contributes
///   `M_p T E (L_phi / xi) ||A0||_L2 ((eps/mu)^n G_eps + 2 G_mu)`,
///   where `G_nu` is the supremum over grid points of the discrete L2 norm
///   of a kernel row (computed on the grid, so the chain of inequalities is
///   exact at the discrete level).
pub fn productivity_lipschitz_constant(
    params: &ModelParams,
    production: &ProductionSpec,
    state: &ProductivityState,
    horizon: f64,
) -> f64 {
    let n_bound = params.fraction_bound(state.grid().dim());
    let e = (horizon * n_bound).exp();
    let term_production = production.lipschitz() * state.a0_sup() * e;
    let g_eps = state.eps_cache().row_l2_sup();
    let g_mu = state.mu_cache().row_l2_sup();
    let term_exponential = production.bound()
        * horizon
        * e
        * (params.nominal.lipschitz() / params.xi)
        * state.a0_l2()
        * (n_bound * g_eps + 2.0 * g_mu);
    term_production + term_exponential
}

/// Evaluates `(||P(k1) - P(k2)||, ||k1 - k2||)` so callers can check the
/// ratio against [`productivity_lipschitz_constant`].
pub fn productivity_lipschitz_check(
    params: &ModelParams,
    production: &ProductionSpec,
    state: &ProductivityState,
    k1: &Field,
    k2: &Field,
    t: f64,
) -> (f64, f64) {
    let p1 = apply_productivity(params, production, state, k1, t);
    let p2 = apply_productivity(params, production, state, k2, t);
    (l2_norm(&p1.sub(&p2)), l2_norm(&k1.sub(&k2)))
}

/// Bilinear form of the weak formulation,
///
/// ```text
/// a(u, v) = alpha <grad u, grad v> + delta <u, v> - beta <NL(u), v>,
/// ```
///
/// using the same central-difference gradient and midpoint quadrature as the
/// discrete norms.
pub fn bilinear_form(
    params: &ModelParams,
    state: &ProductivityState,
    u: &Field,
    v: &Field,
) -> f64 {
    let gu = gradient(u);
    let gv = gradient(v);
    let grad_term: f64 = gu.iter().zip(&gv).map(|(a, b)| inner(a, b)).sum();
    let mut total = params.alpha * grad_term + params.delta * inner(u, v);
    if params.beta != 0.0 {
        total -= params.beta * inner(&nonlocal_term(state, u), v);
    }
    total
}

/// Constants `(c2, c3)` of the weak-coercivity (Garding) inequality
/// `a(u, u) + c2 ||u||^2 >= c3 ||u||_H1^2`, obtained from the Young-split
/// estimate of the nonlocal term with Young parameter `c = alpha`:
/// `c3 = alpha / 2` and `c2 = max(0, alpha/2 + (beta kappa)^2 / (2 alpha) - delta)`,
/// where `kappa` is the mean absolute displacement of the kernel.
pub fn garding_constants(params: &ModelParams, dim: usize) -> (f64, f64) {
    let kappa = match dim {
        1 => params.eps * (2.0 / std::f64::consts::PI).sqrt(),
        _ => params.eps * (std::f64::consts::PI / 2.0).sqrt(),
    };
    let c3 = params.alpha / 2.0;
    let c2 = (params.alpha / 2.0 + (params.beta * kappa).powi(2) / (2.0 * params.alpha)
        - params.delta)
        .max(0.0);
    (c2, c3)
}
