//! Randomized invariant suite behind the `check` subcommand.
//!
//! Every property draws its own fields from a ChaCha stream seeded by the
//! run seed, so a manifest alone reproduces the exact check. One PASS/FAIL
//! line is printed per property.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ramsey_core::adjoint::{gradient_fd_comparison, probe_directions};
use ramsey_core::control::Control;
use ramsey_core::grid::{h1_norm, l2_norm, Field};
use ramsey_core::objective::project_admissible;
use ramsey_core::operators::{
    apply_productivity, bilinear_form, garding_constants, growth_fraction_field,
    productivity_bound_constant, productivity_lipschitz_check, productivity_lipschitz_constant,
};

use crate::config::BuiltScenario;

pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_field(built: &BuiltScenario, rng: &mut ChaCha8Rng, amp: f64) -> Field {
    let grid = built.scenario.grid();
    Field::new(
        grid,
        (0..grid.num_points())
            .map(|_| rng.gen_range(-amp..amp))
            .collect(),
    )
    .expect("random field is finite")
}

fn check_growth_fraction(built: &BuiltScenario, rng: &mut ChaCha8Rng) -> PropertyResult {
    let scenario = &built.scenario;
    let bound = scenario.params().fraction_bound(scenario.grid().dim());
    let mut max_seen = 0.0f64;
    let mut violations = 0usize;
    for _ in 0..200 {
        let k = random_field(built, rng, 3.0);
        let f = growth_fraction_field(scenario.params(), scenario.productivity(), &k);
        max_seen = max_seen.max(f.max_value());
        if f.max_value() > bound || f.min_value() <= 0.0 {
            violations += 1;
        }
    }
    PropertyResult {
        name: "growth-fraction-bound",
        passed: violations == 0,
        detail: format!("200 fields, max {max_seen:.6} vs bound {bound:.6}, {violations} violations"),
    }
}

fn check_productivity_bound(built: &BuiltScenario, rng: &mut ChaCha8Rng) -> PropertyResult {
    let scenario = &built.scenario;
    let horizon = scenario.time().horizon();
    let c1 = productivity_bound_constant(
        scenario.params(),
        scenario.production(),
        scenario.productivity(),
        horizon,
    );
    let mut worst = 0.0f64;
    let mut violations = 0usize;
    for _ in 0..100 {
        let k = random_field(built, rng, 3.0);
        let t = rng.gen_range(0.0..horizon);
        let p = apply_productivity(
            scenario.params(),
            scenario.production(),
            scenario.productivity(),
            &k,
            t,
        );
        let ratio = l2_norm(&p) / l2_norm(&k).max(1e-300);
        worst = worst.max(ratio / c1);
        if ratio > c1 * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    PropertyResult {
        name: "productivity-l2-bound",
        passed: violations == 0,
        detail: format!("100 fields, worst ratio/c1 = {worst:.3e}, {violations} violations"),
    }
}

fn check_productivity_lipschitz(built: &BuiltScenario, rng: &mut ChaCha8Rng) -> PropertyResult {
    let scenario = &built.scenario;
    let horizon = scenario.time().horizon();
    let c2 = productivity_lipschitz_constant(
        scenario.params(),
        scenario.production(),
        scenario.productivity(),
        horizon,
    );
    let mut worst = 0.0f64;
    let mut violations = 0usize;
    for _ in 0..100 {
        let k1 = random_field(built, rng, 3.0);
        let k2 = random_field(built, rng, 3.0);
        let t = rng.gen_range(0.0..horizon);
        let (dp, dk) = productivity_lipschitz_check(
            scenario.params(),
            scenario.production(),
            scenario.productivity(),
            &k1,
            &k2,
            t,
        );
        let ratio = dp / dk.max(1e-300);
        worst = worst.max(ratio / c2);
        if ratio > c2 * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    PropertyResult {
        name: "productivity-lipschitz",
        passed: violations == 0,
        detail: format!("100 pairs, worst ratio/c2 = {worst:.3e}, {violations} violations"),
    }
}

fn check_garding(built: &BuiltScenario, rng: &mut ChaCha8Rng) -> PropertyResult {
    let scenario = &built.scenario;
    let (c2, c3) = garding_constants(scenario.params(), scenario.grid().dim());
    let mut min_margin = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..200 {
        let u = random_field(built, rng, 2.0);
        let lhs = bilinear_form(scenario.params(), scenario.productivity(), &u, &u)
            + c2 * l2_norm(&u).powi(2);
        let rhs = c3 * h1_norm(&u).powi(2);
        min_margin = min_margin.min(lhs / rhs);
        if lhs < rhs {
            violations += 1;
        }
    }
    PropertyResult {
        name: "garding-coercivity",
        passed: violations == 0,
        detail: format!("200 fields, min lhs/rhs = {min_margin:.4}, {violations} violations"),
    }
}

fn check_gradient(built: &BuiltScenario) -> PropertyResult {
    let scenario = &built.scenario;
    let base = built
        .admissible
        .c_max()
        .scale(0.3)
        .map(|v| v.min(0.3));
    let control = project_admissible(
        &built.admissible,
        scenario.time(),
        &Control::constant_in_time(&base, scenario.time()),
    );
    let dirs = probe_directions(scenario, 3);
    match gradient_fd_comparison(scenario, &built.objective, &control, &dirs, 1e-5) {
        Ok(pairs) => {
            let worst = pairs
                .iter()
                .map(|(a, fd)| (a - fd).abs() / a.abs().max(1e-14))
                .fold(0.0, f64::max);
            PropertyResult {
                name: "adjoint-gradient-fd",
                passed: worst <= 1e-5,
                detail: format!("3 directions, worst relative error {worst:.3e}"),
            }
        }
        Err(e) => PropertyResult {
            name: "adjoint-gradient-fd",
            passed: false,
            detail: format!("solver failure: {e}"),
        },
    }
}

/// Runs the whole suite, printing one line per property.
pub fn run_checks(built: &BuiltScenario, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let results = vec![
        check_growth_fraction(built, &mut rng),
        check_productivity_bound(built, &mut rng),
        check_productivity_lipschitz(built, &mut rng),
        check_garding(built, &mut rng),
        check_gradient(built),
    ];
    let mut all = true;
    for r in &results {
        println!(
            "{} {} — {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        all &= r.passed;
    }
    all
}
