//! Line-based scenario configuration: `key = value` entries under
//! `[section]` headers, `#` comments. Every key has a documented default,
//! so the empty file parses to the default scenario. Unknown sections or
//! keys are rejected, and parsing reports *all* problems, not just the
//! first.
//!
//! Initial fields are built from named generators:
//!
//! * `constant(v)`
//! * `gaussian-bump(cx[, cy], width, height)` — `height * exp(-|x - c|^2 / (2 width^2))`
//! * `step(edge, lo, hi)` — `lo` where `x < edge`, else `hi`
//! * `sum-of-bumps(cx[, cy], w, h; ...)` — sum of Gaussian bumps
//!
//! Center coordinates carry one entry per grid dimension.

use std::collections::BTreeMap;
use std::fmt;

use ramsey_core::adjoint::{Armijo, OptimizeConfig};
use ramsey_core::control::Control;
use ramsey_core::forward::Scenario;
use ramsey_core::grid::{Field, Grid, TimeGrid};
use ramsey_core::kernel::NominalSpec;
use ramsey_core::objective::{AdmissibleSet, ObjectiveSpec};
use ramsey_core::operators::{ModelParams, ProductionSpec, ProductivityState};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// Spatial profile generator for initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldGen {
    Constant(f64),
    GaussianBump { center: Vec<f64>, width: f64, height: f64 },
    Step { edge: f64, lo: f64, hi: f64 },
    SumOfBumps(Vec<(Vec<f64>, f64, f64)>),
}

impl FieldGen {
    pub fn parse(text: &str, line: usize) -> Result<Self, ConfigError> {
        let text = text.trim();
        let open = text
            .find('(')
            .ok_or_else(|| err(Some(line), format!("malformed generator '{text}'")))?;
        if !text.ends_with(')') {
            return Err(err(Some(line), format!("malformed generator '{text}'")));
        }
        let name = text[..open].trim();
        let body = &text[open + 1..text.len() - 1];
        let nums = |chunk: &str| -> Result<Vec<f64>, ConfigError> {
            chunk
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| err(Some(line), format!("bad number '{}'", s.trim())))
                })
                .collect()
        };
        match name {
            "constant" => {
                let args = nums(body)?;
                if args.len() != 1 {
                    return Err(err(Some(line), "constant(v) takes one argument"));
                }
                Ok(FieldGen::Constant(args[0]))
            }
            "gaussian-bump" => {
                let args = nums(body)?;
                if args.len() < 3 || args.len() > 4 {
                    return Err(err(
                        Some(line),
                        "gaussian-bump takes (cx[, cy], width, height)",
                    ));
                }
                let (center, rest) = args.split_at(args.len() - 2);
                Ok(FieldGen::GaussianBump {
                    center: center.to_vec(),
                    width: rest[0],
                    height: rest[1],
                })
            }
            "step" => {
                let args = nums(body)?;
                if args.len() != 3 {
                    return Err(err(Some(line), "step takes (edge, lo, hi)"));
                }
                Ok(FieldGen::Step {
                    edge: args[0],
                    lo: args[1],
                    hi: args[2],
                })
            }
            "sum-of-bumps" => {
                let mut bumps = Vec::new();
                for chunk in body.split(';') {
                    let args = nums(chunk)?;
                    if args.len() < 3 || args.len() > 4 {
                        return Err(err(
                            Some(line),
                            "each bump takes (cx[, cy], width, height)",
                        ));
                    }
                    let (center, rest) = args.split_at(args.len() - 2);
                    bumps.push((center.to_vec(), rest[0], rest[1]));
                }
                Ok(FieldGen::SumOfBumps(bumps))
            }
            other => Err(err(Some(line), format!("unknown generator '{other}'"))),
        }
    }

    pub fn build(&self, grid: Grid) -> Result<Field, ConfigError> {
        let dim = grid.dim();
        let check_center = |c: &[f64]| -> Result<(), ConfigError> {
            if c.len() != dim {
                Err(err(
                    None,
                    format!(
                        "generator center has {} coordinates but the grid is {dim}-dimensional",
                        c.len()
                    ),
                ))
            } else {
                Ok(())
            }
        };
        let bump = |center: &[f64], width: f64, height: f64, x: f64, y: f64| {
            let cx = center[0];
            let cy = if center.len() > 1 { center[1] } else { 0.0 };
            let r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            height * (-r2 / (2.0 * width * width)).exp()
        };
        match self {
            FieldGen::Constant(v) => Ok(Field::constant(grid, *v)),
            FieldGen::GaussianBump {
                center,
                width,
                height,
            } => {
                check_center(center)?;
                if !(*width > 0.0) {
                    return Err(err(None, "bump width must be positive"));
                }
                Ok(Field::from_fn(grid, |[x, y]| {
                    bump(center, *width, *height, x, y)
                }))
            }
            FieldGen::Step { edge, lo, hi } => Ok(Field::from_fn(grid, |[x, _]| {
                if x < *edge {
                    *lo
                } else {
                    *hi
                }
            })),
            FieldGen::SumOfBumps(bumps) => {
                for (c, w, _) in bumps {
                    check_center(c)?;
                    if !(*w > 0.0) {
                        return Err(err(None, "bump width must be positive"));
                    }
                }
                Ok(Field::from_fn(grid, |[x, y]| {
                    bumps
                        .iter()
                        .map(|(c, w, h)| bump(c, *w, *h, x, y))
                        .sum()
                }))
            }
        }
    }
}

impl fmt::Display for FieldGen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        match self {
            FieldGen::Constant(v) => write!(f, "constant({v:?})"),
            FieldGen::GaussianBump {
                center,
                width,
                height,
            } => {
                write!(f, "gaussian-bump({}, {width:?}, {height:?})", join(center))
            }
            FieldGen::Step { edge, lo, hi } => write!(f, "step({edge:?}, {lo:?}, {hi:?})"),
            FieldGen::SumOfBumps(bumps) => {
                let parts: Vec<String> = bumps
                    .iter()
                    .map(|(c, w, h)| format!("{}, {w:?}, {h:?}", join(c)))
                    .collect();
                write!(f, "sum-of-bumps({})", parts.join("; "))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Imex,
    Picard,
}

impl SolverChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverChoice::Imex => "imex",
            SolverChoice::Picard => "picard",
        }
    }
}

/// Typed configuration; field order mirrors the canonical serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    // [grid]
    pub dim: usize,
    pub radius: f64,
    pub points_per_axis: usize,
    // [time]
    pub horizon: f64,
    pub steps: usize,
    // [model]
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub eps: f64,
    pub mu: f64,
    pub xi: f64,
    pub eta: f64,
    // [production]
    pub lipschitz: f64,
    pub bound: f64,
    // [objective]
    pub tau: f64,
    pub gamma: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub kappa: f64,
    // [admissible]
    pub norm_cap: f64,
    pub c_max: FieldGen,
    // [fields]
    pub k0: FieldGen,
    pub k_target: FieldGen,
    pub a0: FieldGen,
    // [run]
    pub tail_tol: f64,
    pub seed: u64,
    pub solver: SolverChoice,
    pub control: FieldGen,
    pub picard_subintervals: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    // [optimize]
    pub max_outer: usize,
    pub grad_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub fd_check: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            radius: 6.0,
            points_per_axis: 128,
            horizon: 1.0,
            steps: 200,
            alpha: 0.05,
            beta: 0.5,
            delta: 0.1,
            eps: 1.0,
            mu: 0.5,
            xi: 0.1,
            eta: 0.01,
            lipschitz: 0.5,
            bound: 1.0,
            tau: 0.1,
            gamma: 0.1,
            rho1: 1.0,
            rho2: 1.0,
            kappa: 1.0,
            norm_cap: 10.0,
            c_max: FieldGen::Constant(0.5),
            k0: FieldGen::SumOfBumps(vec![(vec![0.0], 50.0, 0.5), (vec![0.0], 1.0, 0.5)]),
            k_target: FieldGen::SumOfBumps(vec![(vec![0.0], 50.0, 0.55), (vec![0.0], 1.0, 0.55)]),
            a0: FieldGen::GaussianBump {
                center: vec![0.0],
                width: 1.0,
                height: 1.0,
            },
            tail_tol: 1e-8,
            seed: 0,
            solver: SolverChoice::Imex,
            control: FieldGen::Constant(0.0),
            picard_subintervals: 8,
            picard_tol: 1e-10,
            picard_max_iter: 50,
            max_outer: 100,
            grad_tol: 1e-6,
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            fd_check: false,
        }
    }
}

fn parse_sections(
    text: &str,
) -> Result<BTreeMap<String, Vec<(usize, String, String)>>, Vec<ConfigError>> {
    let mut sections: BTreeMap<String, Vec<(usize, String, String)>> = BTreeMap::new();
    let mut current: Option<String> = None;
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if line.ends_with(']') {
                let name = line[1..line.len() - 1].trim().to_string();
                sections.entry(name.clone()).or_default();
                current = Some(name);
            } else {
                errors.push(err(Some(line_no), format!("malformed section header '{line}'")));
            }
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let section = match &current {
                    Some(s) => s.clone(),
                    None => {
                        errors.push(err(
                            Some(line_no),
                            format!("key '{}' appears before any [section]", k.trim()),
                        ));
                        continue;
                    }
                };
                sections.entry(section).or_default().push((
                    line_no,
                    k.trim().to_string(),
                    v.trim().to_string(),
                ));
            }
            None => errors.push(err(Some(line_no), format!("expected 'key = value', got '{line}'"))),
        }
    }
    if errors.is_empty() {
        Ok(sections)
    } else {
        Err(errors)
    }
}

struct SectionReader<'a> {
    entries: Vec<(usize, String, String)>,
    used: Vec<bool>,
    errors: &'a mut Vec<ConfigError>,
}

impl<'a> SectionReader<'a> {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        for (i, (line, k, v)) in self.entries.iter().enumerate() {
            if k == key && !self.used[i] {
                self.used[i] = true;
                return Some((*line, v.clone()));
            }
        }
        None
    }

    fn parse_into<T: std::str::FromStr>(&mut self, key: &str, target: &mut T, kind: &str) {
        if let Some((line, v)) = self.take(key) {
            match v.parse::<T>() {
                Ok(parsed) => *target = parsed,
                Err(_) => self
                    .errors
                    .push(err(Some(line), format!("key '{key}' expects {kind}, got '{v}'"))),
            }
        }
    }

    fn parse_gen(&mut self, key: &str, target: &mut FieldGen) {
        if let Some((line, v)) = self.take(key) {
            match FieldGen::parse(&v, line) {
                Ok(g) => *target = g,
                Err(e) => self.errors.push(e),
            }
        }
    }

    fn finish(self, section: &str) {
        for (i, (line, k, _)) in self.entries.iter().enumerate() {
            if !self.used[i] {
                self.errors.push(err(
                    Some(*line),
                    format!("unknown key '{k}' in section [{section}]"),
                ));
            }
        }
    }
}

/// Parses and validates a configuration, reporting every error found.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, Vec<ConfigError>> {
    let mut sections = parse_sections(text)?;
    let mut cfg = ScenarioConfig::default();
    let mut errors: Vec<ConfigError> = Vec::new();

    let known = [
        "grid",
        "time",
        "model",
        "production",
        "objective",
        "admissible",
        "fields",
        "run",
        "optimize",
    ];
    let unknown_sections: Vec<String> = sections
        .keys()
        .filter(|s| !known.contains(&s.as_str()))
        .cloned()
        .collect();
    for s in unknown_sections {
        errors.push(err(None, format!("unknown section [{s}]")));
        sections.remove(&s);
    }

    let mut read = |name: &str, errors: &mut Vec<ConfigError>, f: &mut dyn FnMut(&mut SectionReader)| {
        let entries = sections.remove(name).unwrap_or_default();
        let used = vec![false; entries.len()];
        let mut reader = SectionReader {
            entries,
            used,
            errors,
        };
        f(&mut reader);
        reader.finish(name);
    };

    read("grid", &mut errors, &mut |r| {
        r.parse_into("dim", &mut cfg.dim, "an integer");
        r.parse_into("radius", &mut cfg.radius, "a number");
        r.parse_into("points_per_axis", &mut cfg.points_per_axis, "an integer");
    });
    read("time", &mut errors, &mut |r| {
        r.parse_into("horizon", &mut cfg.horizon, "a number");
        r.parse_into("steps", &mut cfg.steps, "an integer");
    });
    read("model", &mut errors, &mut |r| {
        r.parse_into("alpha", &mut cfg.alpha, "a number");
        r.parse_into("beta", &mut cfg.beta, "a number");
        r.parse_into("delta", &mut cfg.delta, "a number");
        r.parse_into("eps", &mut cfg.eps, "a number");
        r.parse_into("mu", &mut cfg.mu, "a number");
        r.parse_into("xi", &mut cfg.xi, "a number");
        r.parse_into("eta", &mut cfg.eta, "a number");
    });
    read("production", &mut errors, &mut |r| {
        r.parse_into("lipschitz", &mut cfg.lipschitz, "a number");
        r.parse_into("bound", &mut cfg.bound, "a number");
    });
    read("objective", &mut errors, &mut |r| {
        r.parse_into("tau", &mut cfg.tau, "a number");
        r.parse_into("gamma", &mut cfg.gamma, "a number");
        r.parse_into("rho1", &mut cfg.rho1, "a number (or inf)");
        r.parse_into("rho2", &mut cfg.rho2, "a number (or inf)");
        r.parse_into("kappa", &mut cfg.kappa, "a number");
    });
    read("admissible", &mut errors, &mut |r| {
        r.parse_into("norm_cap", &mut cfg.norm_cap, "a number");
        r.parse_gen("c_max", &mut cfg.c_max);
    });
    read("fields", &mut errors, &mut |r| {
        r.parse_gen("k0", &mut cfg.k0);
        r.parse_gen("k_target", &mut cfg.k_target);
        r.parse_gen("a0", &mut cfg.a0);
    });
    read("run", &mut errors, &mut |r| {
        r.parse_into("tail_tol", &mut cfg.tail_tol, "a number");
        r.parse_into("seed", &mut cfg.seed, "an integer");
        if let Some((line, v)) = r.take("solver") {
            match v.as_str() {
                "imex" => cfg.solver = SolverChoice::Imex,
                "picard" => cfg.solver = SolverChoice::Picard,
                other => r
                    .errors
                    .push(err(Some(line), format!("solver must be imex or picard, got '{other}'"))),
            }
        }
        r.parse_gen("control", &mut cfg.control);
        r.parse_into(
            "picard_subintervals",
            &mut cfg.picard_subintervals,
            "an integer",
        );
        r.parse_into("picard_tol", &mut cfg.picard_tol, "a number");
        r.parse_into("picard_max_iter", &mut cfg.picard_max_iter, "an integer");
    });
    read("optimize", &mut errors, &mut |r| {
        r.parse_into("max_outer", &mut cfg.max_outer, "an integer");
        r.parse_into("grad_tol", &mut cfg.grad_tol, "a number");
        r.parse_into("initial_step", &mut cfg.initial_step, "a number");
        r.parse_into("shrink", &mut cfg.shrink, "a number");
        r.parse_into(
            "sufficient_decrease",
            &mut cfg.sufficient_decrease,
            "a number",
        );
        r.parse_into("fd_check", &mut cfg.fd_check, "true or false");
    });

    // structural validation beyond type construction
    if cfg.picard_subintervals == 0 || cfg.steps % cfg.picard_subintervals.max(1) != 0 {
        errors.push(err(
            None,
            format!(
                "picard_subintervals = {} must divide steps = {} evenly",
                cfg.picard_subintervals, cfg.steps
            ),
        ));
    }
    // surface parameter-constraint violations at parse time with their
    // mathematical condition named
    match NominalSpec::new(cfg.eta) {
        Ok(nominal) => {
            if let Err(e) = ModelParams::new(
                cfg.alpha, cfg.beta, cfg.delta, cfg.eps, cfg.mu, cfg.xi, nominal,
            ) {
                errors.push(err(None, e.to_string()));
            }
        }
        Err(e) => errors.push(err(None, e.to_string())),
    }
    if !(cfg.kappa > 0.0) {
        errors.push(err(None, "kappa must be positive".to_string()));
    }

    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Canonical serialization: fixed section and key order, shortest
/// round-trip float formatting. Reparsing the output reproduces the config
/// (and therefore its hash) exactly.
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    use std::fmt::Write;
    let _ = write!(
        s,
        "[grid]\ndim = {}\nradius = {:?}\npoints_per_axis = {}\n\n\
         [time]\nhorizon = {:?}\nsteps = {}\n\n\
         [model]\nalpha = {:?}\nbeta = {:?}\ndelta = {:?}\neps = {:?}\nmu = {:?}\nxi = {:?}\neta = {:?}\n\n\
         [production]\nlipschitz = {:?}\nbound = {:?}\n\n\
         [objective]\ntau = {:?}\ngamma = {:?}\nrho1 = {:?}\nrho2 = {:?}\nkappa = {:?}\n\n\
         [admissible]\nnorm_cap = {:?}\nc_max = {}\n\n\
         [fields]\nk0 = {}\nk_target = {}\na0 = {}\n\n\
         [run]\ntail_tol = {:?}\nseed = {}\nsolver = {}\ncontrol = {}\npicard_subintervals = {}\npicard_tol = {:?}\npicard_max_iter = {}\n\n\
         [optimize]\nmax_outer = {}\ngrad_tol = {:?}\ninitial_step = {:?}\nshrink = {:?}\nsufficient_decrease = {:?}\nfd_check = {}\n",
        cfg.dim,
        cfg.radius,
        cfg.points_per_axis,
        cfg.horizon,
        cfg.steps,
        cfg.alpha,
        cfg.beta,
        cfg.delta,
        cfg.eps,
        cfg.mu,
        cfg.xi,
        cfg.eta,
        cfg.lipschitz,
        cfg.bound,
        cfg.tau,
        cfg.gamma,
        cfg.rho1,
        cfg.rho2,
        cfg.kappa,
        cfg.norm_cap,
        cfg.c_max,
        cfg.k0,
        cfg.k_target,
        cfg.a0,
        cfg.tail_tol,
        cfg.seed,
        cfg.solver.as_str(),
        cfg.control,
        cfg.picard_subintervals,
        cfg.picard_tol,
        cfg.picard_max_iter,
        cfg.max_outer,
        cfg.grad_tol,
        cfg.initial_step,
        cfg.shrink,
        cfg.sufficient_decrease,
        cfg.fd_check,
    );
    s
}

/// Everything a subcommand needs, built and validated from a config.
pub struct BuiltScenario {
    pub scenario: Scenario,
    pub objective: ObjectiveSpec,
    pub admissible: AdmissibleSet,
    pub initial_control: Control,
    pub optimize_config: OptimizeConfig,
}

impl ScenarioConfig {
    pub fn build(&self) -> Result<BuiltScenario, Vec<ConfigError>> {
        let mut errors = Vec::new();
        let push = |errors: &mut Vec<ConfigError>, msg: String| errors.push(err(None, msg));

        let grid = match Grid::new(self.dim, self.radius, self.points_per_axis) {
            Ok(g) => g,
            Err(e) => {
                push(&mut errors, e.to_string());
                return Err(errors);
            }
        };
        let time = match TimeGrid::new(self.horizon, self.steps) {
            Ok(t) => t,
            Err(e) => {
                push(&mut errors, e.to_string());
                return Err(errors);
            }
        };

        let nominal = NominalSpec::new(self.eta)
            .map_err(|e| vec![err(None, e.to_string())])?;
        let params = ModelParams::new(
            self.alpha, self.beta, self.delta, self.eps, self.mu, self.xi, nominal,
        )
        .map_err(|e| vec![err(None, e.to_string())])?;
        let production = ProductionSpec::new(self.lipschitz, self.bound)
            .map_err(|e| vec![err(None, e.to_string())])?;

        let build_field = |gen: &FieldGen, errors: &mut Vec<ConfigError>| match gen.build(grid) {
            Ok(f) => Some(f),
            Err(e) => {
                errors.push(e);
                None
            }
        };
        let a0 = build_field(&self.a0, &mut errors);
        let k0 = build_field(&self.k0, &mut errors);
        let k_target = build_field(&self.k_target, &mut errors);
        let c_max = build_field(&self.c_max, &mut errors);
        let control_profile = build_field(&self.control, &mut errors);
        if !errors.is_empty() {
            return Err(errors);
        }
        let (a0, k0, k_target, c_max, control_profile) = (
            a0.unwrap(),
            k0.unwrap(),
            k_target.unwrap(),
            c_max.unwrap(),
            control_profile.unwrap(),
        );

        let productivity = ProductivityState::new(a0, &params, self.tail_tol)
            .map_err(|e| vec![err(None, e.to_string())])?;
        let scenario = Scenario::new(grid, time, params, production, productivity, k0, k_target)
            .map_err(|e| vec![err(None, e.to_string())])?;
        let objective = ObjectiveSpec::new(self.tau, self.gamma, self.rho1, self.rho2, self.kappa)
            .map_err(|e| vec![err(None, e.to_string())])?;
        let admissible = AdmissibleSet::new(c_max, self.norm_cap)
            .map_err(|e| vec![err(None, e.to_string())])?;
        let initial_control = Control::constant_in_time(&control_profile, &time);
        let optimize_config = OptimizeConfig {
            max_outer: self.max_outer,
            armijo: Armijo {
                initial_step: self.initial_step,
                shrink: self.shrink,
                sufficient_decrease: self.sufficient_decrease,
            },
            grad_tol: self.grad_tol,
            fd_check: self.fd_check,
        };
        Ok(BuiltScenario {
            scenario,
            objective,
            admissible,
            initial_control,
            optimize_config,
        })
    }

    /// The same scenario with the nonlocal channel switched off
    /// (`beta = 0`, `mu = eps`) for local-model comparisons.
    pub fn local_counterpart(&self) -> ScenarioConfig {
        let mut local = self.clone();
        local.beta = 0.0;
        local.mu = local.eps;
        local
    }
}
