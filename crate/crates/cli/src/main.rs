//! Command-line front end: scenario configs in, CSVs and manifests out.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 solver
//! failure, 3 invariant-check failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use ramsey_cli::config::{parse_scenario, BuiltScenario, ScenarioConfig, SolverChoice};
use ramsey_cli::manifest::RunManifest;
use ramsey_cli::{check, output};
use ramsey_core::adjoint::{optimize, TerminationReason};
use ramsey_core::forward::{solve_forward, solve_picard, Trajectory};

#[derive(Parser)]
#[command(
    name = "ramsey",
    version,
    about = "Solver and equilibrium optimizer for a capital-accumulation equation with mixed local-nonlocal diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the capital equation; writes trajectory.csv,
    /// diagnostics.csv, and manifest.txt
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the configured solver (imex | picard)
        #[arg(long)]
        solver: Option<String>,
    },
    /// Projected gradient descent for the equilibrium consumption path;
    /// additionally writes control.csv and objective_history.csv
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the configured outer-iteration budget
        #[arg(long)]
        max_outer: Option<usize>,
    },
    /// Run the randomized invariant suite; exits 0 iff every property holds
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the configured model and its local counterpart (beta = 0,
    /// mu = eps); writes difference.csv quantifying the nonlocal effect
    CompareLocal {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

const EXIT_VALIDATION: i32 = 1;
const EXIT_SOLVER: i32 = 2;
const EXIT_CHECK: i32 = 3;

fn main() {
    std::process::exit(run(Cli::parse()));
}

fn load(path: &Path) -> Result<(ScenarioConfig, BuiltScenario), i32> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(EXIT_VALIDATION);
        }
    };
    let cfg = match parse_scenario(&text) {
        Ok(c) => c,
        Err(errors) => {
            for e in &errors {
                eprintln!("error: {e}");
            }
            return Err(EXIT_VALIDATION);
        }
    };
    let built = match cfg.build() {
        Ok(b) => b,
        Err(errors) => {
            for e in &errors {
                eprintln!("error: {e}");
            }
            return Err(EXIT_VALIDATION);
        }
    };
    report_truncation(&built);
    Ok((cfg, built))
}

/// Reports the truncation quality: the kernel tail mass outside the box and
/// the step-size margin for the explicit terms.
fn report_truncation(built: &BuiltScenario) {
    let scenario = &built.scenario;
    let tail = scenario
        .productivity()
        .eps_cache()
        .kernel()
        .tail_mass_outside(scenario.grid());
    eprintln!(
        "truncation: kernel tail mass outside the box = {tail:.3e} (tolerance {:.1e})",
        scenario.productivity().eps_cache().kernel().tail_tolerance()
    );
    let dt = scenario.time().dt();
    let limit = scenario.explicit_stability_limit();
    if dt > limit {
        eprintln!(
            "warning: dt = {dt:.3e} exceeds the conservative explicit stability bound {limit:.3e}"
        );
    }
}

fn ensure_out_dir(out: &Path) -> Result<(), i32> {
    if let Err(e) = std::fs::create_dir_all(out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return Err(EXIT_VALIDATION);
    }
    Ok(())
}

fn write_or_exit(result: std::io::Result<()>, what: &str) -> Result<(), i32> {
    result.map_err(|e| {
        eprintln!("error: writing {what}: {e}");
        EXIT_SOLVER
    })
}

fn run_solver(
    cfg: &ScenarioConfig,
    built: &BuiltScenario,
    choice: SolverChoice,
) -> Result<Trajectory, i32> {
    let scenario = &built.scenario;
    match choice {
        SolverChoice::Imex => solve_forward(scenario, &built.initial_control).map_err(|e| {
            eprintln!("error: forward solve failed: {e}");
            EXIT_SOLVER
        }),
        SolverChoice::Picard => {
            let t_star = scenario.time().horizon() / cfg.picard_subintervals as f64;
            match solve_picard(
                scenario,
                &built.initial_control,
                t_star,
                cfg.picard_tol,
                cfg.picard_max_iter,
            ) {
                Ok((traj, report)) => {
                    eprintln!(
                        "picard: {} subintervals, {} total iterations, max contraction factor {:.4}",
                        report.records.len(),
                        report.total_iterations(),
                        report.max_factor()
                    );
                    Ok(traj)
                }
                Err(e) => {
                    eprintln!("error: fixed-point solve failed: {e}");
                    Err(EXIT_SOLVER)
                }
            }
        }
    }
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve {
            config,
            out,
            solver,
        } => {
            let (cfg, built) = match load(&config) {
                Ok(v) => v,
                Err(code) => return code,
            };
            let choice = match solver.as_deref() {
                None => cfg.solver,
                Some("imex") => SolverChoice::Imex,
                Some("picard") => SolverChoice::Picard,
                Some(other) => {
                    eprintln!("error: solver must be imex or picard, got '{other}'");
                    return EXIT_VALIDATION;
                }
            };
            if ensure_out_dir(&out).is_err() {
                return EXIT_VALIDATION;
            }
            let start = Instant::now();
            let trajectory = match run_solver(&cfg, &built, choice) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let elapsed = start.elapsed().as_secs_f64();
            let scenario = &built.scenario;
            let steps = [
                write_or_exit(
                    output::write_trajectory(
                        &trajectory,
                        scenario.grid(),
                        scenario.time(),
                        &out.join("trajectory.csv"),
                    ),
                    "trajectory.csv",
                ),
                write_or_exit(
                    output::write_diagnostics(&trajectory, &out.join("diagnostics.csv")),
                    "diagnostics.csv",
                ),
                write_or_exit(
                    RunManifest::new(&cfg, choice.as_str(), elapsed)
                        .write(&out.join("manifest.txt")),
                    "manifest.txt",
                ),
            ];
            if steps.iter().any(|s| s.is_err()) {
                return EXIT_SOLVER;
            }
            let last = trajectory.diagnostics().last().unwrap();
            println!(
                "solved {} steps in {elapsed:.2}s; terminal l2 = {:.6e}, max growth fraction = {:.4}",
                scenario.time().steps(),
                last.l2,
                trajectory
                    .diagnostics()
                    .iter()
                    .map(|d| d.max_growth_fraction)
                    .fold(0.0, f64::max)
            );
            println!("wrote {}", out.display());
            0
        }
        Command::Optimize {
            config,
            out,
            max_outer,
        } => {
            let (cfg, built) = match load(&config) {
                Ok(v) => v,
                Err(code) => return code,
            };
            if ensure_out_dir(&out).is_err() {
                return EXIT_VALIDATION;
            }
            let mut opt_config = built.optimize_config;
            if let Some(mo) = max_outer {
                opt_config.max_outer = mo;
            }
            let start = Instant::now();
            let result = match optimize(
                &built.scenario,
                &built.objective,
                &built.admissible,
                &opt_config,
                &built.initial_control,
            ) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: optimization failed: {e}");
                    return EXIT_SOLVER;
                }
            };
            let elapsed = start.elapsed().as_secs_f64();
            let scenario = &built.scenario;
            let steps = [
                write_or_exit(
                    output::write_trajectory(
                        &result.trajectory,
                        scenario.grid(),
                        scenario.time(),
                        &out.join("trajectory.csv"),
                    ),
                    "trajectory.csv",
                ),
                write_or_exit(
                    output::write_diagnostics(&result.trajectory, &out.join("diagnostics.csv")),
                    "diagnostics.csv",
                ),
                write_or_exit(
                    output::write_control(
                        &result.control,
                        scenario.grid(),
                        scenario.time(),
                        &out.join("control.csv"),
                    ),
                    "control.csv",
                ),
                write_or_exit(
                    output::write_history(
                        &result.objective_history,
                        &out.join("objective_history.csv"),
                    ),
                    "objective_history.csv",
                ),
                write_or_exit(
                    RunManifest::new(&cfg, "optimize", elapsed).write(&out.join("manifest.txt")),
                    "manifest.txt",
                ),
            ];
            if steps.iter().any(|s| s.is_err()) {
                return EXIT_SOLVER;
            }
            println!(
                "optimize: {} iterations ({:?}), J = {:.8e}, projected-gradient residual = {:.3e}",
                result.iterations,
                result.status,
                result.objective_history.last().unwrap(),
                result.kkt_residual
            );
            if let Some(fd) = result.fd_max_rel_error {
                println!("gradient check at start: worst relative error {fd:.3e}");
            }
            println!("wrote {}", out.display());
            if result.status == TerminationReason::LineSearchFailed {
                eprintln!("error: line search failed after 60 halvings; last iterate written");
                return EXIT_SOLVER;
            }
            0
        }
        Command::Check { config, seed } => {
            let (cfg, built) = match load(&config) {
                Ok(v) => v,
                Err(code) => return code,
            };
            let seed = seed.unwrap_or(cfg.seed);
            if check::run_checks(&built, seed) {
                println!("all checks passed (seed {seed})");
                0
            } else {
                eprintln!("error: at least one invariant check failed (seed {seed})");
                EXIT_CHECK
            }
        }
        Command::CompareLocal { config, out } => {
            let (cfg, built) = match load(&config) {
                Ok(v) => v,
                Err(code) => return code,
            };
            let local_cfg = cfg.local_counterpart();
            let local_built = match local_cfg.build() {
                Ok(b) => b,
                Err(errors) => {
                    for e in &errors {
                        eprintln!("error (local counterpart): {e}");
                    }
                    return EXIT_VALIDATION;
                }
            };
            if ensure_out_dir(&out).is_err() {
                return EXIT_VALIDATION;
            }
            let start = Instant::now();
            let nonlocal = match run_solver(&cfg, &built, SolverChoice::Imex) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let local = match run_solver(&local_cfg, &local_built, SolverChoice::Imex) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let elapsed = start.elapsed().as_secs_f64();
            let steps = [
                write_or_exit(
                    output::write_difference(
                        &nonlocal,
                        &local,
                        built.scenario.time(),
                        &out.join("difference.csv"),
                    ),
                    "difference.csv",
                ),
                write_or_exit(
                    RunManifest::new(&cfg, "compare-local", elapsed)
                        .write(&out.join("manifest.txt")),
                    "manifest.txt",
                ),
            ];
            if steps.iter().any(|s| s.is_err()) {
                return EXIT_SOLVER;
            }
            let max_rel = nonlocal
                .states()
                .iter()
                .zip(local.states())
                .map(|(a, b)| {
                    ramsey_core::grid::l2_norm(&a.sub(b))
                        / ramsey_core::grid::l2_norm(a).max(1e-300)
                })
                .fold(0.0f64, f64::max);
            println!(
                "compare-local: max relative trajectory difference {max_rel:.4e}; wrote {}",
                out.display()
            );
            0
        }
    }
}
