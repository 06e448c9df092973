//! Plot-ready CSV writers: header row, '.'-decimal, 17-significant-digit
//! floats, LF line endings. Byte-identical across runs of the same solve on
//! one platform, and every float survives an exact parse round trip.

use std::fmt::Write as FmtWrite;
use std::io;
use std::path::Path;

use ramsey_core::control::Control;
use ramsey_core::forward::Trajectory;
use ramsey_core::grid::{Grid, TimeGrid};

/// 17 significant digits: lossless for f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_atomic(path: &Path, content: &str) -> io::Result<()> {
    std::fs::write(path, content.as_bytes())
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn point_columns(grid: Grid, idx: usize) -> String {
    let [x, y] = grid.position(idx);
    if grid.dim() == 1 {
        fmt_f64(x)
    } else {
        format!("{},{}", fmt_f64(x), fmt_f64(y))
    }
}

/// Trajectory CSV with columns `t,x[,y],k`, one row per (node, point).
pub fn write_trajectory(
    trajectory: &Trajectory,
    grid: Grid,
    time: &TimeGrid,
    path: &Path,
) -> io::Result<()> {
    if trajectory.is_empty() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "refusing to write an empty trajectory",
        ));
    }
    let mut s = String::new();
    s.push_str(if grid.dim() == 1 { "t,x,k\n" } else { "t,x,y,k\n" });
    for (m, state) in trajectory.states().iter().enumerate() {
        let t = fmt_f64(time.node(m));
        for (idx, v) in state.values().iter().enumerate() {
            let _ = writeln!(s, "{t},{},{}", point_columns(grid, idx), fmt_f64(*v));
        }
    }
    write_atomic(path, &s)
}

/// Diagnostics CSV with columns `t,l2,h1,min_k,max_fraction`.
pub fn write_diagnostics(trajectory: &Trajectory, path: &Path) -> io::Result<()> {
    if trajectory.is_empty() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "refusing to write an empty trajectory",
        ));
    }
    let mut s = String::from("t,l2,h1,min_k,max_fraction\n");
    for d in trajectory.diagnostics() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(d.t),
            fmt_f64(d.l2),
            fmt_f64(d.h1_semi),
            fmt_f64(d.min_value),
            fmt_f64(d.max_growth_fraction)
        );
    }
    write_atomic(path, &s)
}

/// Control CSV with columns `t,x[,y],c`, one row per (slab, point); `t` is
/// the slab's left endpoint.
pub fn write_control(
    control: &Control,
    grid: Grid,
    time: &TimeGrid,
    path: &Path,
) -> io::Result<()> {
    let mut s = String::new();
    s.push_str(if grid.dim() == 1 { "t,x,c\n" } else { "t,x,y,c\n" });
    for (m, slab) in control.slabs().iter().enumerate() {
        let t = fmt_f64(time.node(m));
        for (idx, v) in slab.values().iter().enumerate() {
            let _ = writeln!(s, "{t},{},{}", point_columns(grid, idx), fmt_f64(*v));
        }
    }
    write_atomic(path, &s)
}

/// Objective history CSV with columns `iter,objective`.
pub fn write_history(history: &[f64], path: &Path) -> io::Result<()> {
    let mut s = String::from("iter,objective\n");
    for (i, j) in history.iter().enumerate() {
        let _ = writeln!(s, "{i},{}", fmt_f64(*j));
    }
    write_atomic(path, &s)
}

/// Per-node difference norms between two trajectories, quantifying the
/// nonlocal effect: columns `t,l2_diff,l2_rel`.
pub fn write_difference(
    a: &Trajectory,
    b: &Trajectory,
    time: &TimeGrid,
    path: &Path,
) -> io::Result<()> {
    let mut s = String::from("t,l2_diff,l2_rel\n");
    for (m, (sa, sb)) in a.states().iter().zip(b.states()).enumerate() {
        let diff = ramsey_core::grid::l2_norm(&sa.sub(sb));
        let scale = ramsey_core::grid::l2_norm(sa).max(1e-300);
        let _ = writeln!(
            s,
            "{},{},{}",
            fmt_f64(time.node(m)),
            fmt_f64(diff),
            fmt_f64(diff / scale)
        );
    }
    write_atomic(path, &s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips_exactly() {
        for v in [
            0.1,
            -1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            6.02e23,
            -0.0,
            1.0 + f64::EPSILON,
        ] {
            let parsed: f64 = fmt_f64(v).parse().unwrap();
            assert_eq!(parsed.to_bits(), v.to_bits(), "{v} did not round trip");
        }
    }
}
