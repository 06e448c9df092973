//! Uniform cell-centered grids on a truncated box, sampled fields, and the
//! discrete integrals and norms every other module consumes.
//!
//! The spatial domain is `[-R, R]^n` with `n` in {1, 2}. Points are cell
//! centers `x_i = -R + (i + 1/2) h` with `h = 2R / points_per_axis`, and all
//! integrals use the midpoint rule `h^n * sum`, so convolutions, norms, and
//! objective values share one quadrature.

use crate::error::ModelError;

/// Uniform cell-centered grid on the box `[-radius, radius]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    radius: f64,
    points_per_axis: usize,
}

impl Grid {
    pub fn new(dim: usize, radius: f64, points_per_axis: usize) -> Result<Self, ModelError> {
        if dim != 1 && dim != 2 {
            return Err(ModelError::UnsupportedDim(dim));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(ModelError::NonPositiveRadius(radius));
        }
        if points_per_axis < 16 {
            return Err(ModelError::TooFewPoints(points_per_axis));
        }
        Ok(Self {
            dim,
            radius,
            points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Cell width `h = 2R / points_per_axis`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / self.points_per_axis as f64
    }

    /// Total number of grid points, `points_per_axis^dim`.
    pub fn num_points(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Quadrature weight of one cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Measure of the whole box, `(2R)^dim`.
    pub fn box_measure(&self) -> f64 {
        (2.0 * self.radius).powi(self.dim as i32)
    }

    /// Coordinate of the `i`-th cell center along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.radius + (i as f64 + 0.5) * self.spacing()
    }

    /// Position of the point with linear index `idx` as `[x, y]`
    /// (`y = 0` in one dimension). Linear indices are row-major:
    /// `idx = i0 * points_per_axis + i1` in 2-D.
    pub fn position(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coord(idx), 0.0],
            _ => {
                let p = self.points_per_axis;
                [self.coord(idx / p), self.coord(idx % p)]
            }
        }
    }

    /// Squared Euclidean norm of the point with linear index `idx`.
    pub fn position_norm_sq(&self, idx: usize) -> f64 {
        let [x, y] = self.position(idx);
        x * x + y * y
    }

    /// L-infinity distance from the point to the box boundary.
    pub fn boundary_distance(&self, idx: usize) -> f64 {
        let [x, y] = self.position(idx);
        let dx = self.radius - x.abs();
        if self.dim == 1 {
            dx
        } else {
            dx.min(self.radius - y.abs())
        }
    }
}

/// Real-valued function sampled at the cell centers of a [`Grid`].
///
/// Immutable after construction; all operations are pure and return new
/// fields, so fields can be shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wraps raw values, checking length and finiteness.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != grid.num_points() {
            return Err(ModelError::LengthMismatch {
                expected: grid.num_points(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteValue(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.num_points()],
        }
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        Self {
            grid,
            values: vec![v; grid.num_points()],
        }
    }

    /// Samples `f([x, y])` at every cell center.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.num_points()).map(|i| f(grid.position(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Applies `f` pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Combines two fields pointwise. Panics on grid mismatch.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Uniform partition of the time interval `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self, ModelError> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(ModelError::NonPositiveHorizon(horizon));
        }
        if steps == 0 {
            return Err(ModelError::NoTimeSteps);
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Time of node `m`, `t_m = m * dt`.
    pub fn node(&self, m: usize) -> f64 {
        m as f64 * self.dt()
    }
}

/// Midpoint-rule integral `h^n * sum_i f(x_i)`.
pub fn integrate(f: &Field) -> f64 {
    f.grid().cell_volume() * f.values().iter().sum::<f64>()
}

/// Quadrature-weighted inner product `h^n * sum_i f_i g_i`.
pub fn inner(f: &Field, g: &Field) -> f64 {
    assert_eq!(f.grid(), g.grid(), "fields live on different grids");
    let s: f64 = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(&a, &b)| a * b)
        .sum();
    f.grid().cell_volume() * s
}

/// Discrete L2 norm, `sqrt(h^n * sum f_i^2)`.
pub fn l2_norm(f: &Field) -> f64 {
    let s: f64 = f.values().iter().map(|&v| v * v).sum();
    (f.grid().cell_volume() * s).sqrt()
}

/// Central-difference gradient along each axis, one-sided at the two
/// boundary cells. Returns one field per axis.
pub fn gradient(f: &Field) -> Vec<Field> {
    let grid = f.grid();
    let p = grid.points_per_axis();
    let h = grid.spacing();
    let v = f.values();
    let diff_1d = |get: &dyn Fn(usize) -> f64, i: usize| -> f64 {
        if i == 0 {
            (get(1) - get(0)) / h
        } else if i == p - 1 {
            (get(p - 1) - get(p - 2)) / h
        } else {
            (get(i + 1) - get(i - 1)) / (2.0 * h)
        }
    };
    match grid.dim() {
        1 => {
            let g = (0..p).map(|i| diff_1d(&|j| v[j], i)).collect();
            vec![Field { grid, values: g }]
        }
        _ => {
            let mut g0 = vec![0.0; grid.num_points()];
            let mut g1 = vec![0.0; grid.num_points()];
            for i0 in 0..p {
                for i1 in 0..p {
                    let idx = i0 * p + i1;
                    g0[idx] = diff_1d(&|j| v[j * p + i1], i0);
                    g1[idx] = diff_1d(&|j| v[i0 * p + j], i1);
                }
            }
            vec![
                Field { grid, values: g0 },
                Field { grid, values: g1 },
            ]
        }
    }
}

/// Discrete H1 seminorm: L2 norm of the central-difference gradient.
pub fn h1_seminorm(f: &Field) -> f64 {
    let sq: f64 = gradient(f)
        .iter()
        .map(|g| g.values().iter().map(|&v| v * v).sum::<f64>())
        .sum();
    (f.grid().cell_volume() * sq).sqrt()
}

/// Full discrete H1 norm, `sqrt(l2^2 + seminorm^2)`.
pub fn h1_norm(f: &Field) -> f64 {
    let l2 = l2_norm(f);
    let semi = h1_seminorm(f);
    (l2 * l2 + semi * semi).sqrt()
}
