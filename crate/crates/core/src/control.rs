//! Piecewise-constant-in-time control paths.
//!
//! A control holds one field per time slab `[t_m, t_{m+1})`, matching the
//! left-endpoint quadrature used by the objective and the discrete adjoint.
//! The space-time norm is `sqrt(sum_m dt ||c_m||_L2^2)`.

use crate::error::ModelError;
use crate::grid::{inner, l2_norm, Field, Grid, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    slabs: Vec<Field>,
}

impl Control {
    pub fn new(slabs: Vec<Field>) -> Self {
        Self { slabs }
    }

    /// Zero consumption on every slab.
    pub fn zeros(grid: Grid, time: &TimeGrid) -> Self {
        Self {
            slabs: vec![Field::zeros(grid); time.steps()],
        }
    }

    /// Same spatial profile on every slab.
    pub fn constant_in_time(field: &Field, time: &TimeGrid) -> Self {
        Self {
            slabs: vec![field.clone(); time.steps()],
        }
    }

    pub fn validate(&self, grid: Grid, time: &TimeGrid) -> Result<(), ModelError> {
        if self.slabs.len() != time.steps() {
            return Err(ModelError::ControlLengthMismatch {
                expected: time.steps(),
                got: self.slabs.len(),
            });
        }
        if self.slabs.iter().any(|f| f.grid() != grid) {
            return Err(ModelError::GridMismatch);
        }
        Ok(())
    }

    pub fn slabs(&self) -> &[Field] {
        &self.slabs
    }

    pub fn slab(&self, m: usize) -> &Field {
        &self.slabs[m]
    }

    pub fn len(&self) -> usize {
        self.slabs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slabs.is_empty()
    }

    pub fn map_slabs(&self, f: impl Fn(&Field) -> Field) -> Control {
        Control {
            slabs: self.slabs.iter().map(f).collect(),
        }
    }

    pub fn zip_slabs(&self, other: &Control, f: impl Fn(&Field, &Field) -> Field) -> Control {
        assert_eq!(self.len(), other.len(), "control lengths differ");
        Control {
            slabs: self
                .slabs
                .iter()
                .zip(&other.slabs)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Control) -> Control {
        self.zip_slabs(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Control) -> Control {
        self.zip_slabs(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, s: f64) -> Control {
        self.map_slabs(|f| f.scale(s))
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Control) -> Control {
        self.zip_slabs(other, |a, b| a.axpy(s, b))
    }

    /// Space-time L2 norm with slab weight `dt`.
    pub fn norm(&self, time: &TimeGrid) -> f64 {
        let dt = time.dt();
        self.slabs
            .iter()
            .map(|f| dt * l2_norm(f).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Space-time inner product with slab weight `dt`.
    pub fn dot(&self, other: &Control, time: &TimeGrid) -> f64 {
        let dt = time.dt();
        self.slabs
            .iter()
            .zip(&other.slabs)
            .map(|(a, b)| dt * inner(a, b))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.slabs.iter().fold(0.0f64, |m, f| m.max(f.max_abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn norm_of_constant_control() {
        let grid = Grid::new(1, 1.0, 16).unwrap();
        let time = TimeGrid::new(2.0, 8).unwrap();
        let c = Control::constant_in_time(&Field::constant(grid, 3.0), &time);
        // ||c||^2 = T * 9 * |box| = 2 * 9 * 2
        assert_relative_eq!(c.norm(&time), 36.0f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn validate_checks_slab_count() {
        let grid = Grid::new(1, 1.0, 16).unwrap();
        let time = TimeGrid::new(1.0, 4).unwrap();
        let c = Control::zeros(grid, &time);
        assert!(c.validate(grid, &time).is_ok());
        let bad = Control::new(vec![Field::zeros(grid); 3]);
        assert!(bad.validate(grid, &time).is_err());
    }
}
