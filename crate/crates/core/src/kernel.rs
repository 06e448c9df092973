//! Isotropic Gaussian kernels, the convolution engine, the nominal
//! transform, and the bounded growth fraction.
//!
//! The kernel is the multivariate normal density with covariance
//! `nu^2 * I`,
//!
//! ```text
//! Gamma_nu(x, y) = (2 pi nu^2)^(-n/2) exp(-|x - y|^2 / (2 nu^2)),
//! ```
//!
//! which factorizes over axes, so convolutions on the tensor grid reduce to
//! one-dimensional passes. Two convolution paths ship: a fast path built on
//! zero-padded FFTs (no periodic wrap-around, so no spurious mass crosses the
//! truncation boundary) and a direct quadrature path used as an independent
//! oracle. Both share the midpoint rule of [`crate::grid`].
//!
//! The growth fraction
//!
//! ```text
//! Phi_mu(k) / (Phi_eps(k) + xi),   Phi_nu(k) = Gamma_nu * phi(k),
//! ```
//!
//! is bounded by `(eps/mu)^n` whenever `0 < mu <= eps` and `xi > 0`; the
//! bound holds exactly for the discrete sums because
//! `(eps/mu)^n Gamma_eps(z) >= Gamma_mu(z)` pointwise.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::ModelError;
use crate::grid::{Field, Grid};

/// Default bound on the kernel mass falling outside the truncated box.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

/// Isotropic Gaussian kernel with bandwidth `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    bandwidth: f64,
    dim: usize,
    tail_tolerance: f64,
}

impl GaussianKernel {
    pub fn new(bandwidth: f64, dim: usize) -> Result<Self, ModelError> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(ModelError::NonPositiveBandwidth(bandwidth));
        }
        if dim != 1 && dim != 2 {
            return Err(ModelError::UnsupportedDim(dim));
        }
        Ok(Self {
            bandwidth,
            dim,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        })
    }

    pub fn with_tail_tolerance(mut self, tol: f64) -> Self {
        self.tail_tolerance = tol;
        self
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    /// Kernel value for a displacement `x - y`.
    pub fn value(&self, displacement: &[f64]) -> f64 {
        let nu2 = self.bandwidth * self.bandwidth;
        let norm_sq: f64 = displacement.iter().take(self.dim).map(|d| d * d).sum();
        let scale = (2.0 * std::f64::consts::PI * nu2).powf(-(self.dim as f64) / 2.0);
        scale * (-norm_sq / (2.0 * nu2)).exp()
    }

    /// One-dimensional factor of the kernel at scalar displacement `d`.
    fn value_1d(&self, d: f64) -> f64 {
        let nu2 = self.bandwidth * self.bandwidth;
        (2.0 * std::f64::consts::PI * nu2).sqrt().recip() * (-d * d / (2.0 * nu2)).exp()
    }

    /// Mass of the kernel centered at the box center that falls outside the
    /// box. The worst of all grid points is within a factor ~2 of this, so a
    /// passing check certifies the truncation for the whole grid interior.
    pub fn tail_mass_outside(&self, grid: Grid) -> f64 {
        let r = grid.radius() / self.bandwidth;
        let inside_1d = libm::erf(r / std::f64::consts::SQRT_2);
        1.0 - inside_1d.powi(self.dim as i32)
    }

    fn check_grid(&self, grid: Grid) -> Result<(), ModelError> {
        if self.dim != grid.dim() {
            return Err(ModelError::KernelDimMismatch {
                kernel: self.dim,
                grid: grid.dim(),
            });
        }
        let tail = self.tail_mass_outside(grid);
        if tail > self.tail_tolerance {
            return Err(ModelError::KernelTailTooHeavy {
                bandwidth: self.bandwidth,
                tail,
                tol: self.tail_tolerance,
            });
        }
        Ok(())
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Precomputed transform data binding a kernel to a grid.
///
/// Holds the padded kernel spectrum for the separable one-dimensional passes
/// plus the gridded kernel mass `Gamma * 1`; immutable after construction and
/// safe to share. The summation order inside the FFT is fixed, so repeated
/// convolutions are bit-deterministic.
pub struct KernelCache {
    kernel: GaussianKernel,
    grid: Grid,
    padded_len: usize,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    mass: Field,
    /// sup over grid points of the discrete L2 norm of a kernel row,
    /// `max_x sqrt(h^n sum_y Gamma(x, y)^2)`.
    row_l2_sup: f64,
}

impl KernelCache {
    pub fn new(kernel: GaussianKernel, grid: Grid) -> Result<Self, ModelError> {
        kernel.check_grid(grid)?;
        let p = grid.points_per_axis();
        let h = grid.spacing();
        let padded_len = (2 * p).next_power_of_two();
        let (forward, inverse) = PLANNER.with(|pl| {
            let mut pl = pl.borrow_mut();
            (pl.plan_fft_forward(padded_len), pl.plan_fft_inverse(padded_len))
        });

        // circular layout of the 1-d kernel samples, weighted by h
        let mut spectrum = vec![Complex::new(0.0, 0.0); padded_len];
        for d in 0..p {
            let v = kernel.value_1d(d as f64 * h) * h;
            spectrum[d] = Complex::new(v, 0.0);
            if d > 0 {
                spectrum[padded_len - d] = Complex::new(v, 0.0);
            }
        }
        forward.process(&mut spectrum);

        let mut cache = Self {
            kernel,
            grid,
            padded_len,
            spectrum,
            forward,
            inverse,
            mass: Field::zeros(grid),
            row_l2_sup: 0.0,
        };
        cache.mass = cache.convolve(&Field::constant(grid, 1.0));

        // row-wise discrete L2 norms via the 1-d factors (separable squares)
        let row_sq_1d: Vec<f64> = (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| {
                        let v = kernel.value_1d((i as f64 - j as f64) * h);
                        v * v * h
                    })
                    .sum()
            })
            .collect();
        let max_row = row_sq_1d.iter().cloned().fold(0.0f64, f64::max);
        cache.row_l2_sup = max_row.powi(grid.dim() as i32).sqrt();
        Ok(cache)
    }

    pub fn kernel(&self) -> GaussianKernel {
        self.kernel
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Gridded kernel mass `Gamma * 1`: close to one in the interior, below
    /// one near the truncation boundary.
    pub fn mass(&self) -> &Field {
        &self.mass
    }

    pub fn row_l2_sup(&self) -> f64 {
        self.row_l2_sup
    }

    fn convolve_1d_into(&self, src: &mut [Complex<f64>]) {
        self.forward.process(src);
        for (s, k) in src.iter_mut().zip(&self.spectrum) {
            *s *= k;
        }
        self.inverse.process(src);
    }

    /// Fast-path convolution `g(x_i) = h^n sum_j f(x_j) Gamma(x_i, x_j)`.
    ///
    /// Zero padding to twice the axis length makes the circular FFT product
    /// equal to the linear (non-periodic) sum.
    pub fn convolve(&self, f: &Field) -> Field {
        assert_eq!(f.grid(), self.grid, "fields live on different grids");
        let p = self.grid.points_per_axis();
        let l = self.padded_len;
        let norm = 1.0 / l as f64;
        match self.grid.dim() {
            1 => {
                let mut buf: Vec<Complex<f64>> = f
                    .values()
                    .iter()
                    .map(|&v| Complex::new(v, 0.0))
                    .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                    .take(l)
                    .collect();
                self.convolve_1d_into(&mut buf);
                Field::new(
                    self.grid,
                    buf[..p].iter().map(|c| c.re * norm).collect(),
                )
                .expect("convolution produced non-finite values")
            }
            _ => {
                let v = f.values();
                let mut tmp = vec![0.0; v.len()];
                // pass along axis 1 (contiguous rows)
                let mut buf = vec![Complex::new(0.0, 0.0); l];
                for i0 in 0..p {
                    for (d, c) in buf.iter_mut().enumerate() {
                        *c = if d < p {
                            Complex::new(v[i0 * p + d], 0.0)
                        } else {
                            Complex::new(0.0, 0.0)
                        };
                    }
                    self.convolve_1d_into(&mut buf);
                    for i1 in 0..p {
                        tmp[i0 * p + i1] = buf[i1].re * norm;
                    }
                }
                // pass along axis 0 (strided columns)
                let mut out = vec![0.0; v.len()];
                for i1 in 0..p {
                    for (d, c) in buf.iter_mut().enumerate() {
                        *c = if d < p {
                            Complex::new(tmp[d * p + i1], 0.0)
                        } else {
                            Complex::new(0.0, 0.0)
                        };
                    }
                    self.convolve_1d_into(&mut buf);
                    for i0 in 0..p {
                        out[i0 * p + i1] = buf[i0].re * norm;
                    }
                }
                Field::new(self.grid, out).expect("convolution produced non-finite values")
            }
        }
    }
}

/// One-shot fast convolution; builds the transform cache internally.
pub fn convolve(kernel: GaussianKernel, f: &Field) -> Result<Field, ModelError> {
    Ok(KernelCache::new(kernel, f.grid())?.convolve(f))
}

/// Direct quadrature convolution, the O(N^2) oracle for the fast path.
pub fn convolve_direct(kernel: GaussianKernel, f: &Field) -> Result<Field, ModelError> {
    kernel.check_grid(f.grid())?;
    let grid = f.grid();
    let n = grid.num_points();
    let w = grid.cell_volume();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let [xi, yi] = grid.position(i);
        let mut acc = 0.0;
        for (j, &fj) in f.values().iter().enumerate() {
            let [xj, yj] = grid.position(j);
            acc += fj * kernel.value(&[xi - xj, yi - yj]);
        }
        out[i] = w * acc;
    }
    Field::new(grid, out)
}

/// Positive smooth stand-in for the absolute value of capital,
/// `phi(k) = sqrt(k^2 + eta)` with `eta > 0`.
///
/// Lipschitz with constant one and bounded by `sqrt(eta) + |k|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NominalSpec {
    eta: f64,
}

impl NominalSpec {
    pub fn new(eta: f64) -> Result<Self, ModelError> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(ModelError::NonPositiveParam {
                name: "eta",
                value: eta,
            });
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn phi(&self, k: f64) -> f64 {
        (k * k + self.eta).sqrt()
    }

    pub fn phi_deriv(&self, k: f64) -> f64 {
        k / (k * k + self.eta).sqrt()
    }

    /// Lipschitz constant of `phi` (exactly one for this family).
    pub fn lipschitz(&self) -> f64 {
        1.0
    }
}

/// `Phi_nu(k) = Gamma_nu * phi(k)`; strictly positive everywhere.
pub fn phi_transform(spec: NominalSpec, cache: &KernelCache, k: &Field) -> Field {
    cache.convolve(&k.map(|v| spec.phi(v)))
}

/// Pointwise growth fraction `Phi_mu(k) / (Phi_eps(k) + xi)`.
///
/// Every value lies in `(0, (eps/mu)^n]` for `0 < mu <= eps`, `xi > 0`.
pub fn growth_fraction_cached(
    spec: NominalSpec,
    k: &Field,
    mu_cache: &KernelCache,
    eps_cache: &KernelCache,
    xi: f64,
) -> Field {
    let num = phi_transform(spec, mu_cache, k);
    let den = phi_transform(spec, eps_cache, k);
    num.zip_map(&den, |a, b| a / (b + xi))
}

/// Convenience wrapper that validates `0 < mu <= eps`, `xi > 0` and builds
/// the kernel caches on the fly.
pub fn growth_fraction(
    spec: NominalSpec,
    k: &Field,
    mu: f64,
    eps: f64,
    xi: f64,
) -> Result<Field, ModelError> {
    if !(mu > 0.0) {
        return Err(ModelError::NonPositiveParam {
            name: "mu",
            value: mu,
        });
    }
    if mu > eps {
        return Err(ModelError::MuExceedsEps { mu, eps });
    }
    if !(xi > 0.0) {
        return Err(ModelError::NonPositiveParam {
            name: "xi",
            value: xi,
        });
    }
    let dim = k.grid().dim();
    let mu_cache = KernelCache::new(GaussianKernel::new(mu, dim)?, k.grid())?;
    let eps_cache = KernelCache::new(GaussianKernel::new(eps, dim)?, k.grid())?;
    Ok(growth_fraction_cached(spec, k, &mu_cache, &eps_cache, xi))
}
