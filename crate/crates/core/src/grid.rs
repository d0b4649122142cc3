//! Uniform periodic 1-D mesh and Fourier-spectral derivative operators.
//!
//! Derivatives are exact for trigonometric polynomials resolved by the mesh.
//! The Nyquist mode is dropped by odd-order derivatives and kept (with the
//! real weight `(-1)^(m/2) k_N^m`) by even-order ones, so real fields stay real.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance on the mean of a field handed to [`Field::antiderivative_zero_mean`].
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-10;

#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    dx: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid {
    /// Builds a periodic grid of `n` points on `[0, length)`.
    pub fn new(n: usize, length: f64) -> Result<Arc<Grid>> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid("n must be even and ≥ 8".into()));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid("length must be positive and finite".into()));
        }
        let base = 2.0 * std::f64::consts::PI / length;
        let wavenumbers = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                base * m
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            n,
            length,
            dx: length / n as f64,
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Angular wavenumbers in FFT order; the Nyquist slot `n/2` holds `+π n / L`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Largest integer mode kept by the 2/3-rule dealiasing mask.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    /// Integer mode number of FFT slot `j`.
    pub fn mode_number(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.dx).collect()
    }

    /// Unnormalized forward transform.
    pub fn fft(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform including the `1/n` normalization; keeps the real part.
    pub fn ifft(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut spectrum);
        let scale = 1.0 / self.n as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Spectral multiplier of `d^order/dx^order` at slot `j`.
    pub fn derivative_symbol(&self, j: usize, order: usize) -> Complex64 {
        let k = self.wavenumbers[j];
        if j == self.nyquist_index() && order % 2 == 1 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, k).powu(order as u32)
    }

    pub(crate) fn apply_derivative(&self, spectrum: &mut [Complex64], order: usize) {
        if order == 0 {
            return;
        }
        for (j, c) in spectrum.iter_mut().enumerate() {
            *c *= self.derivative_symbol(j, order);
        }
    }

    pub(crate) fn apply_mask(&self, spectrum: &mut [Complex64]) {
        let cut = self.dealias_cutoff() as i64;
        for (j, c) in spectrum.iter_mut().enumerate() {
            if self.mode_number(j).abs() > cut {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub(crate) fn same(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || self == other
    }
}

/// Samples of one real scalar quantity on a [`Grid`].
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same(&other.grid) && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "field has {} samples, grid has {}",
                values.len(),
                grid.n()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Field { grid: Arc::clone(grid), values })
    }

    /// Builds a field without the finiteness check; callers validate later.
    pub(crate) fn from_raw(grid: &Arc<Grid>, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), grid.n());
        Field { grid: Arc::clone(grid), values }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Field {
        let values = grid.points().into_iter().map(f).collect();
        Field::from_raw(grid, values)
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Field {
        Field::from_raw(grid, vec![value; grid.n()])
    }

    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete `L²` norm, `(dx Σ v²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert!(self.grid.same(&other.grid), "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Field::from_raw(&self.grid, values)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Spectral derivative of order `1..=4`.
    pub fn derivative(&self, order: usize) -> Result<Field> {
        if !(1..=4).contains(&order) {
            return Err(Error::InvalidOrder(order));
        }
        Ok(self.spectral_derivative(order))
    }

    /// Any-order spectral derivative; used where orders are composed internally.
    pub(crate) fn spectral_derivative(&self, order: usize) -> Field {
        if order == 0 {
            return self.clone();
        }
        let mut spec = self.grid.fft(&self.values);
        self.grid.apply_derivative(&mut spec, order);
        Field::from_raw(&self.grid, self.grid.ifft(spec))
    }

    /// Zero-mean periodic antiderivative. Rejects sources whose mean exceeds
    /// `ZERO_MEAN_TOLERANCE · max|f|`.
    pub fn antiderivative_zero_mean(&self) -> Result<Field> {
        let mean = self.mean();
        let tolerance = ZERO_MEAN_TOLERANCE * self.max_abs();
        if mean.abs() > tolerance {
            return Err(Error::IncompatibleSource { mean, tolerance });
        }
        let mut spec = self.grid.fft(&self.values);
        let nyq = self.grid.nyquist_index();
        for (j, c) in spec.iter_mut().enumerate() {
            if j == 0 || j == nyq {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= Complex64::new(0.0, self.grid.wavenumbers[j]);
            }
        }
        Ok(Field::from_raw(&self.grid, self.grid.ifft(spec)))
    }

    /// Applies the 2/3-rule mask.
    pub fn dealiased(&self) -> Field {
        let mut spec = self.grid.fft(&self.values);
        self.grid.apply_mask(&mut spec);
        Field::from_raw(&self.grid, self.grid.ifft(spec))
    }

    /// Masks and then differentiates in one transform pair.
    pub(crate) fn dealiased_derivative(&self, order: usize) -> Field {
        let mut spec = self.grid.fft(&self.values);
        self.grid.apply_mask(&mut spec);
        self.grid.apply_derivative(&mut spec, order);
        Field::from_raw(&self.grid, self.grid.ifft(spec))
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Field> for &Field {
            type Output = Field;
            fn $method(self, rhs: &Field) -> Field {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl $trait<Field> for Field {
            type Output = Field;
            fn $method(self, rhs: Field) -> Field {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Field> for Field {
            type Output = Field;
            fn $method(self, rhs: &Field) -> Field {
                (&self).$method(rhs)
            }
        }
    };
}

binary_op!(Add, add, +);
binary_op!(Sub, sub, -);
binary_op!(Mul, mul, *);

impl Mul<&Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        rhs.scale(self)
    }
}

impl Mul<Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: Field) -> Field {
        rhs.scale(self)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}

impl Neg for Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}
