//! Electrostatic constraint `λ² ∂ₓE = ρ_a − ρ_b − c*` on the periodic domain.
//!
//! The zero-mean gauge stands in for decay at infinity; it is the unique
//! periodic solution with zero average and keeps `E = 0` at the steady state.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::params::ModelParams;

/// Net-charge tolerance relative to the density scale `⟨ρ_a⟩ + ⟨ρ_b⟩ + |c*|`.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-10;

pub fn charge_density(rho_a: &Field, rho_b: &Field, p: &ModelParams) -> Field {
    let c = p.c_star;
    rho_a.zip_map(rho_b, |a, b| a - b - c)
}

/// Mean net charge and the tolerance it is checked against.
pub fn neutrality_residual(rho_a: &Field, rho_b: &Field, p: &ModelParams) -> (f64, f64) {
    let mean = charge_density(rho_a, rho_b, p).mean();
    let scale = rho_a.mean().abs() + rho_b.mean().abs() + p.c_star.abs();
    (mean, COMPATIBILITY_TOLERANCE * scale)
}

pub fn solve_efield(rho_a: &Field, rho_b: &Field, p: &ModelParams) -> Result<Field> {
    if !rho_a.grid().same(rho_b.grid()) {
        return Err(Error::GridMismatch);
    }
    let (mean, tolerance) = neutrality_residual(rho_a, rho_b, p);
    if mean.abs() > tolerance {
        return Err(Error::IncompatibleSource { mean, tolerance });
    }
    solve_with_mean(rho_a, rho_b, mean, p)
}

/// Solves with the mean charge removed and no compatibility check. Used on
/// intermediate Runge–Kutta stages, whose mass defect is a truncation error.
pub(crate) fn solve_efield_projected(rho_a: &Field, rho_b: &Field, p: &ModelParams) -> Result<Field> {
    let mean = charge_density(rho_a, rho_b, p).mean();
    solve_with_mean(rho_a, rho_b, mean, p)
}

fn solve_with_mean(rho_a: &Field, rho_b: &Field, mean: f64, p: &ModelParams) -> Result<Field> {
    let inv = 1.0 / (p.lambda * p.lambda);
    let c = p.c_star;
    let source = rho_a.zip_map(rho_b, |a, b| (a - b - c - mean) * inv);
    source.antiderivative_zero_mean()
}
