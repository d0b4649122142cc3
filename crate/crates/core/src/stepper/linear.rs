//! Linearization of each model about the constant steady state, one small
//! real block per Fourier slot.
//!
//! Hyperbolic kinds act on `(ŵ_a, ŵ_b, v̂_a, v̂_b)` with `v̂ = −i·sgn(k)·û`, which
//! makes every block real. Parabolic kinds act on `(r̂_a, r̂_b)`, `r = ρ − ρ*`.
//! Slots removed by the dealiasing mask carry a zero block, matching the
//! masked tendencies.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::grid::Grid;
use crate::models::ModelKind;
use crate::params::{Carrier, ModelParams};

pub(crate) const MAX_DIM: usize = 4;

pub(crate) type Block = [[f64; MAX_DIM]; MAX_DIM];

#[derive(Debug, Clone)]
pub(crate) struct LinearOperator {
    pub dim: usize,
    pub blocks: Vec<Block>,
    /// `sgn(k)` per slot, used by the velocity change of variables.
    pub signs: Vec<f64>,
    /// Largest eigenvalue modulus over all slots.
    pub spectral_radius: f64,
}

impl LinearOperator {
    pub fn new(kind: ModelKind, p: &ModelParams, grid: &Grid) -> Self {
        let dim = if kind.is_parabolic() { 2 } else { 4 };
        let cut = grid.dealias_cutoff() as i64;
        let mut blocks = Vec::with_capacity(grid.n());
        let mut signs = Vec::with_capacity(grid.n());
        for j in 0..grid.n() {
            let k = grid.wavenumbers()[j];
            signs.push(if k < 0.0 { -1.0 } else { 1.0 });
            let block = if grid.mode_number(j).abs() > cut {
                [[0.0; MAX_DIM]; MAX_DIM]
            } else if kind.is_parabolic() {
                parabolic_block(kind, p, k.abs())
            } else {
                hyperbolic_block(kind, p, k.abs())
            };
            blocks.push(block);
        }
        let spectral_radius = blocks
            .iter()
            .map(|b| {
                let m = to_matrix(b, dim);
                m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        LinearOperator { dim, blocks, signs, spectral_radius }
    }

    /// `y = M x` slot by slot.
    pub fn apply(&self, x: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        apply_blocks(&self.blocks, self.dim, x)
    }
}

fn hyperbolic_block(kind: ModelKind, p: &ModelParams, k: f64) -> Block {
    let (wf, wd) = kind.velocity_weights(p);
    let eps = kind.effective_epsilon(p);
    let inv_l2 = 1.0 / (p.lambda * p.lambda);
    let root = [p.psi_star(Carrier::A), p.psi_star(Carrier::B)];
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for (i, c) in Carrier::BOTH.into_iter().enumerate() {
        let r = root[i];
        m[i][2 + i] = 0.5 * r * k;
        let stiffness = 2.0 * p.pressure_prime(c, p.rho_star(c)) / r * k + eps * eps / (2.0 * r) * k.powi(3);
        m[2 + i][i] -= wf * stiffness;
        if k > 0.0 {
            let q = c.charge();
            m[2 + i][0] -= wf * q * 2.0 * root[0] * inv_l2 / k;
            m[2 + i][1] += wf * q * 2.0 * root[1] * inv_l2 / k;
        }
        m[2 + i][2 + i] = -wd;
    }
    m
}

fn parabolic_block(kind: ModelKind, p: &ModelParams, k: f64) -> Block {
    let eps = kind.effective_epsilon(p);
    let inv_l2 = 1.0 / (p.lambda * p.lambda);
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for (i, c) in Carrier::BOTH.into_iter().enumerate() {
        let rho = p.rho_star(c);
        m[i][i] = -(p.pressure_prime(c, rho) * k * k + 0.25 * eps * eps * k.powi(4));
        if k > 0.0 {
            let q = c.charge();
            m[i][0] -= q * rho * inv_l2;
            m[i][1] += q * rho * inv_l2;
        }
    }
    m
}

pub(crate) fn to_matrix(b: &Block, dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |r, c| b[r][c])
}

pub(crate) fn from_matrix(m: &DMatrix<f64>, row0: usize, col0: usize, dim: usize) -> Block {
    let mut b = [[0.0; MAX_DIM]; MAX_DIM];
    for r in 0..dim {
        for c in 0..dim {
            b[r][c] = m[(row0 + r, col0 + c)];
        }
    }
    b
}

pub(crate) fn apply_blocks(blocks: &[Block], dim: usize, x: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = x[0].len();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; dim];
    for (j, b) in blocks.iter().enumerate() {
        for r in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..dim {
                acc += x[c][j] * b[r][c];
            }
            y[r][j] = acc;
        }
    }
    y
}

/// Per-slot matrix functions of `dt·M` for one time step size.
#[derive(Debug, Clone)]
pub(crate) enum Propagators {
    /// `(I − dt γ M)^{-1}` for the two implicit stages of ARS(2,2,2).
    Imex { solve: Vec<Block> },
    /// `exp(dt M)`, `φ₁(dt M)`, `φ₂(dt M)`.
    Exponential { exp: Vec<Block>, phi1: Vec<Block>, phi2: Vec<Block> },
}

pub(crate) const ARS_GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

impl Propagators {
    pub fn imex(op: &LinearOperator, dt: f64) -> Self {
        let d = op.dim;
        let solve = op
            .blocks
            .iter()
            .map(|b| {
                let m = DMatrix::<f64>::identity(d, d) - to_matrix(b, d) * (dt * ARS_GAMMA);
                let inv = m.try_inverse().expect("I − dtγM is invertible for dissipative blocks");
                from_matrix(&inv, 0, 0, d)
            })
            .collect();
        Propagators::Imex { solve }
    }

    /// Uses the block-triangular identity
    /// `exp([[A, I, 0], [0, 0, I], [0, 0, 0]]) = [[e^A, φ₁(A), φ₂(A)], …]`.
    pub fn exponential(op: &LinearOperator, dt: f64) -> Self {
        let d = op.dim;
        let mut exp = Vec::with_capacity(op.blocks.len());
        let mut phi1 = Vec::with_capacity(op.blocks.len());
        let mut phi2 = Vec::with_capacity(op.blocks.len());
        for b in &op.blocks {
            let mut aug = DMatrix::<f64>::zeros(3 * d, 3 * d);
            for r in 0..d {
                for c in 0..d {
                    aug[(r, c)] = dt * b[r][c];
                }
                aug[(r, d + r)] = 1.0;
                aug[(d + r, 2 * d + r)] = 1.0;
            }
            let e = aug.exp();
            exp.push(from_matrix(&e, 0, 0, d));
            phi1.push(from_matrix(&e, 0, d, d));
            phi2.push(from_matrix(&e, 0, 2 * d, d));
        }
        Propagators::Exponential { exp, phi1, phi2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn phi_functions_of_a_scalar() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let p = ModelParams::default();
        let mut op = LinearOperator::new(ModelKind::Dd, &p, &g);
        let z = -0.7;
        op.blocks = vec![[[z, 0.0, 0.0, 0.0], [0.0, z, 0.0, 0.0], [0.0; 4], [0.0; 4]]];
        let Propagators::Exponential { exp, phi1, phi2 } = Propagators::exponential(&op, 1.0) else {
            unreachable!()
        };
        let e = z.exp();
        assert!((exp[0][0][0] - e).abs() < 1e-14);
        assert!((phi1[0][0][0] - (e - 1.0) / z).abs() < 1e-14);
        assert!((phi2[0][0][0] - (e - 1.0 - z) / (z * z)).abs() < 1e-14);
    }

    #[test]
    fn neutral_mode_eigenvalues_solve_the_scalar_relation() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let p = ModelParams { epsilon: 0.3, tau: 0.5, ..ModelParams::default() };
        let op = LinearOperator::new(ModelKind::QhdUnscaled, &p, &g);
        for j in 1..4 {
            let k = j as f64;
            let eig = to_matrix(&op.blocks[j], 4).complex_eigenvalues();
            let stiff = 2.0 * k * k + 0.25 * p.epsilon.powi(2) * k.powi(4);
            let hit = eig.iter().any(|z| (z * z + z / p.tau + stiff).norm() < 1e-10);
            assert!(hit, "k = {k}: {eig:?}");
        }
    }

    #[test]
    fn masked_slots_are_zero() {
        let g = Grid::new(24, 2.0 * PI).unwrap();
        let op = LinearOperator::new(ModelKind::Qdd, &ModelParams::default(), &g);
        for j in 0..24 {
            let zero = op.blocks[j].iter().flatten().all(|&v| v == 0.0);
            assert_eq!(zero, g.mode_number(j).abs() > 8 || j == 0, "slot {j}");
        }
    }
}
