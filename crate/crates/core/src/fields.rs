//! State containers in Madelung variables `(ψ, u)` with `ρ = ψ²`, conversion to
//! conservative variables, and initial-data generators.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::params::{Carrier, ModelParams};
use crate::poisson::{self, solve_efield};

/// One carrier species: `psi = √ρ` (strictly positive) and velocity `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierState {
    pub psi: Field,
    pub u: Field,
}

impl CarrierState {
    pub fn new(psi: Field, u: Field) -> Result<Self> {
        if !psi.grid().same(u.grid()) {
            return Err(Error::GridMismatch);
        }
        let min = psi.min();
        if !(min > 0.0) {
            return Err(Error::VacuumBreach { min, time: None });
        }
        Ok(CarrierState { psi, u })
    }

    pub fn density(&self) -> Field {
        self.psi.map(|p| p * p)
    }

    pub fn momentum(&self) -> Field {
        self.psi.zip_map(&self.u, |p, u| p * p * u)
    }

    pub fn mass(&self) -> f64 {
        self.density().mean()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlasmaState {
    pub carrier_a: CarrierState,
    pub carrier_b: CarrierState,
    pub efield: Field,
    pub time: f64,
}

impl PlasmaState {
    /// Assembles a state and recomputes `E` from the Poisson equation.
    pub fn from_carriers(a: CarrierState, b: CarrierState, p: &ModelParams, time: f64) -> Result<Self> {
        if !a.psi.grid().same(b.psi.grid()) {
            return Err(Error::GridMismatch);
        }
        let efield = solve_efield(&a.density(), &b.density(), p)?;
        Ok(PlasmaState { carrier_a: a, carrier_b: b, efield, time })
    }

    /// The constant steady state `(ρ_a*, ρ_b*, 0, 0, E = 0)`.
    pub fn steady(grid: &Arc<Grid>, p: &ModelParams) -> Self {
        let carrier = |c: Carrier| CarrierState {
            psi: Field::constant(grid, p.psi_star(c)),
            u: Field::zeros(grid),
        };
        PlasmaState {
            carrier_a: carrier(Carrier::A),
            carrier_b: carrier(Carrier::B),
            efield: Field::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.carrier_a.psi.grid()
    }

    pub fn carrier(&self, c: Carrier) -> &CarrierState {
        match c {
            Carrier::A => &self.carrier_a,
            Carrier::B => &self.carrier_b,
        }
    }

    /// Mean net charge `⟨ψ_a² − ψ_b² − c*⟩`.
    pub fn neutrality_residual(&self, p: &ModelParams) -> f64 {
        poisson::neutrality_residual(&self.carrier_a.density(), &self.carrier_b.density(), p).0
    }

    pub fn refresh_efield(&mut self, p: &ModelParams) -> Result<()> {
        self.efield = solve_efield(&self.carrier_a.density(), &self.carrier_b.density(), p)?;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|f| f.is_finite())
    }

    /// `[ψ_a, u_a, ψ_b, u_b, E]`, the column order used by snapshot files.
    pub fn fields(&self) -> [&Field; 5] {
        [
            &self.carrier_a.psi,
            &self.carrier_a.u,
            &self.carrier_b.psi,
            &self.carrier_b.u,
            &self.efield,
        ]
    }

    /// Largest pointwise difference over all five fields.
    pub fn max_abs_diff(&self, other: &PlasmaState) -> f64 {
        self.fields()
            .iter()
            .zip(other.fields())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Conservative variables of both carriers.
#[derive(Debug, Clone, PartialEq)]
pub struct Conservative {
    pub rho_a: Field,
    pub m_a: Field,
    pub rho_b: Field,
    pub m_b: Field,
}

pub fn to_conservative(s: &PlasmaState) -> Conservative {
    Conservative {
        rho_a: s.carrier_a.density(),
        m_a: s.carrier_a.momentum(),
        rho_b: s.carrier_b.density(),
        m_b: s.carrier_b.momentum(),
    }
}

/// Inverse of [`to_conservative`] without the electric field.
pub fn from_conservative(c: &Conservative) -> Result<(CarrierState, CarrierState)> {
    let carrier = |rho: &Field, m: &Field| {
        let min = rho.min();
        if !(min > 0.0) {
            return Err(Error::VacuumBreach { min, time: None });
        }
        Ok(CarrierState {
            psi: rho.map(f64::sqrt),
            u: m.zip_map(rho, |m, r| m / r),
        })
    };
    Ok((carrier(&c.rho_a, &c.m_a)?, carrier(&c.rho_b, &c.m_b)?))
}

/// Perturbation of `ψ` about the steady root density, `w_i = ψ_i − √ρ_i*`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationView {
    pub w_a: Field,
    pub w_b: Field,
}

impl PerturbationView {
    pub fn w(&self, c: Carrier) -> &Field {
        match c {
            Carrier::A => &self.w_a,
            Carrier::B => &self.w_b,
        }
    }

    /// `ψ_i = w_i + √ρ_i*`.
    pub fn psi(&self, c: Carrier, p: &ModelParams) -> Field {
        let shift = p.psi_star(c);
        self.w(c).map(|w| w + shift)
    }
}

pub fn perturbation(s: &PlasmaState, p: &ModelParams) -> PerturbationView {
    let w = |c: Carrier| {
        let shift = p.psi_star(c);
        s.carrier(c).psi.map(|v| v - shift)
    };
    PerturbationView { w_a: w(Carrier::A), w_b: w(Carrier::B) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbedCarriers {
    /// Equal density profiles on both carriers; pointwise neutral, so `E = 0`.
    Both,
    AOnly,
    BOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "tau")]
pub enum InitScaling {
    Unscaled,
    /// Velocities divided by `τ`, matching the diffusion-scaled variables.
    DiffusionScaled(f64),
}

/// Small smooth perturbation of the steady state.
///
/// `ρ_i0 = ρ_i* + Λ p(x)` with `p = Σ_m cos(m κ x) / #modes` and
/// `u_i0 = Λ_u q(x)` with `q = Σ_m sin(m κ x) / #modes`, `κ = 2π/L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub amplitude: f64,
    pub density_modes: Vec<usize>,
    pub velocity_amplitude: f64,
    pub velocity_modes: Vec<usize>,
    pub carriers: PerturbedCarriers,
    pub scaling: InitScaling,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            amplitude: 1e-3,
            density_modes: vec![1, 2, 3],
            velocity_amplitude: 1e-3,
            velocity_modes: vec![1, 2, 3],
            carriers: PerturbedCarriers::Both,
            scaling: InitScaling::Unscaled,
        }
    }
}

impl InitSpec {
    pub fn single_mode(amplitude: f64, mode: usize) -> Self {
        InitSpec {
            amplitude,
            density_modes: vec![mode],
            velocity_amplitude: 0.0,
            velocity_modes: vec![],
            ..InitSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInit(m.into()));
        if !self.amplitude.is_finite() || !self.velocity_amplitude.is_finite() {
            return bad("amplitudes must be finite");
        }
        if self.density_modes.iter().chain(&self.velocity_modes).any(|&m| m == 0) {
            return bad("modes must be ≥ 1 (mode 0 would change the mean)");
        }
        if let InitScaling::DiffusionScaled(tau) = self.scaling {
            if !(tau > 0.0) {
                return bad("diffusion scaling requires τ > 0");
            }
        }
        Ok(())
    }

    pub fn density_profile(&self, grid: &Arc<Grid>) -> Field {
        mode_sum(grid, &self.density_modes, f64::cos)
    }

    pub fn velocity_profile(&self, grid: &Arc<Grid>) -> Field {
        mode_sum(grid, &self.velocity_modes, f64::sin)
    }
}

fn mode_sum(grid: &Arc<Grid>, modes: &[usize], basis: fn(f64) -> f64) -> Field {
    if modes.is_empty() {
        return Field::zeros(grid);
    }
    let kappa = 2.0 * PI / grid.length();
    let norm = 1.0 / modes.len() as f64;
    Field::from_fn(grid, |x| norm * modes.iter().map(|&m| basis(m as f64 * kappa * x)).sum::<f64>())
}

pub fn make_initial_data(spec: &InitSpec, p: &ModelParams, grid: &Arc<Grid>) -> Result<PlasmaState> {
    spec.validate()?;
    p.validate()?;
    let density = spec.density_profile(grid);
    let mut velocity = spec.velocity_profile(grid).scale(spec.velocity_amplitude);
    if let InitScaling::DiffusionScaled(tau) = spec.scaling {
        velocity = velocity.scale(1.0 / tau);
    }
    let carrier = |c: Carrier, perturbed: bool| -> Result<CarrierState> {
        let amp = if perturbed { spec.amplitude } else { 0.0 };
        let rho_star = p.rho_star(c);
        let rho = density.map(|d| rho_star + amp * d);
        let min = rho.min();
        if !(min > 0.0) {
            return Err(Error::VacuumBreach { min, time: Some(0.0) });
        }
        CarrierState::new(rho.map(f64::sqrt), velocity.clone())
    };
    let (pa, pb) = match spec.carriers {
        PerturbedCarriers::Both => (true, true),
        PerturbedCarriers::AOnly => (true, false),
        PerturbedCarriers::BOnly => (false, true),
    };
    PlasmaState::from_carriers(carrier(Carrier::A, pa)?, carrier(Carrier::B, pb)?, p, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Arc<Grid> {
        Grid::new(64, 2.0 * PI).unwrap()
    }

    #[test]
    fn conservative_of_constant_state() {
        let g = grid();
        let c = CarrierState::new(Field::constant(&g, 2.0), Field::zeros(&g)).unwrap();
        assert!(c.density().values().iter().all(|&r| r == 4.0));
        assert!(c.momentum().values().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn momentum_is_pointwise() {
        let g = grid();
        let psi = Field::from_fn(&g, |x| 1.0 + 0.1 * x.sin());
        let u = Field::from_fn(&g, |x| 0.2 * x.cos());
        let c = CarrierState::new(psi, u).unwrap();
        let expected = Field::from_fn(&g, |x| (1.0 + 0.1 * x.sin()).powi(2) * 0.2 * x.cos());
        assert!(c.momentum().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn vacuum_breach_carries_minimum() {
        let g = grid();
        let rho = Field::from_fn(&g, |x| x.cos().max(0.0));
        let c = Conservative {
            rho_a: rho.clone(),
            m_a: Field::zeros(&g),
            rho_b: Field::constant(&g, 1.0),
            m_b: Field::zeros(&g),
        };
        match from_conservative(&c) {
            Err(Error::VacuumBreach { min, .. }) => assert_eq!(min, 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn steady_state_has_zero_perturbation() {
        let g = grid();
        let p = ModelParams::default();
        let v = perturbation(&PlasmaState::steady(&g, &p), &p);
        assert_eq!(v.w_a.max_abs(), 0.0);
        assert_eq!(v.w_b.max_abs(), 0.0);
    }

    #[test]
    fn perturbation_of_shifted_root_density() {
        let g = grid();
        let p = ModelParams { rho_a_star: 2.0, rho_b_star: 1.5, c_star: 0.5, ..Default::default() };
        let mut s = PlasmaState::steady(&g, &p);
        s.carrier_a.psi = Field::from_fn(&g, |x| 2f64.sqrt() + 0.01 * x.sin());
        let v = perturbation(&s, &p);
        assert!(v.w_a.max_abs_diff(&Field::from_fn(&g, |x| 0.01 * x.sin())) < 1e-15);
        assert!(v.psi(Carrier::A, &p).max_abs_diff(&s.carrier_a.psi) < 1e-15);
    }

    #[test]
    fn zero_amplitude_gives_steady_state() {
        let g = grid();
        let p = ModelParams::default();
        let spec = InitSpec { amplitude: 0.0, velocity_amplitude: 0.0, ..InitSpec::default() };
        let s = make_initial_data(&spec, &p, &g).unwrap();
        assert_eq!(s, PlasmaState::steady(&g, &p));
    }

    #[test]
    fn neutral_perturbation_has_zero_field() {
        let g = grid();
        let p = ModelParams::default();
        let s = make_initial_data(&InitSpec::single_mode(0.01, 1), &p, &g).unwrap();
        assert_eq!(s.efield.max_abs(), 0.0);
    }

    #[test]
    fn single_carrier_perturbation_satisfies_poisson() {
        let g = grid();
        let p = ModelParams::default();
        let spec = InitSpec { carriers: PerturbedCarriers::AOnly, ..InitSpec::single_mode(0.01, 1) };
        let s = make_initial_data(&spec, &p, &g).unwrap();
        let charge = poisson::charge_density(&s.carrier_a.density(), &s.carrier_b.density(), &p);
        let residual = s.efield.derivative(1).unwrap().scale(p.lambda * p.lambda) - &charge;
        assert!(residual.max_abs() < 1e-10);
        assert!(s.efield.max_abs() > 1e-3);
    }

    #[test]
    fn huge_amplitude_breaches_vacuum() {
        let g = grid();
        let p = ModelParams::default();
        let err = make_initial_data(&InitSpec::single_mode(5.0, 1), &p, &g).unwrap_err();
        assert_eq!(err.kind(), "vacuum breach");
    }

    #[test]
    fn diffusion_scaling_divides_velocity() {
        let g = grid();
        let p = ModelParams::default();
        let base = InitSpec::default();
        let scaled = InitSpec { scaling: InitScaling::DiffusionScaled(0.25), ..base.clone() };
        let s0 = make_initial_data(&base, &p, &g).unwrap();
        let s1 = make_initial_data(&scaled, &p, &g).unwrap();
        assert!(s1.carrier_a.u.max_abs_diff(&s0.carrier_a.u.scale(4.0)) < 1e-16);
        assert_eq!(s1.carrier_a.psi, s0.carrier_a.psi);
    }

    #[test]
    fn initial_states_are_neutral_and_small() {
        let g = grid();
        let p = ModelParams::default();
        for amp in [1e-4, 1e-3, 1e-2] {
            let spec = InitSpec { amplitude: amp, ..InitSpec::default() };
            let s = make_initial_data(&spec, &p, &g).unwrap();
            assert!(s.neutrality_residual(&p).abs() < 1e-14);
            let v = perturbation(&s, &p);
            let bound = amp * spec.density_profile(&g).max_abs() / p.rho_a_star.sqrt();
            assert!(v.w_a.max_abs() <= bound && v.w_b.max_abs() <= bound);
        }
    }

    proptest! {
        #[test]
        fn conservative_round_trip(
            rho in proptest::collection::vec(0.1f64..5.0, 16),
            m in proptest::collection::vec(-2.0f64..2.0, 16),
        ) {
            let g = Grid::new(16, 1.0).unwrap();
            let c = Conservative {
                rho_a: Field::new(&g, rho.clone()).unwrap(),
                m_a: Field::new(&g, m.clone()).unwrap(),
                rho_b: Field::new(&g, rho.iter().rev().copied().collect()).unwrap(),
                m_b: Field::new(&g, m.iter().rev().copied().collect()).unwrap(),
            };
            let (a, b) = from_conservative(&c).unwrap();
            let s = PlasmaState { carrier_a: a, carrier_b: b, efield: Field::zeros(&g), time: 0.0 };
            let back = to_conservative(&s);
            prop_assert!(back.rho_a.max_abs_diff(&c.rho_a) <= 1e-12 * 5.0);
            prop_assert!(back.m_a.max_abs_diff(&c.m_a) <= 1e-12 * 2.0);
            prop_assert!(back.rho_b.max_abs_diff(&c.rho_b) <= 1e-12 * 5.0);
            prop_assert!(back.m_b.max_abs_diff(&c.m_b) <= 1e-12 * 2.0);
            let again = from_conservative(&back).unwrap();
            prop_assert!(again.0.psi.max_abs_diff(&s.carrier_a.psi) <= 1e-12);
            prop_assert!(again.0.u.max_abs_diff(&s.carrier_a.u) <= 1e-12);
        }
    }
}
