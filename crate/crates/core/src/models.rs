//! Tendencies of the four model families.
//!
//! Hyperbolic kinds evolve `(ψ_i, u_i)`:
//!
//! ```text
//! ∂t ψ = −∂x(ψ² u) / (2ψ)
//! ∂t u = transport + w_f · force + w_d · damping
//! transport = −∂x(u²/2)
//! force     = q E − ∂x h(ρ) + (ε²/2) ∂x(∂x²ψ / ψ)        (no Bohm term for HD)
//! damping   = −u
//! ```
//!
//! with `(w_f, w_d) = (1, 1/τ)` for the unscaled system and `(1/τ², 1/τ²)`
//! under diffusion scaling. Parabolic kinds evolve `ρ_i`:
//!
//! ```text
//! ∂t ρ = −∂x J,   J = q ρ E − ∂x P(ρ) + (ε²/2) ρ ∂x(∂x²√ρ / √ρ)   (no ε-term for DD)
//! ```
//!
//! Every nonlinear pointwise evaluation is passed through the 2/3-rule mask
//! before it is differentiated, and assembled tendencies are masked too.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{CarrierState, PlasmaState};
use crate::grid::Field;
use crate::params::{Carrier, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[serde(rename = "qhd")]
    QhdUnscaled,
    QhdScaled,
    Hd,
    Qdd,
    Dd,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::QhdUnscaled,
        ModelKind::QhdScaled,
        ModelKind::Hd,
        ModelKind::Qdd,
        ModelKind::Dd,
    ];

    pub fn is_parabolic(self) -> bool {
        matches!(self, ModelKind::Qdd | ModelKind::Dd)
    }

    pub fn has_bohm(self) -> bool {
        matches!(self, ModelKind::QhdUnscaled | ModelKind::QhdScaled | ModelKind::Qdd)
    }

    pub fn is_diffusion_scaled(self) -> bool {
        matches!(self, ModelKind::QhdScaled)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::QhdUnscaled => "qhd",
            ModelKind::QhdScaled => "qhd_scaled",
            ModelKind::Hd => "hd",
            ModelKind::Qdd => "qdd",
            ModelKind::Dd => "dd",
        }
    }

    /// `ε` as seen by this kind; zero for the classical models.
    pub fn effective_epsilon(self, p: &ModelParams) -> f64 {
        if self.has_bohm() {
            p.epsilon
        } else {
            0.0
        }
    }

    /// Weights `(w_f, w_d)` on the force and damping groups of `∂t u`.
    pub fn velocity_weights(self, p: &ModelParams) -> (f64, f64) {
        match self {
            ModelKind::QhdScaled => {
                let inv = 1.0 / (p.tau * p.tau);
                (inv, inv)
            }
            _ => (1.0, 1.0 / p.tau),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown model kind {s:?} (expected qhd, qhd_scaled, hd, qdd or dd)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarrierTendency {
    pub d_psi: Field,
    pub d_u: Field,
    pub transport: Field,
    pub force: Field,
    pub damping: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tendency {
    Hyperbolic { a: CarrierTendency, b: CarrierTendency },
    Parabolic { d_rho_a: Field, d_rho_b: Field },
}

impl Tendency {
    pub fn is_finite(&self) -> bool {
        match self {
            Tendency::Hyperbolic { a, b } => [a, b]
                .iter()
                .all(|t| t.d_psi.is_finite() && t.d_u.is_finite()),
            Tendency::Parabolic { d_rho_a, d_rho_b } => d_rho_a.is_finite() && d_rho_b.is_finite(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        let fields: Vec<&Field> = match self {
            Tendency::Hyperbolic { a, b } => vec![&a.d_psi, &a.d_u, &b.d_psi, &b.d_u],
            Tendency::Parabolic { d_rho_a, d_rho_b } => vec![d_rho_a, d_rho_b],
        };
        fields
            .iter()
            .flat_map(|f| f.values().iter())
            .fold(0.0, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY })
    }
}

fn check_positive(f: &Field) -> Result<()> {
    let min = f.min();
    if !(min > 0.0) {
        return Err(Error::VacuumBreach { min, time: None });
    }
    Ok(())
}

/// `P_i(ρ) = k_i ρ^{γ_i}` pointwise.
pub fn pressure(rho: &Field, c: Carrier, p: &ModelParams) -> Result<Field> {
    check_positive(rho)?;
    Ok(rho.map(|r| p.pressure(c, r)))
}

/// `P_i′(ρ) = k_i γ_i ρ^{γ_i − 1}` pointwise.
pub fn pressure_prime(rho: &Field, c: Carrier, p: &ModelParams) -> Result<Field> {
    check_positive(rho)?;
    Ok(rho.map(|r| p.pressure_prime(c, r)))
}

/// Bohm contribution to `∂t u` per unit mass, `(ε²/2) ∂x(∂x²ψ / ψ)`.
pub fn bohm_term(psi: &Field, epsilon: f64) -> Result<Field> {
    check_positive(psi)?;
    if epsilon == 0.0 {
        return Ok(Field::zeros(psi.grid()));
    }
    Ok(bohm_unchecked(psi, epsilon))
}

fn bohm_unchecked(psi: &Field, epsilon: f64) -> Field {
    let psi_xx = psi.spectral_derivative(2);
    let quotient = psi_xx.zip_map(psi, |a, b| a / b);
    quotient.dealiased_derivative(1).scale(0.5 * epsilon * epsilon)
}

fn carrier_tendency(
    s: &CarrierState,
    c: Carrier,
    efield: &Field,
    kind: ModelKind,
    p: &ModelParams,
) -> CarrierTendency {
    let psi = &s.psi;
    let u = &s.u;
    let rho = psi.map(|v| v * v);

    let flux_x = (&rho * u).dealiased_derivative(1);
    let d_psi = flux_x.zip_map(psi, |f, v| -0.5 * f / v).dealiased();

    let transport = u.map(|v| -0.5 * v * v).dealiased_derivative(1);
    let h_x = rho.map(|r| p.enthalpy(c, r)).dealiased_derivative(1);
    let q = c.charge();
    let mut force = efield.zip_map(&h_x, |e, h| q * e - h);
    let eps = kind.effective_epsilon(p);
    if eps != 0.0 {
        force = force + bohm_unchecked(psi, eps);
    }
    let damping = -u;

    let (wf, wd) = kind.velocity_weights(p);
    let d_u = transport
        .zip_map(&force, |t, f| t + wf * f)
        .zip_map(&damping, |v, d| v + wd * d)
        .dealiased();

    CarrierTendency { d_psi, d_u, transport, force, damping }
}

/// Drift flux `J_i` of the parabolic models; `∂t ρ_i = −∂x J_i`.
pub(crate) fn drift_flux(rho: &Field, efield: &Field, c: Carrier, epsilon: f64, p: &ModelParams) -> Field {
    let q = c.charge();
    let field_term = rho.zip_map(efield, |r, e| q * r * e).dealiased();
    let p_x = rho.map(|r| p.pressure(c, r)).dealiased_derivative(1);
    let mut flux = field_term - p_x;
    if epsilon != 0.0 {
        let psi = rho.map(f64::sqrt);
        let bohm = bohm_unchecked(&psi, epsilon);
        flux = flux + (rho * &bohm).dealiased();
    }
    flux
}

pub(crate) fn parabolic_rates(
    rho_a: &Field,
    rho_b: &Field,
    efield: &Field,
    kind: ModelKind,
    p: &ModelParams,
) -> (Field, Field) {
    let eps = kind.effective_epsilon(p);
    let rate = |rho: &Field, c: Carrier| -> Field {
        drift_flux(rho, efield, c, eps, p).spectral_derivative(1).scale(-1.0)
    };
    (rate(rho_a, Carrier::A), rate(rho_b, Carrier::B))
}

/// Tendency of `kind` at state `s`. The electric field in `s` must be current.
pub fn rhs(s: &PlasmaState, kind: ModelKind, p: &ModelParams) -> Result<Tendency> {
    check_positive(&s.carrier_a.psi)?;
    check_positive(&s.carrier_b.psi)?;
    let t = if kind.is_parabolic() {
        let (d_rho_a, d_rho_b) = parabolic_rates(
            &s.carrier_a.density(),
            &s.carrier_b.density(),
            &s.efield,
            kind,
            p,
        );
        Tendency::Parabolic { d_rho_a, d_rho_b }
    } else {
        Tendency::Hyperbolic {
            a: carrier_tendency(&s.carrier_a, Carrier::A, &s.efield, kind, p),
            b: carrier_tendency(&s.carrier_b, Carrier::B, &s.efield, kind, p),
        }
    };
    if !t.is_finite() {
        return Err(Error::Blowup { time: s.time, max: t.max_abs() });
    }
    Ok(t)
}
