use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the steady-state neutrality `ρ_a* − ρ_b* − c* = 0`, relative
/// to the largest of the three constants.
pub const STEADY_NEUTRALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    A,
    B,
}

impl Carrier {
    pub const BOTH: [Carrier; 2] = [Carrier::A, Carrier::B];

    /// Charge sign: `+1` for carrier a, `−1` for carrier b.
    pub fn charge(self) -> f64 {
        match self {
            Carrier::A => 1.0,
            Carrier::B => -1.0,
        }
    }
}

/// Physical constants of the bipolar system. Pressures are power laws
/// `P_i(ρ) = k_i ρ^{γ_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub epsilon: f64,
    pub tau: f64,
    pub lambda: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub k_a: f64,
    pub k_b: f64,
    pub rho_a_star: f64,
    pub rho_b_star: f64,
    pub c_star: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            epsilon: 0.1,
            tau: 1.0,
            lambda: 1.0,
            gamma_a: 2.0,
            gamma_b: 2.0,
            k_a: 1.0,
            k_b: 1.0,
            rho_a_star: 1.0,
            rho_b_star: 1.0,
            c_star: 0.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be ≥ 0, got {}", self.epsilon));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad(format!("tau must be > 0, got {}", self.tau));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        for (name, g) in [("gamma_a", self.gamma_a), ("gamma_b", self.gamma_b)] {
            if !(g > 1.0) || !g.is_finite() {
                return bad(format!("{name} must be > 1, got {g}"));
            }
        }
        for (name, v) in [
            ("k_a", self.k_a),
            ("k_b", self.k_b),
            ("rho_a_star", self.rho_a_star),
            ("rho_b_star", self.rho_b_star),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        let residual = self.steady_charge();
        let scale = self.rho_a_star.abs().max(self.rho_b_star.abs()).max(self.c_star.abs());
        if residual.abs() > STEADY_NEUTRALITY_TOLERANCE * scale {
            return bad(format!(
                "steady-state neutrality violated: ρ_a^*−ρ_b^*−c^* = {} ≠ 0",
                round_sig(residual)
            ));
        }
        for c in Carrier::BOTH {
            let dp = self.pressure_prime(c, self.rho_star(c));
            if !(dp > 0.0) {
                return bad(format!("P′(ρ*) must be > 0 for carrier {c:?}"));
            }
        }
        Ok(())
    }

    pub fn steady_charge(&self) -> f64 {
        self.rho_a_star - self.rho_b_star - self.c_star
    }

    pub fn rho_star(&self, c: Carrier) -> f64 {
        match c {
            Carrier::A => self.rho_a_star,
            Carrier::B => self.rho_b_star,
        }
    }

    pub fn psi_star(&self, c: Carrier) -> f64 {
        self.rho_star(c).sqrt()
    }

    pub fn gamma(&self, c: Carrier) -> f64 {
        match c {
            Carrier::A => self.gamma_a,
            Carrier::B => self.gamma_b,
        }
    }

    pub fn k(&self, c: Carrier) -> f64 {
        match c {
            Carrier::A => self.k_a,
            Carrier::B => self.k_b,
        }
    }

    pub fn pressure(&self, c: Carrier, rho: f64) -> f64 {
        self.k(c) * rho.powf(self.gamma(c))
    }

    pub fn pressure_prime(&self, c: Carrier, rho: f64) -> f64 {
        let g = self.gamma(c);
        self.k(c) * g * rho.powf(g - 1.0)
    }

    /// Enthalpy `h` with `h′(ρ) = P′(ρ)/ρ`, normalized so `h(0) = 0`.
    pub fn enthalpy(&self, c: Carrier, rho: f64) -> f64 {
        let g = self.gamma(c);
        self.k(c) * g / (g - 1.0) * rho.powf(g - 1.0)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        ModelParams { epsilon, ..self.clone() }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        ModelParams { tau, ..self.clone() }
    }
}

fn round_sig(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let digits = 12 - v.abs().log10().ceil() as i32;
    let f = 10f64.powi(digits);
    (v * f).round() / f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_with_unit_debye_length() {
        let p = ModelParams::default();
        p.validate().unwrap();
        assert_eq!(p.lambda, 1.0);
    }

    #[test]
    fn neutrality_violation_is_reported() {
        let p = ModelParams {
            rho_a_star: 1.0,
            rho_b_star: 0.5,
            c_star: 0.4,
            ..ModelParams::default()
        };
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("steady-state neutrality violated: ρ_a^*−ρ_b^*−c^* = 0.1 ≠ 0"), "{err}");
    }

    #[test]
    fn power_law_values() {
        let p = ModelParams { k_a: 1.0, gamma_a: 2.0, ..ModelParams::default() };
        assert_eq!(p.pressure(Carrier::A, 3.0), 9.0);
        assert_eq!(p.pressure_prime(Carrier::A, 3.0), 6.0);
    }

    #[test]
    fn rejects_isothermal_and_negative_tau() {
        assert!(ModelParams { gamma_b: 1.0, ..ModelParams::default() }.validate().is_err());
        assert!(ModelParams { tau: 0.0, ..ModelParams::default() }.validate().is_err());
        assert!(ModelParams { epsilon: -0.1, ..ModelParams::default() }.validate().is_err());
    }
}
