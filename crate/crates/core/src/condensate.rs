//! Bogoliubov phonons of the homogeneous condensate in code units (c = ξ = 1).

use crate::error::{Error, Result};
use crate::params::{SystemParams, BOSON_MASS};

/// Above this ω/T the occupation is returned as exactly zero.
const MAX_BOLTZMANN_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhononMode {
    pub k: f64,
    pub omega: f64,
}

impl PhononMode {
    pub fn from_momentum(k: f64) -> Self {
        Self { k, omega: dispersion(k) }
    }

    pub fn from_energy(omega: f64) -> Self {
        Self {
            k: inverse_dispersion(omega),
            omega,
        }
    }
}

/// ω_k = k √(1 + k²/2).
pub fn dispersion(k: f64) -> f64 {
    k * (1.0 + 0.5 * k * k).sqrt()
}

/// Free-particle energy ε_k = k²/(2 m_B).
pub fn free_energy(k: f64) -> f64 {
    k * k / (2.0 * BOSON_MASS)
}

/// k_ω = √(√(1 + 2ω²) − 1), evaluated without cancellation at small ω.
pub fn inverse_dispersion(omega: f64) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    let root = (1.0 + 2.0 * omega * omega).sqrt();
    omega * (2.0 / (root + 1.0)).sqrt()
}

/// dω/dk = (1 + k²)/√(1 + k²/2).
pub fn group_velocity(k: f64) -> f64 {
    (1.0 + k * k) / (1.0 + 0.5 * k * k).sqrt()
}

/// dk_ω/dω, the reciprocal group velocity at k_ω. The linear-branch limit
/// 1/c is returned at ω = 0.
pub fn dk_domega(omega: f64) -> Result<f64> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(Error::Domain(format!("dk/domega needs omega >= 0, got {omega}")));
    }
    Ok(1.0 / group_velocity(inverse_dispersion(omega)))
}

/// W_k = [k²/(2 + k²)]^{1/4}.
pub fn w_factor(k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("W_k needs k > 0, got {k}")));
    }
    Ok(w_factor_unchecked(k))
}

pub(crate) fn w_factor_unchecked(k: f64) -> f64 {
    (k * k / (2.0 + k * k)).sqrt().sqrt()
}

/// W×_{k,k'} = W_k W_k' + 1/(W_k W_k').
pub fn w_cross(k: f64, kp: f64) -> Result<f64> {
    let w = w_factor(k)? * w_factor(kp)?;
    Ok(w + 1.0 / w)
}

/// W≺_{k,k'} = W_k W_k' − 1/(W_k W_k').
pub fn w_prec(k: f64, kp: f64) -> Result<f64> {
    let w = w_factor(k)? * w_factor(kp)?;
    Ok(w - 1.0 / w)
}

/// Bose–Einstein occupation at energy ω and temperature T (both c/ξ, k_B = 1).
pub fn bose_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = omega / temperature;
    if x > MAX_BOLTZMANN_EXPONENT {
        return 0.0;
    }
    1.0 / x.exp_m1()
}

/// Thermal phonon number at energy ω for the condensate described by `p`.
pub fn thermal_occupation(omega: f64, p: &SystemParams) -> f64 {
    bose_occupation(omega, p.temperature())
}
