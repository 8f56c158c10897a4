//! Dimensionless system parameters and the scalar constants derived from them.
//!
//! Code units are ħ = k_B = c = ξ = 1: energies and rates in c/ξ, momenta in
//! 1/ξ, lengths in ξ, times in ξ/c. In these units the boson mass is fixed by
//! ξ = 1/√(2 m_B g n_0) together with c = √(g n_0 / m_B), giving m_B = 1/√2.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Riemann zeta at 3/2.
pub const ZETA_3_2: f64 = 2.612375348685488;

/// Physical configuration in dimensionless form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Molecule half-size r_0 in units of the healing length.
    pub r0_over_xi: f64,
    /// Mass of one impurity atom over the boson mass.
    pub mI_over_mB: f64,
    /// Condensate temperature over the (ideal-gas) critical temperature.
    pub T_over_Tc: f64,
    /// Gas parameter n_0 ξ³.
    pub n0_xi3: f64,
    /// Impurity-boson over boson-boson coupling.
    pub gIB_over_g: f64,
}

/// Outcome of [`SystemParams::validate`] for inputs that are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamStatus {
    Ok,
    /// n_0 ξ³ < 1: the condensate is not weakly interacting.
    StrongInteractionWarning,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            r0_over_xi: 0.1,
            mI_over_mB: 2.0,
            T_over_Tc: 0.0,
            n0_xi3: 100.0,
            gIB_over_g: 1.0,
        }
    }
}

impl SystemParams {
    pub fn new(r0_over_xi: f64, mI_over_mB: f64, T_over_Tc: f64, n0_xi3: f64, gIB_over_g: f64) -> Self {
        Self {
            r0_over_xi,
            mI_over_mB,
            T_over_Tc,
            n0_xi3,
            gIB_over_g,
        }
    }

    /// Bit-exact key for caching anything computed from these parameters.
    pub fn fingerprint(&self) -> [u64; 5] {
        [
            self.r0_over_xi.to_bits(),
            self.mI_over_mB.to_bits(),
            self.T_over_Tc.to_bits(),
            self.n0_xi3.to_bits(),
            self.gIB_over_g.to_bits(),
        ]
    }

    pub fn with_temperature(mut self, T_over_Tc: f64) -> Self {
        self.T_over_Tc = T_over_Tc;
        self
    }

    pub fn with_density(mut self, n0_xi3: f64) -> Self {
        self.n0_xi3 = n0_xi3;
        self
    }

    pub fn with_size(mut self, r0_over_xi: f64) -> Self {
        self.r0_over_xi = r0_over_xi;
        self
    }

    pub fn with_mass_ratio(mut self, mI_over_mB: f64) -> Self {
        self.mI_over_mB = mI_over_mB;
        self
    }

    pub fn validate(&self) -> Result<ParamStatus> {
        let positive = [
            ("r0_over_xi", self.r0_over_xi),
            ("mI_over_mB", self.mI_over_mB),
            ("n0_xi3", self.n0_xi3),
            ("gIB_over_g", self.gIB_over_g),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !self.T_over_Tc.is_finite() || self.T_over_Tc < 0.0 {
            return Err(Error::InvalidParams(format!(
                "T_over_Tc must be finite and >= 0, got {}",
                self.T_over_Tc
            )));
        }
        if self.n0_xi3 < 1.0 {
            Ok(ParamStatus::StrongInteractionWarning)
        } else {
            Ok(ParamStatus::Ok)
        }
    }

    /// Critical temperature of the ideal homogeneous gas, T_c = 2π n_0^{2/3} / (m_B ζ(3/2)^{2/3}).
    pub fn critical_temperature(&self) -> f64 {
        2.0 * PI * self.n0_xi3.powf(2.0 / 3.0) / (BOSON_MASS * ZETA_3_2.powf(2.0 / 3.0))
    }

    /// Temperature in code units (k_B = 1, energy c/ξ).
    pub fn temperature(&self) -> f64 {
        self.T_over_Tc * self.critical_temperature()
    }

    /// Impurity-boson coupling g_IB in code units, using g = 1/(2 m_B n_0 ξ²).
    pub fn g_ib(&self) -> f64 {
        self.gIB_over_g * boson_coupling(self.n0_xi3)
    }

    /// Impurity atom mass in code units.
    pub fn impurity_mass(&self) -> f64 {
        BOSON_MASS * self.mI_over_mB
    }

    /// Rotational constant B = 1/(4 m_I r_0²).
    pub fn rotational_constant(&self) -> f64 {
        1.0 / (4.0 * self.impurity_mass() * self.r0_over_xi * self.r0_over_xi)
    }
}

/// Boson mass in code units, m_B = 1/(√2 c ξ).
pub const BOSON_MASS: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Boson-boson coupling g in code units for a given gas parameter.
pub fn boson_coupling(n0_xi3: f64) -> f64 {
    1.0 / (2.0 * BOSON_MASS * n0_xi3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub c: f64,
    pub xi: f64,
    pub mB: f64,
    pub mI: f64,
    pub B_rot: f64,
    pub zeta32: f64,
    pub T_c: f64,
    pub T: f64,
}

pub fn derive_constants(p: &SystemParams) -> Result<DerivedConstants> {
    p.validate()?;
    Ok(DerivedConstants {
        c: 1.0,
        xi: 1.0,
        mB: BOSON_MASS,
        mI: p.impurity_mass(),
        B_rot: p.rotational_constant(),
        zeta32: ZETA_3_2,
        T_c: p.critical_temperature(),
        T: p.temperature(),
    })
}

/// Nonnegative root of x(x+1) = rhs.
pub(crate) fn quadratic_root(rhs: f64) -> f64 {
    if rhs <= 0.0 {
        return 0.0;
    }
    // 2 rhs / (1 + √(1 + 4 rhs)) avoids cancellation for small rhs
    2.0 * rhs / (1.0 + (1.0 + 4.0 * rhs).sqrt())
}

/// Characteristic thermal angular momentum j_T.
pub fn thermal_angular_momentum(p: &SystemParams) -> Result<f64> {
    p.validate()?;
    let r0_n13 = p.r0_over_xi * p.n0_xi3.cbrt();
    let rhs = 8.0 * PI / ZETA_3_2.powf(2.0 / 3.0) * p.T_over_Tc * p.mI_over_mB * r0_n13 * r0_n13;
    Ok(quadratic_root(rhs))
}

/// Landau critical angular momentum and minimal single-phonon final angular momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalJ {
    pub j_c: f64,
    pub j_c1: f64,
}

impl CriticalJ {
    pub fn j_c_floor(&self) -> u32 {
        self.j_c.floor() as u32
    }

    pub fn j_c1_floor(&self) -> u32 {
        self.j_c1.floor() as u32
    }
}

pub fn critical_j(p: &SystemParams) -> Result<CriticalJ> {
    p.validate()?;
    let m2 = p.mI_over_mB * p.mI_over_mB;
    let r2 = p.r0_over_xi * p.r0_over_xi;
    let j_c = quadratic_root(2.0 * m2 * r2);
    let j_c1 = if p.mI_over_mB <= 1.0 {
        0.0
    } else {
        quadratic_root(2.0 * r2 * (m2 - 1.0))
    };
    Ok(CriticalJ { j_c, j_c1 })
}
