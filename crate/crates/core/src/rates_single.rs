//! Single-phonon emission and absorption rates between rotor levels.
//!
//! The effective rate for angular-momentum transfer λ is
//!
//! γ_λ^{jj'} = 4 g_IB² n_0 / (√2 π) · k³ / √(1 + 2E²) · j_λ²(r_0 k),
//!
//! with E = |E_j − E_j'| and k the phonon momentum at that energy. It is
//! identical to ½ (dk/dω) U_λ(k)², and both forms are kept so that tests can
//! check one against the other.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condensate::{bose_occupation, dk_domega, inverse_dispersion, w_factor};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::special_fn::{g_coefficient, spherical_bessel, spherical_bessel_seq, CgTable, FrozenCgTable};

/// Rigid-rotor level energies E_j = j(j+1) B.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorSpectrum {
    pub jmax: u32,
    pub b_rot: f64,
    pub energies: Vec<f64>,
}

impl RotorSpectrum {
    pub fn new(p: &SystemParams, jmax: u32) -> Result<Self> {
        p.validate()?;
        let b_rot = p.rotational_constant();
        let energies = (0..=jmax).map(|j| level_product(j) * b_rot).collect();
        Ok(Self { jmax, b_rot, energies })
    }

    pub fn energy(&self, j: u32) -> f64 {
        self.energies[j as usize]
    }

    /// E_{jj'} = E_j − E_j'.
    pub fn transition_energy(&self, j: u32, jp: u32) -> f64 {
        (level_product(j) - level_product(jp)) * self.b_rot
    }
}

fn level_product(j: u32) -> f64 {
    let j = f64::from(j);
    j * (j + 1.0)
}

/// Δ_{jj'} = |j(j+1) − j'(j'+1)|.
pub fn delta(j: u32, jp: u32) -> f64 {
    (level_product(j) - level_product(jp)).abs()
}

fn transition_energy(j: u32, jp: u32, p: &SystemParams) -> Result<f64> {
    if j == jp {
        return Err(Error::DegenerateTransition { j, j_prime: jp });
    }
    let e = delta(j, jp) * p.rotational_constant();
    if !(e > 0.0) {
        return Err(Error::DegenerateTransition { j, j_prime: jp });
    }
    Ok(e)
}

/// Relaxation channels of the Boltzmann equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    /// Spontaneous single-phonon emission.
    OnePhononSpontaneous,
    /// Thermally stimulated single-phonon emission and absorption.
    OnePhononThermal,
    /// Scattering of a phonon off the molecule.
    TwoPhononCross,
    /// Creation or annihilation of a phonon pair.
    TwoPhononPair,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::OnePhononSpontaneous,
        Channel::OnePhononThermal,
        Channel::TwoPhononCross,
        Channel::TwoPhononPair,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Channel::OnePhononSpontaneous => "1ph-sp",
            Channel::OnePhononThermal => "1ph-T",
            Channel::TwoPhononCross => "2ph-x",
            Channel::TwoPhononPair => "2ph-prec",
        }
    }

    pub fn is_two_phonon(&self) -> bool {
        matches!(self, Channel::TwoPhononCross | Channel::TwoPhononPair)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1ph-sp" | "sp" => Ok(Channel::OnePhononSpontaneous),
            "1ph-t" | "1ph-th" | "th" => Ok(Channel::OnePhononThermal),
            "2ph-x" | "2ph-cross" | "x" | "cross" => Ok(Channel::TwoPhononCross),
            "2ph-prec" | "2ph-pair" | "prec" | "pair" => Ok(Channel::TwoPhononPair),
            other => Err(Error::Config(format!("unknown channel '{other}'"))),
        }
    }
}

/// Dense matrix of total rates Γ_{j→j'} for one channel, indexed [j][j'].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRateMatrix {
    pub jmax: u32,
    pub channel: Channel,
    gamma: Vec<f64>,
}

impl ChannelRateMatrix {
    pub fn zeros(jmax: u32, channel: Channel) -> Self {
        let n = jmax as usize + 1;
        Self {
            jmax,
            channel,
            gamma: vec![0.0; n * n],
        }
    }

    /// Builds the matrix from a rate function evaluated on every ordered pair
    /// j ≠ j' of equal parity. Pairs of opposite parity stay exactly zero.
    pub fn from_fn<F>(jmax: u32, channel: Channel, rate: F) -> Result<Self>
    where
        F: Fn(u32, u32) -> Result<f64> + Sync,
    {
        let n = jmax as usize + 1;
        let rows: Vec<Vec<f64>> = (0..=jmax)
            .into_par_iter()
            .map(|j| {
                let mut row = vec![0.0; n];
                for jp in 0..=jmax {
                    if jp == j || (j + jp) % 2 == 1 {
                        continue;
                    }
                    row[jp as usize] = rate(j, jp).map_err(|e| Error::Rate {
                        j,
                        j_prime: jp,
                        source: Box::new(e),
                    })?;
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            jmax,
            channel,
            gamma: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.jmax as usize + 1
    }

    pub fn get(&self, j: u32, jp: u32) -> f64 {
        self.gamma[j as usize * self.dim() + jp as usize]
    }

    /// Total outgoing rate Γ_j = Σ_{j'} Γ_{j→j'}.
    pub fn total_out(&self, j: u32) -> f64 {
        let n = self.dim();
        self.gamma[j as usize * n..(j as usize + 1) * n].iter().sum()
    }

    pub fn max_rate(&self) -> f64 {
        self.gamma.iter().copied().fold(0.0, f64::max)
    }

    /// Nonnegative entries, zero diagonal, and no coupling between parities.
    pub fn check_invariants(&self) -> bool {
        (0..=self.jmax).all(|j| {
            (0..=self.jmax).all(|jp| {
                let g = self.get(j, jp);
                g >= 0.0 && g.is_finite() && ((j != jp && (j + jp) % 2 == 0) || g == 0.0)
            })
        })
    }
}

/// Single-phonon coupling U_λ(k) = g_IB √(8 n_0/π) k W_k j_λ(k r_0) for even λ.
pub fn coupling_single(lambda: u32, k: f64, p: &SystemParams) -> Result<f64> {
    if lambda % 2 == 1 {
        return Ok(0.0);
    }
    let w = w_factor(k)?;
    Ok(p.g_ib() * (8.0 * p.n0_xi3 / PI).sqrt() * k * w * spherical_bessel(lambda, k * p.r0_over_xi))
}

/// Prefactor of γ_λ without the Bessel factor, as a function of the transition energy.
fn gamma_envelope(energy: f64, p: &SystemParams) -> f64 {
    let k = inverse_dispersion(energy);
    let g_ib = p.g_ib();
    4.0 * g_ib * g_ib * p.n0_xi3 / (2f64.sqrt() * PI) * k.powi(3) / (1.0 + 2.0 * energy * energy).sqrt()
}

/// Effective rate γ_λ^{jj'} (zero for odd λ).
pub fn effective_gamma(lambda: u32, j: u32, jp: u32, p: &SystemParams) -> Result<f64> {
    let energy = transition_energy(j, jp, p)?;
    if lambda % 2 == 1 {
        return Ok(0.0);
    }
    let k = inverse_dispersion(energy);
    let bessel = spherical_bessel(lambda, p.r0_over_xi * k);
    Ok(gamma_envelope(energy, p) * bessel * bessel)
}

/// The same rate written as ½ (dk/dω) U_λ(k_ω)².
pub fn effective_gamma_from_coupling(lambda: u32, j: u32, jp: u32, p: &SystemParams) -> Result<f64> {
    let energy = transition_energy(j, jp, p)?;
    let k = inverse_dispersion(energy);
    let u = coupling_single(lambda, k, p)?;
    Ok(0.5 * dk_domega(energy)? * u * u)
}

/// Closed form of γ_λ for r_0 ≪ ξ, where the emitted phonon is particle-like.
pub fn rate_1ph_small_molecule(lambda: u32, j: u32, jp: u32, p: &SystemParams) -> f64 {
    if lambda % 2 == 1 {
        return 0.0;
    }
    let d = delta(j, jp);
    let coupling = p.gIB_over_g * p.gIB_over_g;
    let arg = (d / (2.0 * p.mI_over_mB)).sqrt();
    let bessel = spherical_bessel(lambda, arg);
    coupling / (PI * p.n0_xi3 * p.r0_over_xi) * (d / p.mI_over_mB).sqrt() * bessel * bessel
}

/// Spontaneous and thermal parts of one rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpTh {
    pub sp: f64,
    pub th: f64,
}

impl SpTh {
    pub fn total(&self) -> f64 {
        self.sp + self.th
    }
}

/// m-resolved rates Γ_{jm→j'm'}; the μ sum collapses to μ = m − m'.
pub fn rate_1ph_m_resolved(j: u32, m: i32, jp: u32, mp: i32, p: &SystemParams) -> Result<SpTh> {
    let energy = transition_energy(j, jp, p)?;
    if m.unsigned_abs() > j || mp.unsigned_abs() > jp {
        return Err(Error::Domain(format!("projection out of range: ({j},{m}) -> ({jp},{mp})")));
    }
    let mu = m - mp;
    let lo = j.abs_diff(jp).max(mu.unsigned_abs());
    let mut sum = 0.0;
    for lambda in lo..=(j + jp) {
        if lambda % 2 == 1 {
            continue;
        }
        let g = g_coefficient(j as i32, m, jp as i32, mp, lambda as i32, mu);
        if g != 0.0 {
            sum += effective_gamma(lambda, j, jp, p)? * g * g;
        }
    }
    let n_bar = bose_occupation(energy, p.temperature());
    Ok(SpTh {
        sp: if j > jp { sum } else { 0.0 },
        th: sum * n_bar,
    })
}

/// Σ_λ γ_λ (C^{λ0}_{j0,j'0})² over the exact triangle window, even λ only.
fn lambda_sum(j: u32, jp: u32, energy: f64, p: &SystemParams, cg: &FrozenCgTable) -> f64 {
    let k = inverse_dispersion(energy);
    let lo = j.abs_diff(jp);
    let hi = j + jp;
    let bessel = spherical_bessel_seq(hi, p.r0_over_xi * k);
    let mut sum = 0.0;
    for lambda in (lo..=hi).filter(|l| l % 2 == 0) {
        let c = cg.get_m0(j, jp, lambda);
        let b = bessel[lambda as usize];
        sum += b * b * c * c;
    }
    gamma_envelope(energy, p) * sum
}

/// m-independent total rates Γ_{j→j'} = (2j'+1) Σ_λ γ_λ (C^{λ0}_{j0,j'0})² × {Θ, n̄}.
pub fn rate_1ph_total(j: u32, jp: u32, p: &SystemParams) -> Result<SpTh> {
    rate_1ph_total_with(j, jp, p, &FrozenCgTable::default())
}

pub fn rate_1ph_total_with(j: u32, jp: u32, p: &SystemParams, cg: &FrozenCgTable) -> Result<SpTh> {
    let energy = transition_energy(j, jp, p)?;
    let base = (2.0 * f64::from(jp) + 1.0) * lambda_sum(j, jp, energy, p, cg);
    let n_bar = bose_occupation(energy, p.temperature());
    Ok(SpTh {
        sp: if j > jp { base } else { 0.0 },
        th: base * n_bar,
    })
}

/// CG table covering every ⟨j 0, j' 0 | λ 0⟩ needed for rotor levels up to `jmax`.
pub fn single_phonon_cg_table(jmax: u32) -> FrozenCgTable {
    let mut table = CgTable::new();
    table.populate_m0(jmax, 2 * jmax);
    table.freeze()
}

/// Spontaneous and thermal single-phonon rate matrices up to `jmax`.
pub fn single_phonon_matrices(p: &SystemParams, jmax: u32) -> Result<(ChannelRateMatrix, ChannelRateMatrix)> {
    p.validate()?;
    let cg = single_phonon_cg_table(jmax);
    let n = jmax as usize + 1;
    let pairs: Vec<SpTh> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (j, jp) = ((idx / n) as u32, (idx % n) as u32);
            if j == jp || (j + jp) % 2 == 1 {
                return Ok(SpTh::default());
            }
            rate_1ph_total_with(j, jp, p, &cg).map_err(|e| Error::Rate {
                j,
                j_prime: jp,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let mut sp = ChannelRateMatrix::zeros(jmax, Channel::OnePhononSpontaneous);
    let mut th = ChannelRateMatrix::zeros(jmax, Channel::OnePhononThermal);
    for (idx, r) in pairs.iter().enumerate() {
        sp.gamma[idx] = r.sp;
        th.gamma[idx] = r.th;
    }
    Ok((sp, th))
}

/// One single-phonon channel matrix.
pub fn single_phonon_matrix(p: &SystemParams, jmax: u32, channel: Channel) -> Result<ChannelRateMatrix> {
    let (sp, th) = single_phonon_matrices(p, jmax)?;
    match channel {
        Channel::OnePhononSpontaneous => Ok(sp),
        Channel::OnePhononThermal => Ok(th),
        other => Err(Error::Config(format!("{other} is not a single-phonon channel"))),
    }
}

/// Total spontaneous decay rate Γ_j^{1ph,sp} = Σ_{j'<j} Γ_{j→j'} for each j ≤ jmax.
pub fn total_spontaneous_rates(p: &SystemParams, jmax: u32) -> Result<Vec<f64>> {
    let cg = single_phonon_cg_table(jmax);
    (0..=jmax)
        .into_par_iter()
        .map(|j| {
            let mut total = 0.0;
            for jp in (0..j).filter(|jp| (j + jp) % 2 == 0) {
                total += rate_1ph_total_with(j, jp, p, &cg)?.sp;
            }
            Ok(total)
        })
        .collect()
}
