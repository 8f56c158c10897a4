//! Two-phonon transition rates: phonon scattering off the molecule (×) and
//! creation or annihilation of a phonon pair (≺).
//!
//! Both rates are written as an η integral over how the transition energy
//! |E_{jj'}| is shared between the two phonons. The angular part reduces to
//!
//! A_{λλ'} = Σ_{L even} (2λ+1)(2λ'+1)/(2L+1) (C^{L0}_{λ'0,λ0})² (C^{L0}_{j0,j'0})²,
//!
//! so for every quadrature node only the two Bessel sequences are needed.

use std::f64::consts::{PI, SQRT_2};

use crate::condensate::{bose_occupation, dk_domega, inverse_dispersion, w_factor, w_factor_unchecked};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::quadrature::{integrate, EtaQuadrature};
use crate::rates_single::{delta, Channel, ChannelRateMatrix};
use crate::special_fn::{spherical_bessel, spherical_bessel_seq, CgTable, FrozenCgTable};

/// Extra partial waves kept beyond r_0 k.
const LAMBDA_BUFFER: u32 = 12;
/// Upper limit of the thermal-phonon energy integral, in units of T.
const KAPPA_CUTOFF_IN_T: f64 = 80.0;

fn transition_energy(j: u32, jp: u32, p: &SystemParams) -> Result<f64> {
    let e = delta(j, jp) * p.rotational_constant();
    if j == jp || !(e > 0.0) {
        return Err(Error::DegenerateTransition { j, j_prime: jp });
    }
    Ok(e)
}

fn heaviside(a: u32, b: u32) -> f64 {
    if a > b {
        1.0
    } else {
        0.0
    }
}

/// k ω / √(1 + 2ω²) at energy ω, i.e. the density-of-states factor of one phonon.
fn phonon_weight(omega: f64) -> f64 {
    inverse_dispersion(omega) * omega / (1.0 + 2.0 * omega * omega).sqrt()
}

/// The η-dependent part of γ× without Bessel factors.
fn cross_envelope(eta: f64, energy: f64, p: &SystemParams) -> f64 {
    let (w1, w2) = (eta * energy, (eta + 1.0) * energy);
    let (k1, k2) = (inverse_dispersion(w1), inverse_dispersion(w2));
    let w = w_factor_unchecked(k1) * w_factor_unchecked(k2);
    let wx = w + 1.0 / w;
    let g = p.g_ib();
    g * g * energy / (2.0 * PI.powi(3)) * phonon_weight(w2) * phonon_weight(w1) * wx * wx
}

/// The η-dependent part of γ≺ without Bessel factors.
fn pair_envelope(eta: f64, energy: f64, p: &SystemParams) -> f64 {
    let (w1, w2) = (eta * energy, (1.0 - eta) * energy);
    let (k1, k2) = (inverse_dispersion(w1), inverse_dispersion(w2));
    let w = w_factor_unchecked(k1) * w_factor_unchecked(k2);
    let wp = w - 1.0 / w;
    let g = p.g_ib();
    g * g * energy / (4.0 * PI.powi(3)) * phonon_weight(w2) * phonon_weight(w1) * wp * wp
}

fn check_eta(eta: f64, upper: Option<f64>) -> Result<()> {
    let ok = eta > 0.0 && eta.is_finite() && upper.is_none_or(|u| eta < u);
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("eta = {eta} outside the integration range")))
    }
}

/// γ×_{λλ';jj'}(η).
pub fn kernel_cross(lambda: u32, lambda_p: u32, j: u32, jp: u32, eta: f64, p: &SystemParams) -> Result<f64> {
    let energy = transition_energy(j, jp, p)?;
    check_eta(eta, None)?;
    if (lambda + lambda_p) % 2 == 1 {
        return Ok(0.0);
    }
    let b1 = spherical_bessel(lambda, p.r0_over_xi * inverse_dispersion(eta * energy));
    let b2 = spherical_bessel(lambda_p, p.r0_over_xi * inverse_dispersion((eta + 1.0) * energy));
    Ok(cross_envelope(eta, energy, p) * b1 * b1 * b2 * b2)
}

/// γ≺_{λλ';jj'}(η) for η ∈ (0, 1).
pub fn kernel_prec(lambda: u32, lambda_p: u32, j: u32, jp: u32, eta: f64, p: &SystemParams) -> Result<f64> {
    let energy = transition_energy(j, jp, p)?;
    check_eta(eta, Some(1.0))?;
    if (lambda + lambda_p) % 2 == 1 {
        return Ok(0.0);
    }
    let b1 = spherical_bessel(lambda, p.r0_over_xi * inverse_dispersion(eta * energy));
    let b2 = spherical_bessel(lambda_p, p.r0_over_xi * inverse_dispersion((1.0 - eta) * energy));
    Ok(pair_envelope(eta, energy, p) * b1 * b1 * b2 * b2)
}

/// Two-phonon coupling U_{λλ'}(k, k') = (2 g_IB/π) k k' j_λ(k r_0) j_λ'(k' r_0) W, with W
/// either W× or W≺.
pub fn coupling_two(lambda: u32, lambda_p: u32, k: f64, kp: f64, w_combination: f64, p: &SystemParams) -> f64 {
    if (lambda + lambda_p) % 2 == 1 {
        return 0.0;
    }
    2.0 * p.g_ib() / PI
        * k
        * kp
        * spherical_bessel(lambda, k * p.r0_over_xi)
        * spherical_bessel(lambda_p, kp * p.r0_over_xi)
        * w_combination
}

/// γ× written as (|E|/8π) (dk/dω)|_{η|E|} (dk/dω)|_{(η+1)|E|} U×².
pub fn kernel_cross_from_coupling(
    lambda: u32,
    lambda_p: u32,
    j: u32,
    jp: u32,
    eta: f64,
    p: &SystemParams,
) -> Result<f64> {
    let energy = transition_energy(j, jp, p)?;
    check_eta(eta, None)?;
    let (w1, w2) = (eta * energy, (eta + 1.0) * energy);
    let (k1, k2) = (inverse_dispersion(w1), inverse_dispersion(w2));
    let w = w_factor(k1)? * w_factor(k2)?;
    let u = coupling_two(lambda, lambda_p, k1, k2, w + 1.0 / w, p);
    Ok(energy / (8.0 * PI) * dk_domega(w1)? * dk_domega(w2)? * u * u)
}

/// γ≺ written as (|E|/16π) (dk/dω)|_{η|E|} (dk/dω)|_{(1−η)|E|} U≺².
pub fn kernel_prec_from_coupling(
    lambda: u32,
    lambda_p: u32,
    j: u32,
    jp: u32,
    eta: f64,
    p: &SystemParams,
) -> Result<f64> {
    let energy = transition_energy(j, jp, p)?;
    check_eta(eta, Some(1.0))?;
    let (w1, w2) = (eta * energy, (1.0 - eta) * energy);
    let (k1, k2) = (inverse_dispersion(w1), inverse_dispersion(w2));
    let w = w_factor(k1)? * w_factor(k2)?;
    let u = coupling_two(lambda, lambda_p, k1, k2, w - 1.0 / w, p);
    Ok(energy / (16.0 * PI) * dk_domega(w1)? * dk_domega(w2)? * u * u)
}

/// Angular weights A_{λλ'} for λ, λ' ≤ `lambda_max`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularWeights {
    pub lambda_max: u32,
    weights: Vec<f64>,
}

impl AngularWeights {
    /// Sums L over the even values allowed by both triangle rules.
    pub fn new(j: u32, jp: u32, lambda_max: u32, cg: &FrozenCgTable) -> Self {
        let n = lambda_max as usize + 1;
        let mut weights = vec![0.0; n * n];
        let l_lo = j.abs_diff(jp);
        let l_hi = j + jp;
        for big_l in (l_lo..=l_hi).filter(|l| l % 2 == 0) {
            let c_rot = cg.get_m0(j, jp, big_l);
            if c_rot == 0.0 {
                continue;
            }
            let rot = c_rot * c_rot / (2.0 * f64::from(big_l) + 1.0);
            for lambda in 0..=lambda_max {
                let lp_lo = lambda.abs_diff(big_l);
                let lp_hi = (lambda + big_l).min(lambda_max);
                for lambda_p in (lp_lo..=lp_hi).step_by(2) {
                    let c = cg.get_m0(lambda_p, lambda, big_l);
                    weights[lambda as usize * n + lambda_p as usize] += (2.0 * f64::from(lambda) + 1.0)
                        * (2.0 * f64::from(lambda_p) + 1.0)
                        * rot
                        * c
                        * c;
                }
            }
        }
        Self { lambda_max, weights }
    }

    /// Direct sum over every L ≤ 2(j + j') and all λ, λ' with no selection rules applied
    /// beyond what the Clebsch–Gordan coefficients encode.
    pub fn brute_force(j: u32, jp: u32, lambda_max: u32) -> Self {
        let n = lambda_max as usize + 1;
        let mut weights = vec![0.0; n * n];
        for big_l in (0..=2 * (j + jp)).filter(|l| l % 2 == 0) {
            let c_rot = crate::special_fn::clebsch_gordan(j as i32, 0, jp as i32, 0, big_l as i32, 0);
            for lambda in 0..=lambda_max {
                for lambda_p in 0..=lambda_max {
                    let c = crate::special_fn::clebsch_gordan(lambda_p as i32, 0, lambda as i32, 0, big_l as i32, 0);
                    weights[lambda as usize * n + lambda_p as usize] += (2.0 * f64::from(lambda) + 1.0)
                        * (2.0 * f64::from(lambda_p) + 1.0)
                        / (2.0 * f64::from(big_l) + 1.0)
                        * c
                        * c
                        * c_rot
                        * c_rot;
                }
            }
        }
        Self { lambda_max, weights }
    }

    pub fn get(&self, lambda: u32, lambda_p: u32) -> f64 {
        self.weights[lambda as usize * (self.lambda_max as usize + 1) + lambda_p as usize]
    }

    /// Σ_{λλ'} A_{λλ'} b1[λ]² b2[λ']², optionally keeping only λ = 0 for the first phonon.
    fn contract(&self, b1: &[f64], b2: &[f64], first_lambda_zero_only: bool) -> f64 {
        let n = self.lambda_max as usize + 1;
        let rows = if first_lambda_zero_only { 1 } else { n };
        let mut sum = 0.0;
        for lambda in 0..rows {
            let s1 = b1[lambda] * b1[lambda];
            if s1 == 0.0 {
                continue;
            }
            let row = &self.weights[lambda * n..(lambda + 1) * n];
            let inner: f64 = row.iter().zip(b2).map(|(a, b)| a * b * b).sum();
            sum += s1 * inner;
        }
        sum
    }
}

/// Partial-wave truncation for the two-phonon sums.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoPhononOptions {
    /// Overrides the default λ cutoff (ceil(r_0 k_max) + 12, at least j + j').
    pub lambda_max: Option<u32>,
    /// Keeps only λ = 0 for the lower-energy phonon.
    pub first_lambda_zero_only: bool,
}

/// Default λ cutoff for the largest phonon momentum reached by the integrand.
pub fn default_lambda_max(j: u32, jp: u32, k_max: f64, p: &SystemParams) -> u32 {
    let from_size = (p.r0_over_xi * k_max).ceil() as u32 + LAMBDA_BUFFER;
    from_size.max(j + jp)
}

/// Upper end of the × channel η integral.
pub fn cross_eta_max(energy: f64, p: &SystemParams, q: &EtaQuadrature) -> f64 {
    let t = p.temperature();
    let ratio = t / energy;
    let tail = ratio * (1.0 + 1.0 / q.abs_tol.max(f64::MIN_POSITIVE)).ln();
    let mut eta_max = tail.min(50.0 * ratio + 10.0);
    if let Some(cap) = q.eta_max {
        eta_max = eta_max.min(cap);
    }
    eta_max
}

fn thermal_breakpoints(scale: f64, upper: f64) -> Vec<f64> {
    [0.03, 0.3, 1.0, 3.0, 10.0, 30.0]
        .iter()
        .map(|f| f * scale)
        .filter(|&x| x > 0.0 && x < upper)
        .collect()
}

/// Γ×_{j→j'}.
pub fn rate_2ph_cross(j: u32, jp: u32, p: &SystemParams, q: &EtaQuadrature) -> Result<f64> {
    rate_2ph_cross_with(j, jp, p, q, TwoPhononOptions::default(), &FrozenCgTable::default())
}

pub fn rate_2ph_cross_with(
    j: u32,
    jp: u32,
    p: &SystemParams,
    q: &EtaQuadrature,
    opts: TwoPhononOptions,
    cg: &FrozenCgTable,
) -> Result<f64> {
    let energy = transition_energy(j, jp, p)?;
    let t = p.temperature();
    if t <= 0.0 || (j + jp) % 2 == 1 {
        return Ok(0.0);
    }
    let eta_max = cross_eta_max(energy, p, q);
    let k_max = inverse_dispersion((eta_max + 1.0) * energy);
    let lambda_max = opts.lambda_max.unwrap_or_else(|| default_lambda_max(j, jp, k_max, p));
    let weights = AngularWeights::new(j, jp, lambda_max, cg);
    let (theta_up, theta_down) = (heaviside(jp, j), heaviside(j, jp));
    let r0 = p.r0_over_xi;

    let integrand = |eta: f64| {
        let (w1, w2) = (eta * energy, (eta + 1.0) * energy);
        let occ = (bose_occupation(w1, t) + theta_up) * (bose_occupation(w2, t) + theta_down);
        if occ == 0.0 {
            return 0.0;
        }
        let b1 = spherical_bessel_seq(lambda_max, r0 * inverse_dispersion(w1));
        let b2 = spherical_bessel_seq(lambda_max, r0 * inverse_dispersion(w2));
        cross_envelope(eta, energy, p) * weights.contract(&b1, &b2, opts.first_lambda_zero_only) * occ
    };
    let breaks = thermal_breakpoints(t / energy, eta_max);
    let result = integrate(integrand, 0.0, eta_max, &breaks, q.rel_tol, q.abs_tol, q.max_intervals)?;
    Ok((2.0 * f64::from(jp) + 1.0) * result.value)
}

/// Γ≺_{j→j'}.
pub fn rate_2ph_prec(j: u32, jp: u32, p: &SystemParams, q: &EtaQuadrature) -> Result<f64> {
    rate_2ph_prec_with(j, jp, p, q, TwoPhononOptions::default(), &FrozenCgTable::default())
}

pub fn rate_2ph_prec_with(
    j: u32,
    jp: u32,
    p: &SystemParams,
    q: &EtaQuadrature,
    opts: TwoPhononOptions,
    cg: &FrozenCgTable,
) -> Result<f64> {
    let energy = transition_energy(j, jp, p)?;
    let t = p.temperature();
    if (j + jp) % 2 == 1 || (t <= 0.0 && jp > j) {
        return Ok(0.0);
    }
    let k_max = inverse_dispersion(energy);
    let lambda_max = opts.lambda_max.unwrap_or_else(|| default_lambda_max(j, jp, k_max, p));
    let weights = AngularWeights::new(j, jp, lambda_max, cg);
    let theta = heaviside(j, jp);
    let r0 = p.r0_over_xi;

    let integrand = |eta: f64| {
        let (w1, w2) = (eta * energy, (1.0 - eta) * energy);
        let occ = (bose_occupation(w1, t) + theta) * (bose_occupation(w2, t) + theta);
        if occ == 0.0 || !occ.is_finite() {
            return 0.0;
        }
        let b1 = spherical_bessel_seq(lambda_max, r0 * inverse_dispersion(w1));
        let b2 = spherical_bessel_seq(lambda_max, r0 * inverse_dispersion(w2));
        pair_envelope(eta, energy, p) * weights.contract(&b1, &b2, opts.first_lambda_zero_only) * occ
    };
    // endpoints are excluded by the interior Gauss–Kronrod nodes; the offsets keep
    // the occupation away from 0/0 all the same
    let (lo, hi) = (f64::EPSILON, 1.0 - f64::EPSILON);
    let mut breaks = vec![0.5];
    if t > 0.0 {
        for b in thermal_breakpoints(t / energy, 0.5) {
            breaks.push(b);
            breaks.push(1.0 - b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let result = integrate(integrand, lo, hi, &breaks, q.rel_tol, q.abs_tol, q.max_intervals)?;
    Ok((2.0 * f64::from(jp) + 1.0) * result.value)
}

/// Ratio Γ^{2ph,T}/Γ^{1ph,sp} for small molecules,
/// (√2/4π²)(1/n_0ξ³) ∫_0^∞ dκ k(κ) n̄(κ).
pub fn thermal_2ph_ratio(p: &SystemParams, q: &EtaQuadrature) -> Result<f64> {
    p.validate()?;
    let t = p.temperature();
    if t <= 0.0 {
        return Ok(0.0);
    }
    let upper = KAPPA_CUTOFF_IN_T * t;
    let mut breaks = thermal_breakpoints(t, upper);
    if 1.0 < upper {
        breaks.push(1.0);
    }
    breaks.sort_by(f64::total_cmp);
    let integral = integrate(
        |kappa| inverse_dispersion(kappa) * bose_occupation(kappa, t),
        0.0,
        upper,
        &breaks,
        q.rel_tol,
        q.abs_tol,
        q.max_intervals,
    )?;
    Ok(SQRT_2 / (4.0 * PI * PI) / p.n0_xi3 * integral.value)
}

/// CG table for the two-phonon angular weights up to partial wave `lambda_max`.
pub fn two_phonon_cg_table(jmax: u32, lambda_max: u32) -> FrozenCgTable {
    let mut table = CgTable::new();
    table.populate_m0(jmax, 2 * jmax);
    let l_top = 2 * jmax;
    for lambda in 0..=lambda_max as i32 {
        for lambda_p in 0..=lambda_max as i32 {
            for big_l in (0..=l_top as i32).step_by(2) {
                if big_l >= (lambda - lambda_p).abs() && big_l <= lambda + lambda_p {
                    table.get_or_insert((lambda_p, 0, lambda, 0, big_l, 0));
                }
            }
        }
    }
    table.freeze()
}

/// Rate matrix of one two-phonon channel for levels up to `jmax`.
pub fn two_phonon_matrix(
    p: &SystemParams,
    jmax: u32,
    channel: Channel,
    q: &EtaQuadrature,
) -> Result<ChannelRateMatrix> {
    p.validate()?;
    let cg = two_phonon_cg_table(jmax, 2 * jmax + LAMBDA_BUFFER);
    let opts = TwoPhononOptions::default();
    match channel {
        Channel::TwoPhononCross => ChannelRateMatrix::from_fn(jmax, channel, |j, jp| {
            rate_2ph_cross_with(j, jp, p, q, opts, &cg)
        }),
        Channel::TwoPhononPair => ChannelRateMatrix::from_fn(jmax, channel, |j, jp| {
            rate_2ph_prec_with(j, jp, p, q, opts, &cg)
        }),
        other => Err(Error::Config(format!("{other} is not a two-phonon channel"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates_single::rate_1ph_total;

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    fn micro() -> SystemParams {
        SystemParams::new(0.1, 2.0, 0.01, 100.0, 1.0)
    }

    fn macro_dimer() -> SystemParams {
        SystemParams::new(10.0, 1.25, 0.01, 100.0, 1.0)
    }

    #[test]
    fn odd_total_partial_wave_vanishes() {
        assert_eq!(kernel_cross(1, 2, 2, 0, 0.5, &micro()).unwrap(), 0.0);
        assert_eq!(kernel_prec(0, 3, 4, 2, 0.3, &micro()).unwrap(), 0.0);
    }

    #[test]
    fn dual_forms_agree() {
        for p in [micro(), macro_dimer(), SystemParams::new(1.0, 1.0, 0.1, 30.0, 0.5)] {
            let a = kernel_cross(0, 2, 2, 0, 0.5, &p).unwrap();
            let b = kernel_cross_from_coupling(0, 2, 2, 0, 0.5, &p).unwrap();
            assert!(a > 0.0 && rel(a, b) < 1e-10, "{a} {b}");
            for &eta in &[1e-6, 0.01, 0.3, 0.5, 0.9, 4.0] {
                for (l, lp) in [(0, 0), (2, 0), (1, 3), (4, 6)] {
                    let a = kernel_cross(l, lp, 4, 2, eta, &p).unwrap();
                    let b = kernel_cross_from_coupling(l, lp, 4, 2, eta, &p).unwrap();
                    assert!(rel(a, b) < 1e-10, "x {eta} {l} {lp}: {a} {b}");
                    if eta < 1.0 {
                        let a = kernel_prec(l, lp, 4, 2, eta, &p).unwrap();
                        let b = kernel_prec_from_coupling(l, lp, 4, 2, eta, &p).unwrap();
                        assert!(rel(a, b) < 1e-10, "prec {eta} {l} {lp}: {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn prec_symmetry() {
        let p = micro();
        for &eta in &[0.1, 0.25, 0.5, 0.77] {
            for (l, lp) in [(0, 2), (2, 4), (1, 3)] {
                let a = kernel_prec(l, lp, 6, 2, eta, &p).unwrap();
                let b = kernel_prec(lp, l, 6, 2, 1.0 - eta, &p).unwrap();
                assert!(rel(a, b) < 1e-12);
            }
        }
    }

    #[test]
    fn cross_kernel_vanishes_linearly_at_small_eta() {
        // on the phonon branch k ∝ η and (W×)² ∝ 1/η, so γ× ∝ η
        let p = macro_dimer();
        let a = kernel_cross(0, 2, 24, 22, 1e-8, &p).unwrap();
        let b = kernel_cross(0, 2, 24, 22, 1e-6, &p).unwrap();
        let c = kernel_cross(0, 2, 24, 22, 0.1, &p).unwrap();
        assert!((a / b - 1e-2).abs() < 1e-4, "{}", a / b);
        assert!(a < 1e-6 * c);
    }

    #[test]
    fn rejects_bad_eta() {
        assert!(kernel_prec(0, 0, 2, 0, 1.0, &micro()).is_err());
        assert!(kernel_cross(0, 0, 2, 0, 0.0, &micro()).is_err());
        assert!(matches!(
            kernel_cross(0, 0, 2, 2, 0.5, &micro()),
            Err(Error::DegenerateTransition { .. })
        ));
    }

    #[test]
    fn windowed_weights_match_brute_force() {
        let cg = FrozenCgTable::default();
        for &(j, jp) in &[(2u32, 0u32), (4, 2), (5, 1), (3, 7), (6, 6)] {
            let lmax = 14;
            let a = AngularWeights::new(j, jp, lmax, &cg);
            let b = AngularWeights::brute_force(j, jp, lmax);
            for l in 0..=lmax {
                for lp in 0..=lmax {
                    assert!((a.get(l, lp) - b.get(l, lp)).abs() <= 1e-13 * b.get(l, lp).abs().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn zero_temperature_cross_vanishes() {
        let p = micro().with_temperature(0.0);
        let q = EtaQuadrature::default();
        for (j, jp) in [(2, 0), (0, 2), (5, 3), (4, 1)] {
            assert_eq!(rate_2ph_cross(j, jp, &p, &q).unwrap(), 0.0);
        }
    }

    #[test]
    fn parity_blocks() {
        let q = EtaQuadrature::default();
        assert_eq!(rate_2ph_cross(3, 0, &micro(), &q).unwrap(), 0.0);
        assert_eq!(rate_2ph_prec(4, 1, &micro(), &q).unwrap(), 0.0);
    }

    #[test]
    fn pair_channel_at_zero_temperature() {
        let p = micro().with_temperature(0.0);
        let q = EtaQuadrature::default();
        assert_eq!(rate_2ph_prec(0, 2, &p, &q).unwrap(), 0.0);
        assert!(rate_2ph_prec(2, 0, &p, &q).unwrap() > 0.0);
    }

    #[test]
    fn thermal_ratio_limits() {
        let q = EtaQuadrature::default();
        assert_eq!(thermal_2ph_ratio(&micro().with_temperature(0.0), &q).unwrap(), 0.0);
        let p = SystemParams::new(1e-3, 2.0, 0.1, 1e4, 1.0);
        let r = thermal_2ph_ratio(&p, &q).unwrap();
        assert!(rel(r, 0.1f64.powf(1.5)) < 0.2, "{r}");
        let mut last = 0.0;
        for &t in &[0.01, 0.03, 0.1, 0.3] {
            let r = thermal_2ph_ratio(&p.with_temperature(t), &q).unwrap();
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn detailed_balance_cross() {
        // small molecule: the thermal phonon sits on the far tail, so use a
        // warmer and larger rotor to keep both directions resolvable
        let p = SystemParams::new(0.5, 2.0, 0.3, 100.0, 1.0);
        let q = EtaQuadrature::default();
        let e = delta(4, 2) * p.rotational_constant();
        let down = rate_2ph_cross(4, 2, &p, &q).unwrap();
        let up = rate_2ph_cross(2, 4, &p, &q).unwrap();
        // per microstate of the final level
        let ratio = (up / 9.0) / (down / 5.0);
        assert!(rel(ratio, (-e / p.temperature()).exp()) < 1e-6, "{ratio}");
    }

    #[test]
    fn small_molecule_cross_matches_thermal_ratio() {
        let p = SystemParams::new(1e-3, 2.0, 0.1, 1e4, 1.0);
        let q = EtaQuadrature::default();
        let two = rate_2ph_cross(2, 0, &p, &q).unwrap();
        let one = rate_1ph_total(2, 0, &p).unwrap().sp;
        let ratio = thermal_2ph_ratio(&p, &q).unwrap();
        assert!(rel(two / one, ratio) < 0.05, "{} vs {}", two / one, ratio);
    }

    fn lambda_zero_share(p: &SystemParams) -> f64 {
        let q = EtaQuadrature::default();
        let cg = FrozenCgTable::default();
        let full = rate_2ph_cross_with(2, 0, p, &q, TwoPhononOptions::default(), &cg).unwrap();
        let opts = TwoPhononOptions {
            first_lambda_zero_only: true,
            ..Default::default()
        };
        rate_2ph_cross_with(2, 0, p, &q, opts, &cg).unwrap() / full
    }

    #[test]
    fn lambda_zero_dominates_for_small_molecule() {
        // the share is controlled by r_0 k_T, the size of the molecule on the
        // scale of a thermal phonon
        assert!(lambda_zero_share(&SystemParams::new(1e-3, 2.0, 0.1, 1e4, 1.0)) > 0.99);
        assert!(lambda_zero_share(&SystemParams::new(1e-2, 2.0, 0.01, 100.0, 1.0)) > 0.99);
        let warm = lambda_zero_share(&SystemParams::new(1e-2, 2.0, 0.1, 1e4, 1.0));
        assert!(warm > 0.9 && warm < 0.99, "{warm}");
    }

    #[test]
    fn lambda_cutoff_converged() {
        let q = EtaQuadrature::default();
        let cg = FrozenCgTable::default();
        for p in [micro(), macro_dimer().with_temperature(0.1)] {
            for (j, jp) in [(4u32, 2u32), (2, 4), (6, 0)] {
                let energy = delta(j, jp) * p.rotational_constant();
                let k_max = inverse_dispersion((cross_eta_max(energy, &p, &q) + 1.0) * energy);
                let base = default_lambda_max(j, jp, k_max, &p);
                let rate = |lmax: u32| {
                    let opts = TwoPhononOptions {
                        lambda_max: Some(lmax),
                        ..Default::default()
                    };
                    (
                        rate_2ph_cross_with(j, jp, &p, &q, opts, &cg).unwrap(),
                        rate_2ph_prec_with(j, jp, &p, &q, opts, &cg).unwrap(),
                    )
                };
                let (a, b) = (rate(base), rate(base + 4));
                assert!(rel(a.0, b.0) < 10.0 * q.rel_tol, "x {j}->{jp}: {a:?} {b:?}");
                assert!(rel(a.1, b.1) < 10.0 * q.rel_tol, "prec {j}->{jp}: {a:?} {b:?}");
            }
        }
    }

    #[test]
    fn pair_to_single_ratio_scales_inversely_with_density() {
        let q = EtaQuadrature::default();
        let ratio = |p: SystemParams| rate_2ph_prec(24, 22, &p, &q).unwrap() / rate_1ph_total(24, 22, &p).unwrap().sp;
        let cold = macro_dimer().with_temperature(0.0);
        let halving = ratio(cold.with_density(200.0)) / ratio(cold);
        assert!((halving - 0.5).abs() < 0.5 * 0.15, "{halving}");
        // at fixed T/T_c a denser condensate is also hotter in units of c/ξ,
        // and the thermally stimulated pair emission grows with it
        let warm = macro_dimer();
        assert!(ratio(warm.with_density(200.0)) / ratio(warm) > 0.5);
    }
}
