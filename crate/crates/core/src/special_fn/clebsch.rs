//! Clebsch–Gordan coefficients for integer angular momenta (Condon–Shortley
//! phase), the G-coefficients built from them, and a memo table.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Largest argument of the log-factorial table.
const LOG_FACTORIAL_MAX: usize = 4096;

fn log_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LOG_FACTORIAL_MAX + 1);
        t.push(0.0);
        let mut acc = 0.0f64;
        for k in 1..=LOG_FACTORIAL_MAX {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

fn ln_fact(n: i64) -> f64 {
    log_factorials()[n as usize]
}

fn big_factorial(n: i64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn triangle(a: i64, b: i64, c: i64) -> bool {
    c >= (a - b).abs() && c <= a + b
}

/// ⟨j1 m1, j2 m2 | J M⟩ for integer quantum numbers.
///
/// Evaluated with the Racah formula in exact rational arithmetic, so the
/// result is correctly rounded apart from the final square root. Returns
/// exactly 0 when M ≠ m1 + m2, when a projection exceeds its angular
/// momentum, or when the triangle rule fails.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    let (j1, m1, j2, m2, j, m) = (j1 as i64, m1 as i64, j2 as i64, m2 as i64, j as i64, m as i64);
    if j1 < 0 || j2 < 0 || j < 0 {
        return 0.0;
    }
    if m != m1 + m2 || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j || !triangle(j1, j2, j) {
        return 0.0;
    }
    if m1 == 0 && m2 == 0 {
        return clebsch_gordan_m0(j1 as u32, j2 as u32, j as u32);
    }

    // squared prefactor
    let num = BigInt::from(2 * j + 1)
        * big_factorial(j + j1 - j2)
        * big_factorial(j - j1 + j2)
        * big_factorial(j1 + j2 - j)
        * big_factorial(j + m)
        * big_factorial(j - m)
        * big_factorial(j1 - m1)
        * big_factorial(j1 + m1)
        * big_factorial(j2 - m2)
        * big_factorial(j2 + m2);
    let den = big_factorial(j1 + j2 + j + 1);
    let prefactor_sq = BigRational::new(num, den);

    let k_min = 0.max(j2 - j - m1).max(j1 - j + m2);
    let k_max = (j1 + j2 - j).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let d = big_factorial(k)
            * big_factorial(j1 + j2 - j - k)
            * big_factorial(j1 - m1 - k)
            * big_factorial(j2 + m2 - k)
            * big_factorial(j - j2 + m1 + k)
            * big_factorial(j - j1 - m2 + k);
        let term = BigRational::new(BigInt::one(), d);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let squared = &prefactor_sq * &sum * &sum;
    let magnitude = squared.to_f64().unwrap_or(0.0).sqrt();
    if sum.is_negative() {
        -magnitude
    } else {
        magnitude
    }
}

/// ⟨j1 0, j2 0 | J 0⟩ from the closed form of the 3j symbol with vanishing
/// projections. Exactly 0 when j1 + j2 + J is odd or the triangle rule fails.
///
/// Uses log-factorials, so it stays accurate for the large angular momenta
/// (several hundred) reached by the rate sums.
pub fn clebsch_gordan_m0(j1: u32, j2: u32, j: u32) -> f64 {
    let (a, b, c) = (j1 as i64, j2 as i64, j as i64);
    if !triangle(a, b, c) {
        return 0.0;
    }
    let big_j = a + b + c;
    if big_j % 2 == 1 {
        return 0.0;
    }
    let g = big_j / 2;
    let log_mag = 0.5 * (ln_fact(big_j - 2 * a) + ln_fact(big_j - 2 * b) + ln_fact(big_j - 2 * c) - ln_fact(big_j + 1))
        + ln_fact(g)
        - ln_fact(g - a)
        - ln_fact(g - b)
        - ln_fact(g - c);
    // 3j symbol sign (-1)^g, CG = (-1)^(j1-j2) sqrt(2J+1) 3j
    let sign_exp = g + a - b;
    let sign = if sign_exp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign * ((2 * c + 1) as f64).sqrt() * log_mag.exp()
}

/// G^{jm}_{j'm',λμ} = √((2j'+1)(2λ+1)/(2j+1)) C^{jm}_{j'm',λμ} C^{j0}_{j'0,λ0}.
pub fn g_coefficient(j: i32, m: i32, jp: i32, mp: i32, lambda: i32, mu: i32) -> f64 {
    if j < 0 || jp < 0 || lambda < 0 {
        return 0.0;
    }
    let reduced = clebsch_gordan_m0(jp as u32, lambda as u32, j as u32);
    if reduced == 0.0 {
        return 0.0;
    }
    let norm = (((2 * jp + 1) * (2 * lambda + 1)) as f64 / (2 * j + 1) as f64).sqrt();
    norm * clebsch_gordan(jp, mp, lambda, mu, j, m) * reduced
}

pub type CgKey = (i32, i32, i32, i32, i32, i32);

/// Memo table of Clebsch–Gordan values keyed by (j1, m1, j2, m2, J, M).
///
/// Filled single-threaded, then frozen into a [`FrozenCgTable`] that can be
/// shared across worker threads.
#[derive(Debug, Default, Clone)]
pub struct CgTable {
    cache: HashMap<CgKey, f64>,
}

impl CgTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_insert(&mut self, key: CgKey) -> f64 {
        *self
            .cache
            .entry(key)
            .or_insert_with(|| clebsch_gordan(key.0, key.1, key.2, key.3, key.4, key.5))
    }

    /// Inserts every ⟨j1 0, j2 0 | J 0⟩ with j1, j2 ≤ `jmax` and J ≤ `lmax`.
    pub fn populate_m0(&mut self, jmax: u32, lmax: u32) {
        for j1 in 0..=jmax as i32 {
            for j2 in 0..=jmax as i32 {
                for big in 0..=lmax as i32 {
                    if triangle(j1 as i64, j2 as i64, big as i64) {
                        self.get_or_insert((j1, 0, j2, 0, big, 0));
                    }
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }

    pub fn freeze(self) -> FrozenCgTable {
        FrozenCgTable {
            cache: Arc::new(self.cache),
        }
    }
}

/// Read-only Clebsch–Gordan table. Lookups that miss the cache fall back to
/// direct evaluation.
#[derive(Debug, Clone, Default)]
pub struct FrozenCgTable {
    cache: Arc<HashMap<CgKey, f64>>,
}

impl FrozenCgTable {
    pub fn get(&self, j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
        match self.cache.get(&(j1, m1, j2, m2, j, m)) {
            Some(v) => *v,
            None => clebsch_gordan(j1, m1, j2, m2, j, m),
        }
    }

    pub fn get_m0(&self, j1: u32, j2: u32, j: u32) -> f64 {
        match self.cache.get(&(j1 as i32, 0, j2 as i32, 0, j as i32, 0)) {
            Some(v) => *v,
            None => clebsch_gordan_m0(j1, j2, j),
        }
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent Racah-formula oracle in f64 with plain factorials (small j only).
    fn racah_f64(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
        if m != m1 + m2 || !triangle(j1, j2, j) || m1.abs() > j1 || m2.abs() > j2 {
            return 0.0;
        }
        let f = |n: i64| -> f64 { (1..=n).map(|k| k as f64).product() };
        let pre = ((2 * j + 1) as f64 * f(j + j1 - j2) * f(j - j1 + j2) * f(j1 + j2 - j) / f(j1 + j2 + j + 1)
            * f(j + m)
            * f(j - m)
            * f(j1 - m1)
            * f(j1 + m1)
            * f(j2 - m2)
            * f(j2 + m2))
            .sqrt();
        let mut s = 0.0;
        for k in 0..=(j1 + j2 + j) {
            let args = [
                k,
                j1 + j2 - j - k,
                j1 - m1 - k,
                j2 + m2 - k,
                j - j2 + m1 + k,
                j - j1 - m2 + k,
            ];
            if args.iter().any(|&a| a < 0) {
                continue;
            }
            let d: f64 = args.iter().map(|&a| f(a)).product();
            s += if k % 2 == 0 { 1.0 } else { -1.0 } / d;
        }
        pre * s
    }

    #[test]
    fn examples() {
        assert_eq!(clebsch_gordan(0, 0, 0, 0, 0, 0), 1.0);
        assert!((clebsch_gordan(1, 0, 1, 0, 2, 0) - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(clebsch_gordan(1, 0, 2, 0, 2, 0), 0.0);
        assert_eq!(clebsch_gordan(1, 1, 1, 0, 2, 0), 0.0);
        assert_eq!(clebsch_gordan(1, 0, 1, 0, 3, 0), 0.0);
        // <1 1, 1 -1 | 1 0> = 1/sqrt(2)
        assert!((clebsch_gordan(1, 1, 1, -1, 1, 0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn general_matches_f64_oracle() {
        for j1 in 0..=5i64 {
            for j2 in 0..=5i64 {
                for j in (j1 - j2).abs()..=(j1 + j2) {
                    for m1 in -j1..=j1 {
                        for m2 in -j2..=j2 {
                            let m = m1 + m2;
                            let want = racah_f64(j1, m1, j2, m2, j, m);
                            let got = clebsch_gordan(j1 as i32, m1 as i32, j2 as i32, m2 as i32, j as i32, m as i32);
                            assert!((got - want).abs() < 1e-13, "({j1} {m1} {j2} {m2}|{j} {m}) {got} {want}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn m0_closed_form_matches_exact_racah() {
        for j1 in 0..=12u32 {
            for j2 in 0..=12u32 {
                for j in 0..=24u32 {
                    let fast = clebsch_gordan_m0(j1, j2, j);
                    let exact = exact_m0(j1 as i64, j2 as i64, j as i64);
                    assert!((fast - exact).abs() < 1e-13, "({j1} 0 {j2} 0|{j} 0): {fast} {exact}");
                }
            }
        }
    }

    fn exact_m0(j1: i64, j2: i64, j: i64) -> f64 {
        if !triangle(j1, j2, j) {
            return 0.0;
        }
        // bypass the m = 0 shortcut inside clebsch_gordan: use the f64 oracle
        racah_f64(j1, 0, j2, 0, j, 0)
    }

    #[test]
    fn m0_large_quantum_numbers_normalized() {
        // Σ_J |<j1 0, j2 0|J 0>|^2 = 1 by completeness over J at fixed m1 = m2 = 0
        for &(j1, j2) in &[(60u32, 45u32), (170, 160), (300, 2)] {
            let total: f64 = (0..=(j1 + j2)).map(|j| clebsch_gordan_m0(j1, j2, j).powi(2)).sum();
            assert!((total - 1.0).abs() < 1e-10, "{j1} {j2}: {total}");
        }
    }

    #[test]
    fn orthogonality() {
        for j1 in 0..=4i32 {
            for j2 in 0..=4i32 {
                for ja in (j1 - j2).abs()..=(j1 + j2) {
                    for jb in (j1 - j2).abs()..=(j1 + j2) {
                        for ma in -ja..=ja {
                            for mb in -jb..=jb {
                                let mut s = 0.0;
                                for m1 in -j1..=j1 {
                                    for m2 in -j2..=j2 {
                                        s += clebsch_gordan(j1, m1, j2, m2, ja, ma)
                                            * clebsch_gordan(j1, m1, j2, m2, jb, mb);
                                    }
                                }
                                let want = if ja == jb && ma == mb { 1.0 } else { 0.0 };
                                assert!((s - want).abs() < 1e-12);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn g_coefficient_cases() {
        assert!((g_coefficient(0, 0, 0, 0, 0, 0) - 1.0).abs() < 1e-15);
        assert_eq!(g_coefficient(2, 0, 1, 0, 2, 0), 0.0);
        assert_eq!(g_coefficient(3, 1, 2, 0, 2, 1), 0.0);
        // sqrt(1*5/5) * <0 0, 2 0|2 0> * <0 0, 2 0|2 0> = 1
        assert!((g_coefficient(2, 0, 0, 0, 2, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn g_symmetry_squared() {
        for j in 0..=6i32 {
            for jp in 0..=6i32 {
                for lambda in 0..=6i32 {
                    for m in -j..=j {
                        for mp in -jp..=jp {
                            for mu in -lambda..=lambda {
                                let a = g_coefficient(j, m, jp, mp, lambda, mu).powi(2);
                                let b = g_coefficient(jp, mp, j, m, lambda, -mu).powi(2);
                                assert!((a - b).abs() < 1e-12, "{j} {m} {jp} {mp} {lambda} {mu}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn table_roundtrip() {
        let mut t = CgTable::new();
        t.populate_m0(4, 8);
        assert!(!t.is_empty());
        let v = t.get_or_insert((1, 1, 1, -1, 1, 0));
        let frozen = t.freeze();
        assert_eq!(frozen.get(1, 1, 1, -1, 1, 0), v);
        assert_eq!(frozen.get_m0(2, 2, 4), clebsch_gordan_m0(2, 2, 4));
        assert_eq!(frozen.get_m0(30, 30, 60), clebsch_gordan_m0(30, 30, 60));
    }
}
