//! Spherical Bessel functions of the first kind for integer order.
//!
//! Small arguments use the ascending power series. Otherwise the whole
//! sequence j_0..j_n is generated by Miller's downward recurrence and
//! normalized against the closed forms of j_0 or j_1, whichever is larger in
//! magnitude at x.

/// Below this argument (or below √n) the ascending series is used.
const SERIES_X: f64 = 2.0;
const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// j_n(x) for n ≥ 0, x ≥ 0.
pub fn spherical_bessel(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if use_series(n, x) {
        return series(n, x);
    }
    match n {
        0 => j0(x),
        1 => j1(x),
        2 => (3.0 / (x * x) - 1.0) * x.sin() / x - 3.0 * x.cos() / (x * x),
        _ => spherical_bessel_seq(n, x)[n as usize],
    }
}

/// The sequence j_0(x), ..., j_nmax(x).
pub fn spherical_bessel_seq(nmax: u32, x: f64) -> Vec<f64> {
    let len = nmax as usize + 1;
    if x == 0.0 {
        let mut out = vec![0.0; len];
        out[0] = 1.0;
        return out;
    }
    if x < SERIES_X {
        return (0..=nmax).map(|n| series(n, x)).collect();
    }
    let mut out = miller(nmax, x);
    // the series is more accurate where the recurrence normalization is weak
    for (n, v) in out.iter_mut().enumerate() {
        if use_series(n as u32, x) {
            *v = series(n as u32, x);
        }
    }
    out
}

fn use_series(n: u32, x: f64) -> bool {
    x < SERIES_X || x * x < 0.5 * f64::from(n)
}

fn j0(x: f64) -> f64 {
    x.sin() / x
}

fn j1(x: f64) -> f64 {
    (x.sin() / x - x.cos()) / x
}

/// x^n/(2n+1)!! Σ_k (-x²/2)^k / (k! (2n+3)(2n+5)...(2n+2k+1)).
fn series(n: u32, x: f64) -> f64 {
    let nf = f64::from(n);
    // leading factor in logs to survive large n
    let mut log_lead = nf * x.ln();
    for k in 1..=n {
        log_lead -= (2.0 * f64::from(k) + 1.0).ln();
    }
    let lead = log_lead.exp();
    if lead == 0.0 {
        return 0.0;
    }
    let y = -0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        let kf = f64::from(k);
        term *= y / (kf * (2.0 * nf + 2.0 * kf + 1.0));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn start_order(nmax: u32, x: f64) -> usize {
    let top = f64::from(nmax).max(x);
    (top + 20.0 + (40.0 * top).sqrt()).ceil() as usize
}

fn miller(nmax: u32, x: f64) -> Vec<f64> {
    let len = nmax as usize + 1;
    let start = start_order(nmax, x).max(len + 1);
    let mut out = vec![0.0; len.max(2)];
    let mut upper = 0.0; // f_{k+1}
    let mut current = 1e-300; // f_k
    for k in (1..=start).rev() {
        if k < out.len() {
            out[k] = current;
        }
        let lower = (2.0 * k as f64 + 1.0) / x * current - upper;
        upper = current;
        current = lower;
        if current.abs() > RESCALE_ABOVE {
            current *= RESCALE_BY;
            upper *= RESCALE_BY;
            for v in out.iter_mut().skip(k) {
                *v *= RESCALE_BY;
            }
        }
    }
    out[0] = current;
    let exact0 = j0(x);
    let exact1 = j1(x);
    let scale = if exact0.abs() >= exact1.abs() {
        exact0 / out[0]
    } else {
        exact1 / out[1]
    };
    out.truncate(len);
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}
