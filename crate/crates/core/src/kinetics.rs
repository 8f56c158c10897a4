//! j-resolved rate equation dp_j/dt = Σ_{j'} (Γ_{j'→j} p_{j'} − Γ_{j→j'} p_j):
//! generator assembly, propagation, stationary states and trajectory summaries.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::quadrature::EtaQuadrature;
use crate::rates_single::{single_phonon_matrices, Channel, ChannelRateMatrix};
use crate::rates_two::two_phonon_matrix;

/// Drift of Σ p_j tolerated over a whole trajectory.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Negative populations above this are treated as roundoff and clipped.
pub const CLIP_TOLERANCE: f64 = 1e-12;
/// Mass in the two highest levels that flags a too-small jmax.
pub const LEAK_THRESHOLD: f64 = 1e-6;
/// Singular values below this fraction of the largest count as null.
const NULL_SPACE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationVector {
    pub p: Vec<f64>,
    pub time: f64,
}

impl PopulationVector {
    pub fn delta(jmax: u32, j: u32) -> Result<Self> {
        if j > jmax {
            return Err(Error::Config(format!("initial level {j} exceeds jmax = {jmax}")));
        }
        let mut p = vec![0.0; jmax as usize + 1];
        p[j as usize] = 1.0;
        Ok(Self { p, time: 0.0 })
    }

    /// Normalizes nonnegative weights to unit total.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config("initial weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Config("initial weights sum to zero".into()));
        }
        Ok(Self {
            p: weights.iter().map(|w| w / total).collect(),
            time: 0.0,
        })
    }

    pub fn jmax(&self) -> u32 {
        self.p.len() as u32 - 1
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn mean_j(&self) -> f64 {
        self.p.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }

    pub fn mean_jj1(&self) -> f64 {
        self.p.iter().enumerate().map(|(j, p)| (j * (j + 1)) as f64 * p).sum()
    }

    /// Σ_{j < `j_bound`} p_j.
    pub fn mass_below(&self, j_bound: u32) -> f64 {
        self.p.iter().take(j_bound as usize).sum()
    }

    pub fn mass_between(&self, lo: u32, hi: u32) -> f64 {
        self.p
            .iter()
            .enumerate()
            .filter(|(j, _)| *j as u32 >= lo && *j as u32 <= hi)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn parity_mass(&self, parity: u32) -> f64 {
        self.p.iter().skip(parity as usize % 2).step_by(2).sum()
    }

    pub fn entropy(&self) -> f64 {
        -self.p.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    /// Kullback–Leibler divergence Σ p ln(p/q), skipping levels where both vanish.
    pub fn relative_entropy(&self, reference: &PopulationVector) -> f64 {
        self.p
            .iter()
            .zip(&reference.p)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, q)| if *q > 0.0 { p * (p / q).ln() } else { f64::INFINITY })
            .sum()
    }
}

/// Column-stochastic rate generator, M[j', j] = Γ_{j→j'} and M[j, j] = −Γ_j.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub matrix: DMatrix<f64>,
    pub channels: BTreeSet<Channel>,
}

impl Generator {
    pub fn zeros(jmax: u32) -> Self {
        let n = jmax as usize + 1;
        Self {
            matrix: DMatrix::zeros(n, n),
            channels: BTreeSet::new(),
        }
    }

    /// Sums the given channel matrices, which must all share the same jmax.
    pub fn from_rates<'a, I>(jmax: u32, rates: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a ChannelRateMatrix>,
    {
        let mut g = Self::zeros(jmax);
        for r in rates {
            if r.jmax != jmax {
                return Err(Error::Config(format!(
                    "channel {} built for jmax {} instead of {jmax}",
                    r.channel, r.jmax
                )));
            }
            for j in 0..=jmax {
                for jp in (0..=jmax).filter(|&jp| jp != j) {
                    g.matrix[(jp as usize, j as usize)] += r.get(j, jp);
                }
            }
            g.channels.insert(r.channel);
        }
        let n = g.dim();
        for j in 0..n {
            g.matrix[(j, j)] = 0.0;
            let out: f64 = g.matrix.column(j).iter().sum();
            g.matrix[(j, j)] = -out;
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn jmax(&self) -> u32 {
        self.dim() as u32 - 1
    }

    /// Largest |Σ_j' M[j', j]| relative to the column's decay rate.
    pub fn column_sum_residual(&self) -> f64 {
        (0..self.dim())
            .map(|j| {
                let col = self.matrix.column(j);
                let scale = self.matrix[(j, j)].abs();
                if scale == 0.0 {
                    col.iter().map(|x| x.abs()).sum()
                } else {
                    col.iter().sum::<f64>().abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn off_diagonals_nonnegative(&self) -> bool {
        let n = self.dim();
        (0..n).all(|r| (0..n).all(|c| r == c || self.matrix[(r, c)] >= 0.0))
    }

    pub fn preserves_parity(&self) -> bool {
        let n = self.dim();
        (0..n).all(|r| (0..n).all(|c| (r + c) % 2 == 0 || self.matrix[(r, c)] == 0.0))
    }

    /// Decay rate Γ_j = −M[j, j].
    pub fn out_rate(&self, j: u32) -> f64 {
        -self.matrix[(j as usize, j as usize)]
    }

    pub fn apply(&self, p: &PopulationVector) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(&p.p)).as_slice().to_vec()
    }
}

/// Memoized channel matrices keyed by the parameter fingerprint, jmax and
/// quadrature settings.
#[derive(Debug, Default)]
pub struct RateCache {
    entries: HashMap<CacheKey, ChannelRateMatrix>,
}

type CacheKey = ([u64; 5], u32, Channel, [u64; 3], usize);

impl RateCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get_or_compute(
        &mut self,
        p: &SystemParams,
        jmax: u32,
        channel: Channel,
        q: &EtaQuadrature,
    ) -> Result<&ChannelRateMatrix> {
        let key = cache_key(p, jmax, channel, q);
        if !self.entries.contains_key(&key) {
            match channel {
                Channel::OnePhononSpontaneous | Channel::OnePhononThermal => {
                    let (sp, th) = single_phonon_matrices(p, jmax)?;
                    self.entries.insert(cache_key(p, jmax, Channel::OnePhononSpontaneous, q), sp);
                    self.entries.insert(cache_key(p, jmax, Channel::OnePhononThermal, q), th);
                }
                _ => {
                    let m = two_phonon_matrix(p, jmax, channel, q)?;
                    self.entries.insert(key, m);
                }
            }
        }
        Ok(&self.entries[&key])
    }
}

fn cache_key(p: &SystemParams, jmax: u32, channel: Channel, q: &EtaQuadrature) -> CacheKey {
    // single-phonon rates do not depend on the quadrature
    let qk = if channel.is_two_phonon() {
        [
            q.rel_tol.to_bits(),
            q.abs_tol.to_bits(),
            q.eta_max.map_or(u64::MAX, f64::to_bits),
        ]
    } else {
        [0; 3]
    };
    let intervals = if channel.is_two_phonon() { q.max_intervals } else { 0 };
    (p.fingerprint(), jmax, channel, qk, intervals)
}

pub fn assemble_generator(p: &SystemParams, jmax: u32, channels: &[Channel], q: &EtaQuadrature) -> Result<Generator> {
    assemble_generator_cached(&mut RateCache::new(), p, jmax, channels, q)
}

pub fn assemble_generator_cached(
    cache: &mut RateCache,
    p: &SystemParams,
    jmax: u32,
    channels: &[Channel],
    q: &EtaQuadrature,
) -> Result<Generator> {
    if jmax < 1 {
        return Err(Error::Config("jmax must be at least 1".into()));
    }
    p.validate()?;
    let set: BTreeSet<Channel> = channels.iter().copied().collect();
    let mut mats = Vec::with_capacity(set.len());
    for &c in &set {
        mats.push(cache.get_or_compute(p, jmax, c, q)?.clone());
    }
    Generator::from_rates(jmax, &mats)
}

/// Populations sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<PopulationVector>,
    /// Largest mass seen in the two highest levels.
    pub max_top_mass: f64,
    /// Largest |Σ p − 1| before renormalization.
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn truncation_leak(&self) -> bool {
        self.max_top_mass > LEAK_THRESHOLD
    }

    pub fn last(&self) -> &PopulationVector {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Propagates p0 with the exact propagator exp(G Δt) between consecutive grid
/// points. The grid must be nondecreasing and start at or after p0.time.
pub fn evolve(p0: &PopulationVector, g: &Generator, t_grid: &[f64]) -> Result<Trajectory> {
    if p0.p.len() != g.dim() {
        return Err(Error::Config(format!(
            "population has {} levels but generator has {}",
            p0.p.len(),
            g.dim()
        )));
    }
    if (p0.total() - 1.0).abs() > NORM_TOLERANCE || p0.p.iter().any(|&x| x < -CLIP_TOLERANCE) {
        return Err(Error::Config("initial populations must be normalized and nonnegative".into()));
    }
    let mut t_prev = p0.time;
    for &t in t_grid {
        if !t.is_finite() || t < t_prev {
            return Err(Error::Config("time grid must be finite and nondecreasing".into()));
        }
        t_prev = t;
    }

    let n = g.dim();
    let mut current = DVector::from_column_slice(&p0.p);
    let mut time = p0.time;
    let mut states = Vec::with_capacity(t_grid.len());
    let mut max_top_mass: f64 = top_mass(current.as_slice());
    let mut max_norm_drift: f64 = 0.0;
    for &t in t_grid {
        let dt = t - time;
        if dt > 0.0 {
            let propagator = (&g.matrix * dt).exp();
            let mut next = &propagator * &current;
            let total: f64 = next.iter().sum();
            let drift = (total - 1.0).abs();
            if !total.is_finite() || drift > NORM_TOLERANCE {
                return Err(Error::StiffnessFailure(format!(
                    "probability drifted by {drift:e} over step [{time}, {t}]"
                )));
            }
            max_norm_drift = max_norm_drift.max(drift);
            for x in next.iter_mut() {
                if *x < 0.0 {
                    if *x < -CLIP_TOLERANCE {
                        return Err(Error::StiffnessFailure(format!(
                            "negative population {x:e} at t = {t}"
                        )));
                    }
                    *x = 0.0;
                }
            }
            let total: f64 = next.iter().sum();
            next /= total;
            current = next;
            time = t;
        }
        max_top_mass = max_top_mass.max(top_mass(current.as_slice()));
        states.push(PopulationVector {
            p: current.as_slice().to_vec(),
            time: t,
        });
    }
    debug_assert_eq!(current.len(), n);
    Ok(Trajectory {
        states,
        max_top_mass,
        max_norm_drift,
    })
}

fn top_mass(p: &[f64]) -> f64 {
    p.iter().rev().take(2).sum()
}

/// Stationary state (stamped at t = 0) of `g` within the parity sector that holds the seed's
/// mass (the whole chain when the seed straddles both sectors).
pub fn steady_state(g: &Generator, seed: &PopulationVector) -> Result<PopulationVector> {
    let n = g.dim();
    if seed.p.len() != n {
        return Err(Error::Config("seed and generator sizes differ".into()));
    }
    let (even, odd) = (seed.parity_mass(0), seed.parity_mass(1));
    let levels: Vec<usize> = if odd == 0.0 {
        (0..n).step_by(2).collect()
    } else if even == 0.0 {
        (1..n).step_by(2).collect()
    } else {
        (0..n).collect()
    };
    let m = levels.len();
    let sub = DMatrix::from_fn(m, m, |r, c| g.matrix[(levels[r], levels[c])]);
    let svd = sub.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let threshold = if sigma_max > 0.0 { NULL_SPACE_RTOL * sigma_max } else { f64::INFINITY };
    let null: Vec<usize> = (0..m).filter(|&i| svd.singular_values[i] <= threshold).collect();
    if null.len() != 1 {
        return Err(Error::NonUniqueSteadyState { dimension: null.len() });
    }
    let row = v_t.row(null[0]);
    let total: f64 = row.iter().sum();
    let mut p = vec![0.0; n];
    for (k, &level) in levels.iter().enumerate() {
        p[level] = (row[k] / total).max(0.0);
    }
    let norm: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= norm);
    Ok(PopulationVector { p, time: 0.0 })
}

/// Null-space dimension of the generator restricted to levels of one parity.
pub fn null_space_dimension(g: &Generator, parity: u32) -> usize {
    let levels: Vec<usize> = (parity as usize % 2..g.dim()).step_by(2).collect();
    let m = levels.len();
    let sub = DMatrix::from_fn(m, m, |r, c| g.matrix[(levels[r], levels[c])]);
    let sv = sub.singular_values();
    let sigma_max = sv.max();
    if sigma_max == 0.0 {
        return m;
    }
    sv.iter().filter(|&&s| s <= NULL_SPACE_RTOL * sigma_max).count()
}

/// Per-time summary of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub mean_j: f64,
    pub mean_jj1: f64,
    pub mass_below_jc1: f64,
    pub even_mass: f64,
    pub odd_mass: f64,
    pub entropy: f64,
    pub norm: f64,
}

/// Summaries for every state; the "below" mass counts levels j < `jc1_floor`.
pub fn diagnostics(traj: &[PopulationVector], jc1_floor: u32) -> Vec<Diagnostics> {
    traj.iter()
        .map(|s| Diagnostics {
            t: s.time,
            mean_j: s.mean_j(),
            mean_jj1: s.mean_jj1(),
            mass_below_jc1: s.mass_below(jc1_floor),
            even_mass: s.parity_mass(0),
            odd_mass: s.parity_mass(1),
            entropy: s.entropy(),
            norm: s.total(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// Output times. With log spacing and t_start = 0 the grid is 0 followed by
/// `points − 1` geometric points from t_end·1e-6 to t_end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_start >= 0.0 && self.t_end > self.t_start && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "time grid needs t_end > t_start >= 0, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.points < 2 {
            return Err(Error::Config("time grid needs at least two points".into()));
        }
        Ok(())
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.points;
        Ok(match self.spacing {
            Spacing::Linear => (0..n)
                .map(|i| self.t_start + (self.t_end - self.t_start) * i as f64 / (n - 1) as f64)
                .collect(),
            Spacing::Log => {
                let (mut out, lo, count) = if self.t_start == 0.0 {
                    (vec![0.0], self.t_end * 1e-6, n - 1)
                } else {
                    (Vec::new(), self.t_start, n)
                };
                let (a, b) = (lo.ln(), self.t_end.ln());
                for i in 0..count {
                    let f = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
                    out.push((a + (b - a) * f).exp());
                }
                if let Some(last) = out.last_mut() {
                    *last = self.t_end;
                }
                out
            }
        })
    }
}
