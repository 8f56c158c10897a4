//! Run configuration: flat `key = value` files, JSON sidecars, and overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{PopulationVector, Spacing, TimeGrid};
use crate::params::SystemParams;
use crate::quadrature::EtaQuadrature;
use crate::rates_single::Channel;

/// Levels kept above the highest initially occupied one when jmax is not set.
pub const JMAX_BUFFER: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    Delta(u32),
    Weights(Vec<f64>),
}

impl InitialState {
    pub fn top_level(&self) -> u32 {
        match self {
            InitialState::Delta(j) => *j,
            InitialState::Weights(w) => w.iter().rposition(|&x| x > 0.0).unwrap_or(0) as u32,
        }
    }

    pub fn populations(&self, jmax: u32) -> Result<PopulationVector> {
        match self {
            InitialState::Delta(j) => PopulationVector::delta(jmax, *j),
            InitialState::Weights(w) => {
                if w.len() > jmax as usize + 1 && w[jmax as usize + 1..].iter().any(|&x| x != 0.0) {
                    return Err(Error::Config(format!("initial weights occupy levels above jmax = {jmax}")));
                }
                let mut padded = w.clone();
                padded.resize(jmax as usize + 1, 0.0);
                PopulationVector::from_weights(&padded)
            }
        }
    }
}

impl FromStr for InitialState {
    type Err = Error;

    /// Accepts `delta:<j>` or `weights:<w0>,<w1>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("initial_state '{s}' is not delta:<j> or weights:<list>")))?;
        match kind.trim() {
            "delta" => Ok(InitialState::Delta(parse_value("initial_state", rest)?)),
            "weights" => Ok(InitialState::Weights(parse_list("initial_state", rest)?)),
            other => Err(Error::Config(format!("unknown initial_state kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for InitialState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialState::Delta(j) => write!(f, "delta:{j}"),
            InitialState::Weights(w) => write!(f, "weights:{}", join(w)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub r0_over_xi: f64,
    pub mI_over_mB: f64,
    pub T_over_Tc: f64,
    pub n0_xi3: f64,
    pub gIB_over_g: f64,
    pub jmax: Option<u32>,
    pub initial_state: InitialState,
    pub channels: Vec<Channel>,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub eta_max: Option<f64>,
    pub max_intervals: usize,
    pub scan_T_over_Tc: Vec<f64>,
    pub scan_n0_xi3: Vec<f64>,
    pub k_max: f64,
    pub k_points: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = SystemParams::default();
        let q = EtaQuadrature::default();
        Self {
            r0_over_xi: p.r0_over_xi,
            mI_over_mB: p.mI_over_mB,
            T_over_Tc: p.T_over_Tc,
            n0_xi3: p.n0_xi3,
            gIB_over_g: p.gIB_over_g,
            jmax: None,
            initial_state: InitialState::Delta(24),
            channels: vec![Channel::OnePhononSpontaneous, Channel::OnePhononThermal],
            t_start: 0.0,
            t_end: 1e6,
            points: 101,
            spacing: Spacing::Log,
            rel_tol: q.rel_tol,
            abs_tol: q.abs_tol,
            eta_max: q.eta_max,
            max_intervals: q.max_intervals,
            scan_T_over_Tc: vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
            scan_n0_xi3: vec![1e2, 1e3, 1e4],
            k_max: 10.0,
            k_points: 101,
            out_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    /// Reads either a flat key-value file or a JSON sidecar written by a previous run.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            Self::from_sidecar(&text)
        } else {
            Self::parse(&text)
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_sidecar(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Sidecar {
            config: RunConfig,
        }
        serde_json::from_str::<Sidecar>(text)
            .map(|s| s.config)
            .map_err(|e| Error::Config(format!("bad metadata file: {e}")))
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "r0_over_xi" => self.r0_over_xi = parse_value(key, value)?,
            "mI_over_mB" => self.mI_over_mB = parse_value(key, value)?,
            "T_over_Tc" => self.T_over_Tc = parse_value(key, value)?,
            "n0_xi3" => self.n0_xi3 = parse_value(key, value)?,
            "gIB_over_g" => self.gIB_over_g = parse_value(key, value)?,
            "jmax" => self.jmax = parse_optional(key, value)?,
            "initial_state" => self.initial_state = value.parse()?,
            "channels" => self.channels = parse_channels(value)?,
            "t_start" => self.t_start = parse_value(key, value)?,
            "t_end" => self.t_end = parse_value(key, value)?,
            "points" => self.points = parse_value(key, value)?,
            "spacing" => {
                self.spacing = match value {
                    "linear" => Spacing::Linear,
                    "log" => Spacing::Log,
                    other => return Err(Error::Config(format!("spacing must be linear or log, got '{other}'"))),
                }
            }
            "rel_tol" => self.rel_tol = parse_value(key, value)?,
            "abs_tol" => self.abs_tol = parse_value(key, value)?,
            "eta_max" => self.eta_max = parse_optional(key, value)?,
            "max_intervals" => self.max_intervals = parse_value(key, value)?,
            "scan_T_over_Tc" => self.scan_T_over_Tc = parse_list(key, value)?,
            "scan_n0_xi3" => self.scan_n0_xi3 = parse_list(key, value)?,
            "k_max" => self.k_max = parse_value(key, value)?,
            "k_points" => self.k_points = parse_value(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn params(&self) -> SystemParams {
        SystemParams::new(self.r0_over_xi, self.mI_over_mB, self.T_over_Tc, self.n0_xi3, self.gIB_over_g)
    }

    pub fn quadrature(&self) -> EtaQuadrature {
        EtaQuadrature {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            eta_max: self.eta_max,
            max_intervals: self.max_intervals,
        }
    }

    pub fn time_grid(&self) -> TimeGrid {
        TimeGrid {
            t_start: self.t_start,
            t_end: self.t_end,
            points: self.points,
            spacing: self.spacing,
        }
    }

    pub fn resolved_jmax(&self) -> u32 {
        self.jmax.unwrap_or(self.initial_state.top_level() + JMAX_BUFFER).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        self.time_grid().validate()?;
        if !(self.rel_tol > 0.0 && self.abs_tol >= 0.0) || self.max_intervals == 0 {
            return Err(Error::Config("quadrature tolerances must be positive".into()));
        }
        if self.k_points < 2 || !(self.k_max > 0.0) {
            return Err(Error::Config("dispersion grid needs k_max > 0 and k_points >= 2".into()));
        }
        Ok(())
    }

    /// Flat key-value form; parsing it back gives the same config.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<String>| v.unwrap_or_default();
        let spacing = match self.spacing {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        };
        let channels: Vec<&str> = self.channels.iter().map(|c| c.tag()).collect();
        let lines = [
            ("r0_over_xi", fmt_real(self.r0_over_xi)),
            ("mI_over_mB", fmt_real(self.mI_over_mB)),
            ("T_over_Tc", fmt_real(self.T_over_Tc)),
            ("n0_xi3", fmt_real(self.n0_xi3)),
            ("gIB_over_g", fmt_real(self.gIB_over_g)),
            ("jmax", opt(self.jmax.map(|j| j.to_string()))),
            ("initial_state", self.initial_state.to_string()),
            ("channels", channels.join(",")),
            ("t_start", fmt_real(self.t_start)),
            ("t_end", fmt_real(self.t_end)),
            ("points", self.points.to_string()),
            ("spacing", spacing.to_string()),
            ("rel_tol", fmt_real(self.rel_tol)),
            ("abs_tol", fmt_real(self.abs_tol)),
            ("eta_max", opt(self.eta_max.map(fmt_real))),
            ("max_intervals", self.max_intervals.to_string()),
            ("scan_T_over_Tc", join(&self.scan_T_over_Tc)),
            ("scan_n0_xi3", join(&self.scan_n0_xi3)),
            ("k_max", fmt_real(self.k_max)),
            ("k_points", self.k_points.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
        ];
        for (k, v) in lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

fn join(values: &[f64]) -> String {
    values.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(",")
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse '{value}' for {key}")))
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "" | "none" | "auto" => Ok(None),
        v => parse_value(key, v).map(Some),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// Comma-separated channel tags; `all` selects every channel and an empty
/// list selects none.
pub fn parse_channels(value: &str) -> Result<Vec<Channel>> {
    let value = value.trim();
    if value == "all" {
        return Ok(Channel::ALL.to_vec());
    }
    if value.is_empty() || value == "none" {
        return Ok(Vec::new());
    }
    let mut out: Vec<Channel> = value.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let cfg = RunConfig::parse(
            "# Fig. 4 set\nr0_over_xi = 10\nmI_over_mB = 1.25 ; comment\nT_over_Tc=0.01\n\njmax = 40\nchannels = 1ph-sp, 2ph-x\ninitial_state = delta:24\nspacing = linear\n",
        )
        .unwrap();
        assert_eq!(cfg.r0_over_xi, 10.0);
        assert_eq!(cfg.mI_over_mB, 1.25);
        assert_eq!(cfg.jmax, Some(40));
        assert_eq!(cfg.channels, vec![Channel::OnePhononSpontaneous, Channel::TwoPhononCross]);
        assert_eq!(cfg.spacing, Spacing::Linear);
        assert_eq!(cfg.n0_xi3, 100.0);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(RunConfig::parse("r0_over_xi 10").is_err());
        assert!(RunConfig::parse("radius = 10").is_err());
        assert!(RunConfig::parse("jmax = -3").is_err());
        assert!(RunConfig::parse("channels = 3ph").is_err());
        assert!(RunConfig::parse("initial_state = gauss:3").is_err());
    }

    #[test]
    fn ini_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("T_over_Tc=0.1234567890123").unwrap();
        cfg.apply_override("initial_state=weights:0,1,0,2.5").unwrap();
        cfg.apply_override("eta_max=40").unwrap();
        cfg.apply_override("channels=all").unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_ini()).unwrap(), cfg);
        assert_eq!(RunConfig::parse(&RunConfig::default().to_ini()).unwrap(), RunConfig::default());
    }

    #[test]
    fn jmax_defaults_to_buffer_above_initial_state() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.resolved_jmax(), 32);
        cfg.initial_state = "weights:1,0,1,0,0".parse().unwrap();
        assert_eq!(cfg.resolved_jmax(), 10);
        let p = cfg.initial_state.populations(10).unwrap();
        assert_eq!(p.p[2], 0.5);
        assert!(cfg.initial_state.populations(1).is_err());
    }

    #[test]
    fn channel_lists() {
        assert_eq!(parse_channels("all").unwrap().len(), 4);
        assert!(parse_channels("").unwrap().is_empty());
        assert_eq!(parse_channels("1ph-T,1ph-T").unwrap(), vec![Channel::OnePhononThermal]);
    }
}
