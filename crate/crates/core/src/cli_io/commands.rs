//! Subcommand implementations. Each writes its tables into `cfg.out_dir`.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::RunConfig;
use super::output::{fmt_f64, no_extra, write_table, Table};
use crate::condensate::{dispersion, dk_domega, free_energy, group_velocity, inverse_dispersion, w_factor};
use crate::error::Result;
use crate::kinetics::{assemble_generator_cached, diagnostics, evolve, RateCache, LEAK_THRESHOLD};
use crate::params::{critical_j, derive_constants, thermal_angular_momentum};
use crate::rates_two::thermal_2ph_ratio;

pub fn cmd_rates(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let p = cfg.params();
    let q = cfg.quadrature();
    let jmax = cfg.resolved_jmax();
    let mut cache = RateCache::new();
    let mut written = Vec::new();
    for &channel in &cfg.channels {
        let m = cache.get_or_compute(&p, jmax, channel, &q)?;
        let mut t = Table::new(format!("rates_{}.csv", channel.tag()), &["j", "j_prime", "rate"]);
        for j in 0..=jmax {
            for jp in 0..=jmax {
                t.push(vec![j.to_string(), jp.to_string(), fmt_f64(m.get(j, jp))]);
            }
        }
        let extra = json!({ "channel": channel.tag(), "jmax": jmax });
        written.push(write_table(cfg, "rates", &t, Vec::new(), extra)?);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalReport {
    pub j_c: f64,
    pub j_c_floor: u32,
    pub j_c1: f64,
    pub j_c1_floor: u32,
    pub j_T: f64,
    pub j_T_floor: u32,
    pub B_rot: f64,
    pub T_c: f64,
    pub T: f64,
}

impl CriticalReport {
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("j_c", self.j_c),
            ("j_c_floor", f64::from(self.j_c_floor)),
            ("j_c1", self.j_c1),
            ("j_c1_floor", f64::from(self.j_c1_floor)),
            ("j_T", self.j_T),
            ("j_T_floor", f64::from(self.j_T_floor)),
            ("B_rot", self.B_rot),
            ("T_c", self.T_c),
            ("T", self.T),
        ]
    }
}

pub fn critical_report(cfg: &RunConfig) -> Result<CriticalReport> {
    let p = cfg.params();
    let c = critical_j(&p)?;
    let d = derive_constants(&p)?;
    let j_t = thermal_angular_momentum(&p)?;
    Ok(CriticalReport {
        j_c: c.j_c,
        j_c_floor: c.j_c_floor(),
        j_c1: c.j_c1,
        j_c1_floor: c.j_c1_floor(),
        j_T: j_t,
        j_T_floor: j_t.floor() as u32,
        B_rot: d.B_rot,
        T_c: d.T_c,
        T: d.T,
    })
}

pub fn cmd_critical(cfg: &RunConfig) -> Result<(CriticalReport, PathBuf)> {
    let report = critical_report(cfg)?;
    let mut t = Table::new("critical.csv", &["quantity", "value"]);
    for (name, value) in report.entries() {
        t.push(vec![name.to_string(), fmt_f64(value)]);
    }
    let path = write_table(cfg, "critical", &t, Vec::new(), no_extra())?;
    Ok((report, path))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveSummary {
    pub final_time: f64,
    pub final_populations: Vec<f64>,
    pub mean_j: f64,
    pub truncation_leak: bool,
    pub files: Vec<PathBuf>,
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<EvolveSummary> {
    cfg.validate()?;
    let p = cfg.params();
    let jmax = cfg.resolved_jmax();
    let g = assemble_generator_cached(&mut RateCache::new(), &p, jmax, &cfg.channels, &cfg.quadrature())?;
    let p0 = cfg.initial_state.populations(jmax)?;
    let times = cfg.time_grid().times()?;
    let traj = evolve(&p0, &g, &times)?;
    let jc1 = critical_j(&p)?.j_c1_floor();

    let mut warnings = Vec::new();
    if traj.truncation_leak() {
        warnings.push(format!(
            "truncation leak: up to {:.3e} of the probability reached levels {} and {} (threshold {LEAK_THRESHOLD:e}); increase jmax",
            traj.max_top_mass,
            jmax - 1,
            jmax
        ));
    }
    let extra = json!({
        "jmax": jmax,
        "j_c1_floor": jc1,
        "max_top_mass": traj.max_top_mass,
        "max_norm_drift": traj.max_norm_drift,
    });

    let mut t = Table::new("trajectory.csv", &["t", "j", "p"]);
    for s in &traj.states {
        for (j, x) in s.p.iter().enumerate() {
            t.push(vec![fmt_f64(s.time), j.to_string(), fmt_f64(*x)]);
        }
    }
    let mut d = Table::new(
        "diagnostics.csv",
        &["t", "mean_j", "mean_jj1", "mass_below_jc1", "even_mass", "odd_mass", "entropy", "norm"],
    );
    for r in diagnostics(&traj.states, jc1) {
        d.push(
            [r.t, r.mean_j, r.mean_jj1, r.mass_below_jc1, r.even_mass, r.odd_mass, r.entropy, r.norm]
                .iter()
                .map(|x| fmt_f64(*x))
                .collect(),
        );
    }
    let files = vec![
        write_table(cfg, "evolve", &t, warnings.clone(), extra.clone())?,
        write_table(cfg, "evolve", &d, warnings, extra)?,
    ];
    let last = traj.last();
    Ok(EvolveSummary {
        final_time: last.time,
        final_populations: last.p.clone(),
        mean_j: last.mean_j(),
        truncation_leak: traj.truncation_leak(),
        files,
    })
}

pub fn cmd_scan_ratio(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let q = cfg.quadrature();
    let grid: Vec<(f64, f64)> = cfg
        .scan_T_over_Tc
        .iter()
        .flat_map(|&t| cfg.scan_n0_xi3.iter().map(move |&n| (t, n)))
        .collect();
    let base = cfg.params();
    let ratios: Vec<f64> = grid
        .par_iter()
        .map(|&(t, n)| thermal_2ph_ratio(&base.with_temperature(t).with_density(n), &q))
        .collect::<Result<_>>()?;
    let mut table = Table::new("ratio.csv", &["T_over_Tc", "n0_xi3", "ratio", "universal"]);
    for (&(t, n), r) in grid.iter().zip(ratios) {
        table.push(vec![fmt_f64(t), fmt_f64(n), fmt_f64(r), fmt_f64(t.powf(1.5))]);
    }
    write_table(cfg, "scan-ratio", &table, Vec::new(), no_extra())
}

pub fn cmd_dispersion(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let mut t = Table::new(
        "dispersion.csv",
        &["k", "omega", "k_roundtrip", "w_k", "dk_domega", "group_velocity", "free_energy"],
    );
    let n = cfg.k_points;
    for i in 0..n {
        let k = cfg.k_max * i as f64 / (n - 1) as f64;
        let omega = dispersion(k);
        let w = if k > 0.0 { w_factor(k)? } else { 0.0 };
        t.push(
            [k, omega, inverse_dispersion(omega), w, dk_domega(omega)?, group_velocity(k), free_energy(k)]
                .iter()
                .map(|x| fmt_f64(*x))
                .collect(),
        );
    }
    write_table(cfg, "dispersion", &t, Vec::new(), no_extra())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates_single::Channel;

    fn config(dir: &std::path::Path, lines: &str) -> RunConfig {
        let mut cfg = RunConfig::parse(lines).unwrap();
        cfg.out_dir = dir.to_path_buf();
        cfg
    }

    fn read_rows(path: &std::path::Path) -> Vec<Vec<String>> {
        let mut r = csv::Reader::from_path(path).unwrap();
        r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
    }

    #[test]
    fn rates_table_layout() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "jmax = 4\nchannels = 1ph-sp\nT_over_Tc = 0\n");
        let files = cmd_rates(&cfg).unwrap();
        assert_eq!(files.len(), 1);
        let rows = read_rows(&files[0]);
        assert_eq!(rows.len(), 25);
        for row in &rows {
            let (j, jp): (u32, u32) = (row[0].parse().unwrap(), row[1].parse().unwrap());
            let rate: f64 = row[2].parse().unwrap();
            if jp >= j {
                assert_eq!(rate, 0.0);
            }
        }
        assert!(dir.path().join("rates_1ph-sp.meta.json").exists());
    }

    #[test]
    fn critical_values() {
        let dir = tempfile::tempdir().unwrap();
        let (r, _) = cmd_critical(&config(dir.path(), "r0_over_xi = 10\nmI_over_mB = 1.25\nT_over_Tc = 0.01\n")).unwrap();
        assert_eq!((r.j_c_floor, r.j_c1_floor), (17, 10));
        let (r, _) = cmd_critical(&config(dir.path(), "T_over_Tc = 0\nmI_over_mB = 1\n")).unwrap();
        assert_eq!(r.j_T, 0.0);
        assert_eq!(r.j_c1_floor, 0);
    }

    #[test]
    fn evolve_without_channels_is_constant() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "channels = none\ninitial_state = weights:0,1,0,1\npoints = 5\n");
        let s = cmd_evolve(&cfg).unwrap();
        assert_eq!(s.final_populations[1], 0.5);
        assert_eq!(s.final_populations[3], 0.5);
        let rows = read_rows(&s.files[0]);
        assert_eq!(rows.len(), 5 * (cfg.resolved_jmax() as usize + 1));
    }

    #[test]
    fn evolve_reports_leak() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "jmax = 4\ninitial_state = delta:2\nT_over_Tc = 0.5\nt_end = 1e6\n");
        assert!(cmd_evolve(&cfg).unwrap().truncation_leak);
        let meta = std::fs::read_to_string(dir.path().join("trajectory.meta.json")).unwrap();
        assert!(meta.contains("truncation leak"));
    }

    #[test]
    fn scan_ratio_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), "scan_T_over_Tc = 0, 0.05, 0.1\nscan_n0_xi3 = 1e4\n");
        let rows = read_rows(&cmd_scan_ratio(&cfg).unwrap());
        let ratio: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
        assert_eq!(ratio[0], 0.0);
        assert!(ratio[1] < ratio[2]);
        let rel = (ratio[2] - 0.1f64.powf(1.5)).abs() / 0.1f64.powf(1.5);
        assert!(rel < 0.2);
    }

    #[test]
    fn dispersion_table() {
        let dir = tempfile::tempdir().unwrap();
        let rows = read_rows(&cmd_dispersion(&config(dir.path(), "k_max = 20\nk_points = 81\n")).unwrap());
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
        let mut last_w = -1.0;
        for r in &rows {
            let k: f64 = r[0].parse().unwrap();
            let back: f64 = r[2].parse().unwrap();
            assert!((back - k).abs() <= 1e-12 * k.max(1.0));
            let w: f64 = r[3].parse().unwrap();
            assert!(w > last_w);
            last_w = w;
        }
    }

    #[test]
    fn channel_tags_name_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(dir.path(), "jmax = 3\n");
        cfg.channels = vec![Channel::OnePhononThermal];
        let f = cmd_rates(&cfg).unwrap();
        assert!(f[0].ends_with("rates_1ph-T.csv"));
    }
}
