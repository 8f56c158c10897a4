use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rotcool::cli_io::{self, parse_channels, RunConfig};
use rotcool::{Error, Result};

/// Rotational relaxation of a diatomic impurity in a Bose–Einstein condensate.
#[derive(Parser, Debug)]
#[command(name = "rotcool", version)]
struct Cli {
    /// Flat key = value config file, or a .meta.json file from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Highest rotational level kept.
    #[arg(long, global = true)]
    jmax: Option<u32>,
    /// Comma-separated channels: 1ph-sp, 1ph-T, 2ph-x, 2ph-prec, all or none.
    #[arg(long, global = true)]
    channels: Option<String>,
    /// Worker threads for rate assembly and sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override any config key, e.g. --set T_over_Tc=0.01 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rate matrices Γ_{j→j'} for each selected channel.
    Rates,
    /// Critical and thermal angular momenta and scales.
    Critical,
    /// Time evolution of the level populations.
    Evolve,
    /// Thermal two-phonon to single-phonon ratio over a (T, n0) grid.
    ScanRatio,
    /// Tabulated Bogoliubov dispersion and related functions.
    Dispersion,
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(j) = cli.jmax {
        cfg.jmax = Some(j);
    }
    if let Some(c) = &cli.channels {
        cfg.channels = parse_channels(c)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let cfg = resolve(&cli)?;
    match cli.command {
        Command::Rates => {
            for path in cli_io::cmd_rates(&cfg)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Critical => {
            let (report, path) = cli_io::cmd_critical(&cfg)?;
            for (name, value) in report.entries() {
                println!("{name} = {value}");
            }
            println!("wrote {}", path.display());
        }
        Command::Evolve => {
            let s = cli_io::cmd_evolve(&cfg)?;
            if s.truncation_leak {
                eprintln!("warning: population reached the top two levels; increase jmax");
            }
            println!("t = {:e}: mean j = {:.6}", s.final_time, s.mean_j);
            for path in s.files {
                println!("wrote {}", path.display());
            }
        }
        Command::ScanRatio => println!("wrote {}", cli_io::cmd_scan_ratio(&cfg)?.display()),
        Command::Dispersion => println!("wrote {}", cli_io::cmd_dispersion(&cfg)?.display()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
