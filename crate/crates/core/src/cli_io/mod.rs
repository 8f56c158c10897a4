//! Configuration, subcommands and CSV output for the command-line tool.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_critical, cmd_dispersion, cmd_evolve, cmd_rates, cmd_scan_ratio, CriticalReport, EvolveSummary};
pub use config::{parse_channels, InitialState, RunConfig};
pub use output::fmt_f64;
