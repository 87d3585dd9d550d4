//! Command-line front end: presets, parameter files, and CSV/JSON tables for
//! the security model, optimizer, simulator and link budget.

pub mod commands;
pub mod config;
pub mod format;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use brpqkd::ModelError;

pub use config::ExperimentConfig;
pub use format::{Format, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INSECURE: i32 = 3;
pub const EXIT_MC_FAILURE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

/// A rendered command result and the process exit code it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    pub exit_code: i32,
}

#[derive(Debug, Parser)]
#[command(name = "brpqkd", version, about = "Security analysis of weak-pulse QKD with bright reference pulses")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one (mu_s, L) point; exit 3 if it is not secure.
    Evaluate {
        /// Count BRP leakage through the optical switch as background clicks.
        #[arg(long)]
        add_crosstalk: bool,
    },
    /// Best signal intensity, its secure distance, and the minimum BRP intensity.
    Optimize,
    /// Tabulate key rates against distance or information against disturbance.
    Sweep {
        #[arg(long, value_enum)]
        axis: Axis,
    },
    /// Compare the pulse-level simulator with the analytic model; exit 4 on disagreement.
    McValidate {
        /// Worker threads (results do not depend on it).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Mean photon numbers through the optical chain.
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Disturbance,
    Distance,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    #[arg(long, global = true, default_value = "gys2004")]
    pub preset: String,
    /// Flat key = value parameter file, applied after the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu_s: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu_b: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub length_km: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub loss_db_km: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eta_d: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub y0: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub e_detector: Option<String>,
    #[arg(long, global = true)]
    pub eve_mode: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub suppress_fraction: Option<String>,
    /// Eve forwards multi-photon pulses over a lossless channel.
    #[arg(long, global = true)]
    pub forward_lossless: bool,
    #[arg(long, global = true)]
    pub n_pulses: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub source_intensity: Option<String>,
    /// Signal intensities for optimize and sweep: start:step:end or a list.
    #[arg(long, global = true)]
    pub mu_s_grid: Option<String>,
    #[arg(long, global = true)]
    pub length_grid: Option<String>,
    #[arg(long, global = true)]
    pub d_grid: Option<String>,
}

impl GlobalOpts {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let pairs = [
            ("mu-s", &self.mu_s),
            ("mu-b", &self.mu_b),
            ("length-km", &self.length_km),
            ("loss-db-km", &self.loss_db_km),
            ("eta-d", &self.eta_d),
            ("y0", &self.y0),
            ("e-detector", &self.e_detector),
            ("eve-mode", &self.eve_mode),
            ("suppress-fraction", &self.suppress_fraction),
            ("n-pulses", &self.n_pulses),
            ("seed", &self.seed),
            ("source-intensity", &self.source_intensity),
            ("mu-s-grid", &self.mu_s_grid),
            ("length-grid", &self.length_grid),
            ("d-grid", &self.d_grid),
        ];
        let mut out: Vec<(&'static str, &str)> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect();
        if self.forward_lossless {
            out.push(("forward-lossless", "true"));
        }
        out
    }

    /// Preset, then config file, then flags.
    pub fn build_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = ExperimentConfig::preset(&self.preset)?;
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        for (key, value) in self.overrides() {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Run a parsed command line.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let config = cli.opts.build_config()?;
    match &cli.command {
        Command::Evaluate { add_crosstalk } => commands::cmd_evaluate(&config, *add_crosstalk),
        Command::Optimize => commands::cmd_optimize(&config),
        Command::Sweep { axis } => commands::cmd_sweep(&config, *axis),
        Command::McValidate { threads } => commands::cmd_mc_validate(&config, *threads),
        Command::Budget => commands::cmd_budget(&config),
    }
}

/// Execute, render and write; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = execute(cli).and_then(|report| {
        let text = report.table.render(cli.opts.format);
        match &cli.opts.out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(report.exit_code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
