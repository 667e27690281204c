//! Command implementations behind the `relaysel` binary.

pub mod config;
pub mod output;
pub mod plot;

use std::path::{Path, PathBuf};

use relaysel::selection::complexity_report;
use relaysel::sim::run_experiment;
use relaysel::{Scheme, SystemConfig};

use crate::config::ConfigFile;
use crate::output::{snr_rows, symbol_rows, write_csv, write_manifest, SNR_FILE, SYMBOL_FILE};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: malformed CSV: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(relaysel::Error),
    #[error("simulation failed: {0}")]
    Simulation(relaysel::Error),
    #[error("{}: plotting failed: {message}", path.display())]
    Plot { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Csv { .. } => 2,
            CliError::Invalid(_) => 3,
            CliError::Io { .. } | CliError::Simulation(_) | CliError::Plot { .. } => 1,
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub schemes: Option<Vec<Scheme>>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<SystemConfig, CliError> {
    let mut config = ConfigFile::load(path)?.resolve();
    if let Some(seed) = overrides.seed {
        config.rng_seed = seed;
    }
    if let Some(schemes) = &overrides.schemes {
        config.schemes = schemes.clone();
    }
    config.validate().map_err(CliError::Invalid)?;
    Ok(config)
}

/// Runs the experiment and writes both CSVs and the manifest into `out_dir`.
/// Returns the written paths.
pub fn cmd_run(
    config_path: &Path,
    out_dir: &Path,
    overrides: &Overrides,
) -> Result<Vec<PathBuf>, CliError> {
    let config = load_config(config_path, overrides)?;
    let result = run_experiment(&config).map_err(CliError::Simulation)?;

    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let snr_path = out_dir.join(SNR_FILE);
    let symbol_path = out_dir.join(SYMBOL_FILE);
    write_csv(&snr_path, &snr_rows(&result))?;
    write_csv(&symbol_path, &symbol_rows(&result))?;
    let mut paths = vec![snr_path, symbol_path];
    let manifest = write_manifest(out_dir, &config, &paths)?;
    paths.push(manifest);
    Ok(paths)
}

/// The complexity table as printed by `relaysel complexity`.
pub fn cmd_complexity(config_path: &Path) -> Result<String, CliError> {
    let config = load_config(config_path, &Overrides::default())?;
    let report = complexity_report(&config).map_err(CliError::Invalid)?;
    let mut out = format!(
        "{:<20} {:>12} {:>16}\n",
        "scheme", "evaluations", "multiplications"
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{:<20} {:>12} {:>16.3e}\n",
            row.scheme.label(),
            row.evaluations,
            row.multiplications as f64
        ));
    }
    out.push_str(&format!("\nconvention: {}\n", report.convention));
    Ok(out)
}

pub fn cmd_plot(csv_path: &Path, out_path: &Path) -> Result<(), CliError> {
    plot::plot_csv(csv_path, out_path)
}
