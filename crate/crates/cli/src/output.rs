//! Result files: the two CSV tables and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use relaysel::sim::ExperimentResult;
use relaysel::SystemConfig;
use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;
use crate::CliError;

pub const SNR_FILE: &str = "ber_vs_snr.csv";
pub const SYMBOL_FILE: &str = "ber_vs_symbol.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
/// Bumped whenever a CSV column changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrRow {
    pub scheme: String,
    pub snr_db: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolRow {
    pub scheme: String,
    pub snr_db: f64,
    pub symbol_index: usize,
    pub ber: f64,
}

pub fn snr_rows(result: &ExperimentResult) -> Vec<SnrRow> {
    result
        .records()
        .into_iter()
        .filter(|r| r.symbol_index.is_none())
        .map(|r| SnrRow {
            scheme: r.scheme.label().to_string(),
            snr_db: r.snr_db,
            ber: r.ber(),
            bit_errors: r.bit_errors,
            bits: r.bits_total,
        })
        .collect()
}

pub fn symbol_rows(result: &ExperimentResult) -> Vec<SymbolRow> {
    result
        .records()
        .into_iter()
        .filter_map(|r| {
            r.symbol_index.map(|i| SymbolRow {
                scheme: r.scheme.label().to_string(),
                snr_db: r.snr_db,
                symbol_index: i,
                ber: r.ber(),
            })
        })
        .collect()
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(io_error(path))?;
    let mut writer = csv::Writer::from_writer(file);
    for row in rows {
        writer.serialize(row).map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    writer.flush().map_err(io_error(path))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = std::fs::File::open(path).map_err(io_error(path))?;
    let mut reader = csv::Reader::from_reader(file);
    let rows = reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    if rows.is_empty() {
        return Err(CliError::Csv {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

/// Everything needed to reproduce a run. The file is itself a valid
/// configuration: `run` ignores the `[run]` table.
pub fn write_manifest(
    dir: &Path,
    config: &SystemConfig,
    outputs: &[PathBuf],
) -> Result<PathBuf, CliError> {
    let mut file = ConfigFile::from_config(config);
    let mut run = toml::Table::new();
    run.insert("tool".into(), env!("CARGO_PKG_NAME").into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    run.insert("timestamp_unix".into(), toml::Value::Integer(now as i64));
    run.insert("seed".into(), toml::Value::Integer(config.rng_seed as i64));
    run.insert(
        "csv_schema_version".into(),
        toml::Value::Integer(CSV_SCHEMA_VERSION.into()),
    );
    run.insert(
        "snr_convention".into(),
        "per-phase total transmit power over per-antenna noise variance".into(),
    );
    run.insert(
        "outputs".into(),
        toml::Value::Array(
            outputs
                .iter()
                .map(|p| toml::Value::String(p.display().to_string()))
                .collect(),
        ),
    );
    file.run = Some(run);

    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string(&file).map_err(|e| CliError::Parse {
        path: path.clone(),
        message: e.to_string(),
    })?;
    std::fs::write(&path, text).map_err(io_error(&path))?;
    Ok(path)
}
