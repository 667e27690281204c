//! The TOML configuration file. Every key is optional and falls back to the
//! desk-scale defaults of [`SystemConfig`].

use std::path::Path;

use relaysel::{EstimationMode, Scheme, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub estimation: EstimationSection,
    #[serde(default)]
    pub selection: SelectionSection,
    /// Present in written manifests; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<toml::Table>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n_as: Option<usize>,
    pub n_ar: Option<usize>,
    pub n_ad: Option<usize>,
    pub n_r: Option<usize>,
    pub n_asub: Option<usize>,
    pub n_rem: Option<usize>,
    pub direct_gain: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_symbols: Option<usize>,
    pub n_packets: Option<usize>,
    pub snr_db: Option<Vec<f64>>,
    pub rng_seed: Option<u64>,
    pub schemes: Option<Vec<Scheme>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    pub mode: Option<EstimationMode>,
    pub forgetting: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    pub initial_candidate: Option<usize>,
    pub max_candidates: Option<usize>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Fills the unset keys from the defaults.
    pub fn resolve(&self) -> SystemConfig {
        let d = SystemConfig::default();
        let (sys, sim, est, sel) = (
            &self.system,
            &self.simulation,
            &self.estimation,
            &self.selection,
        );
        SystemConfig {
            n_as: sys.n_as.unwrap_or(d.n_as),
            n_ar: sys.n_ar.unwrap_or(d.n_ar),
            n_ad: sys.n_ad.unwrap_or(d.n_ad),
            n_r: sys.n_r.unwrap_or(d.n_r),
            n_asub: sys.n_asub.unwrap_or(d.n_asub),
            n_rem: sys.n_rem.unwrap_or(d.n_rem),
            direct_gain: sys.direct_gain.unwrap_or(d.direct_gain),
            n_symbols: sim.n_symbols.unwrap_or(d.n_symbols),
            n_packets: sim.n_packets.unwrap_or(d.n_packets),
            snr_db_grid: sim.snr_db.clone().unwrap_or(d.snr_db_grid),
            rng_seed: sim.rng_seed.unwrap_or(d.rng_seed),
            schemes: sim.schemes.clone().unwrap_or(d.schemes),
            estimation_mode: est.mode.unwrap_or(d.estimation_mode),
            forgetting: est.forgetting.unwrap_or(d.forgetting),
            initial_candidate: sel.initial_candidate.unwrap_or(d.initial_candidate),
            max_candidates: sel.max_candidates.unwrap_or(d.max_candidates),
        }
    }

    /// The fully specified file for a resolved configuration.
    pub fn from_config(c: &SystemConfig) -> Self {
        ConfigFile {
            system: SystemSection {
                n_as: Some(c.n_as),
                n_ar: Some(c.n_ar),
                n_ad: Some(c.n_ad),
                n_r: Some(c.n_r),
                n_asub: Some(c.n_asub),
                n_rem: Some(c.n_rem),
                direct_gain: Some(c.direct_gain),
            },
            simulation: SimulationSection {
                n_symbols: Some(c.n_symbols),
                n_packets: Some(c.n_packets),
                snr_db: Some(c.snr_db_grid.clone()),
                rng_seed: Some(c.rng_seed),
                schemes: Some(c.schemes.clone()),
            },
            estimation: EstimationSection {
                mode: Some(c.estimation_mode),
                forgetting: Some(c.forgetting),
            },
            selection: SelectionSection {
                initial_candidate: Some(c.initial_candidate),
                max_candidates: Some(c.max_candidates),
            },
            run: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        let cfg = ConfigFile::parse("").unwrap().resolve();
        assert_eq!(cfg, SystemConfig::default());
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = ConfigFile::parse(
            "[system]\nn_r = 4\n[simulation]\nsnr_db = [10.0]\nschemes = [\"no_tds\", \"iterative_tds_rs\"]\n\
             [estimation]\nmode = \"perfect\"\n",
        )
        .unwrap()
        .resolve();
        assert_eq!(cfg.n_r, 4);
        assert_eq!(cfg.snr_db_grid, vec![10.0]);
        assert_eq!(cfg.estimation_mode, EstimationMode::Perfect);
        assert_eq!(cfg.schemes.len(), 2);
    }

    #[test]
    fn unknown_keys_and_schemes_are_rejected() {
        assert!(ConfigFile::parse("[system]\nn_relays = 3\n").is_err());
        assert!(ConfigFile::parse("[simulation]\nschemes = [\"best\"]\n").is_err());
    }

    #[test]
    fn round_trip() {
        let cfg = SystemConfig {
            n_r: 5,
            snr_db_grid: vec![2.5, 7.0],
            ..SystemConfig::default()
        };
        let text = toml::to_string(&ConfigFile::from_config(&cfg)).unwrap();
        assert_eq!(ConfigFile::parse(&text).unwrap().resolve(), cfg);
    }
}
