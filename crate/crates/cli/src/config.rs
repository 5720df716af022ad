//! Analysis settings, read from TOML and overridable on the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tactile_core::metrics::SATURATION_WINDOW_N;
use tactile_core::spatial::PipelineConfig;

use crate::error::CliError;

/// Force-curve settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceConfig {
    /// A window is saturated when its slope falls below this fraction of the initial slope.
    pub saturation_ratio: f64,
    /// Width of the sliding slope window, newtons.
    pub window_n: f64,
}

impl Default for ForceConfig {
    fn default() -> Self {
        Self {
            saturation_ratio: 0.5,
            window_n: SATURATION_WINDOW_N,
        }
    }
}

/// Every parameter an analysis depends on.
///
/// ```toml
/// [pipeline]
/// dog_sigma_low = 2.0
/// dog_sigma_high = 12.0
///
/// [force]
/// saturation_ratio = 0.5
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub pipeline: PipelineConfig,
    pub force: ForceConfig,
}

impl AnalysisConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                CliError::Usage(format!("config file {} does not exist", path.display()))
            } else {
                CliError::io(path, e)
            }
        })?;
        Self::from_toml(&text)
    }

    /// `sha256:` digest of the config's canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }
}

/// Parses `LOW,HIGH`.
pub fn parse_sigmas(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("--dog-sigmas expects LOW,HIGH, got {text:?}"));
    let (a, b) = text.split_once(',').ok_or_else(bad)?;
    let low: f64 = a.trim().parse().map_err(|_| bad())?;
    let high: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((low, high))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_default() {
        assert_eq!(AnalysisConfig::from_toml("").unwrap(), AnalysisConfig::default());
    }

    #[test]
    fn partial_toml_overrides() {
        let c = AnalysisConfig::from_toml("[pipeline]\ndog_sigma_low = 3.0\n").unwrap();
        assert_eq!(c.pipeline.dog_sigma_low, 3.0);
        assert_eq!(c.pipeline.dog_sigma_high, 12.0);
        let c = AnalysisConfig::from_toml("[pipeline]\nscan_axis = \"columns\"\n").unwrap();
        assert!(c.pipeline.scan_axis.is_some());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(AnalysisConfig::from_toml("[force]\nratio = 0.3\n").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = AnalysisConfig::default();
        let mut b = a;
        b.pipeline.dog_sigma_low = 3.0;
        assert_eq!(a.hash(), AnalysisConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), "sha256:".len() + 64);
    }

    #[test]
    fn sigma_parsing() {
        assert_eq!(parse_sigmas("3,15").unwrap(), (3.0, 15.0));
        assert!(parse_sigmas("3").is_err());
        assert!(parse_sigmas("a,b").is_err());
    }
}
