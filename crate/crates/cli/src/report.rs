//! The `report.json` written by every analysis command.

use std::path::Path;

use serde::Serialize;
use tactile_core::metrics::SeriesPoint;
use tactile_core::model::RunHeader;
use tactile_core::simulator::WearEvent;
use tactile_core::spatial::SnrRecord;

use crate::config::AnalysisConfig;
use crate::error::CliError;

/// Version of the report layout described by `schema/report.schema.json`.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Tool {
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunInfo {
    pub material_label: String,
    pub sample_id: String,
    pub protocol: String,
    pub parameters: Option<serde_json::Value>,
}

impl RunInfo {
    pub fn from_header(h: &RunHeader) -> Self {
        Self {
            material_label: h.material_label.clone(),
            sample_id: h.sample_id.clone(),
            protocol: h.protocol.kind().name().to_string(),
            parameters: Some(h.protocol.parameters_json()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub input: String,
    /// Seed of a simulated input, from its `truth.json`.
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct ResilienceResults {
    pub cycles: usize,
    pub final_mae_unloaded: f64,
    pub final_mae_loaded: Option<f64>,
    pub peak_unloaded: SeriesPoint,
    pub peak_loaded: Option<SeriesPoint>,
    /// Largest rise between consecutive cycles, ignoring the rise from the
    /// reference cycle onto the noise floor.
    pub largest_step_unloaded: Option<SeriesPoint>,
    pub largest_step_loaded: Option<SeriesPoint>,
    pub injected_wear: Vec<WearEvent>,
}

#[derive(Debug, Serialize)]
pub struct ForceResults {
    pub samples: usize,
    pub loading_samples: usize,
    pub unloading_samples: usize,
    pub peak_force_n: f64,
    pub peak_mae: f64,
    pub saturation_force_n: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SpatialResults {
    pub runs: usize,
    pub records: Vec<SnrRecord>,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Results {
    Resilience(ResilienceResults),
    Force(ForceResults),
    Spatial(SpatialResults),
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: Tool,
    pub command: &'static str,
    pub run: RunInfo,
    pub config: AnalysisConfig,
    pub config_hash: String,
    pub provenance: Provenance,
    pub results: Results,
}

impl Report {
    pub fn new(
        command: &'static str,
        run: RunInfo,
        config: &AnalysisConfig,
        input: &Path,
        seed: Option<u64>,
        results: Results,
    ) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            tool: Tool::current(),
            command,
            run,
            config: *config,
            config_hash: config.hash(),
            provenance: Provenance {
                input: input.display().to_string(),
                seed,
            },
            results,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("report serializes") + "\n";
        std::fs::write(path, json).map_err(|e| CliError::io(path, e))
    }
}
