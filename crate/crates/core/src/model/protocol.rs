use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Direction in which the ridge lines run across the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RidgeOrientation {
    /// Ridge lines run left to right; intensity varies down each column.
    Horizontal,
    /// Ridge lines run top to bottom; intensity varies along each row.
    Vertical,
}

/// Geometry of a periodic ridged test surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeSpec {
    /// Peak-to-peak spatial period in mm.
    pub period_mm: f64,
    /// Ridge height in mm. Zero describes a flat surface.
    pub amplitude_mm: f64,
    pub orientation: RidgeOrientation,
}

impl RidgeSpec {
    pub fn new(period_mm: f64, amplitude_mm: f64, orientation: RidgeOrientation) -> Result<Self> {
        let spec = Self {
            period_mm,
            amplitude_mm,
            orientation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period_mm.is_finite() && self.period_mm > 0.0) {
            return Err(Error::Argument(format!(
                "ridge period must be positive, got {} mm",
                self.period_mm
            )));
        }
        if !(self.amplitude_mm.is_finite() && self.amplitude_mm >= 0.0) {
            return Err(Error::Argument(format!(
                "ridge amplitude must be non-negative, got {} mm",
                self.amplitude_mm
            )));
        }
        Ok(())
    }

    /// Spatial frequency of the ridges in cycles/mm.
    pub fn frequency(&self) -> f64 {
        1.0 / self.period_mm
    }
}

/// The six benchmark protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    CyclicCompression,
    CyclicLocalShear,
    CyclicTransverseShear,
    Abrasion,
    ForceSensitivity,
    SpatialSensitivity,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 6] = [
        ProtocolKind::CyclicCompression,
        ProtocolKind::CyclicLocalShear,
        ProtocolKind::CyclicTransverseShear,
        ProtocolKind::Abrasion,
        ProtocolKind::ForceSensitivity,
        ProtocolKind::SpatialSensitivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::CyclicCompression => "cyclic_compression",
            ProtocolKind::CyclicLocalShear => "cyclic_local_shear",
            ProtocolKind::CyclicTransverseShear => "cyclic_transverse_shear",
            ProtocolKind::Abrasion => "abrasion",
            ProtocolKind::ForceSensitivity => "force_sensitivity",
            ProtocolKind::SpatialSensitivity => "spatial_sensitivity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Cyclic loading and abrasion runs, analysed with the MAE wear series.
    pub fn is_resilience(self) -> bool {
        matches!(
            self,
            ProtocolKind::CyclicCompression
                | ProtocolKind::CyclicLocalShear
                | ProtocolKind::CyclicTransverseShear
                | ProtocolKind::Abrasion
        )
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// What the gel is pressed against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Contact {
    SphericalIndenter { tip_radius_mm: f64 },
    FlatPlate,
}

/// Repeated normal loading with an optional lateral (shear) load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclicLoading {
    pub normal_load_n: f64,
    pub lateral_load_n: f64,
    pub cycles: u32,
    pub contact: Contact,
}

/// Sandpaper abrasion at constant normal load, imaged after each increment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbrasionSchedule {
    pub normal_load_n: f64,
    pub total_distance_m: f64,
    pub increment_m: f64,
}

impl AbrasionSchedule {
    /// Cumulative abraded distance after each increment, e.g. `[2, 4, 6, 8]`.
    pub fn increments(&self) -> Vec<f64> {
        let n = (self.total_distance_m / self.increment_m).round() as usize;
        (1..=n).map(|i| i as f64 * self.increment_m).collect()
    }
}

/// Single load/unload ramp on an indenter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceRamp {
    pub max_force_n: f64,
    pub ramp_rate_m_per_s: f64,
    pub contact: Contact,
}

/// One surface pressed at one load. `ridge` is `None` for the flat reference surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceLoad {
    pub load_n: f64,
    pub ridge: Option<RidgeSpec>,
}

/// A protocol together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    CyclicCompression(CyclicLoading),
    CyclicLocalShear(CyclicLoading),
    CyclicTransverseShear(CyclicLoading),
    Abrasion(AbrasionSchedule),
    ForceSensitivity(ForceRamp),
    SpatialSensitivity(SurfaceLoad),
}

/// Indenter used for compression, local shear and the force ramp.
pub const INDENTER_TIP_RADIUS_MM: f64 = 4.0;

impl Protocol {
    /// The standard parameters for each protocol.
    ///
    /// The spatial preset describes the flat reference surface at the lower
    /// load; [`SweepPlan::standard`] lists the full surface and load grid.
    pub fn preset(kind: ProtocolKind) -> Protocol {
        let indenter = Contact::SphericalIndenter {
            tip_radius_mm: INDENTER_TIP_RADIUS_MM,
        };
        match kind {
            ProtocolKind::CyclicCompression => Protocol::CyclicCompression(CyclicLoading {
                normal_load_n: 15.0,
                lateral_load_n: 0.0,
                cycles: 1000,
                contact: indenter,
            }),
            ProtocolKind::CyclicLocalShear => Protocol::CyclicLocalShear(CyclicLoading {
                normal_load_n: 10.0,
                lateral_load_n: 5.0,
                cycles: 1000,
                contact: indenter,
            }),
            ProtocolKind::CyclicTransverseShear => Protocol::CyclicTransverseShear(CyclicLoading {
                normal_load_n: 15.0,
                lateral_load_n: 15.0,
                cycles: 1000,
                contact: Contact::FlatPlate,
            }),
            ProtocolKind::Abrasion => Protocol::Abrasion(AbrasionSchedule {
                normal_load_n: 5.0,
                total_distance_m: 8.0,
                increment_m: 2.0,
            }),
            ProtocolKind::ForceSensitivity => Protocol::ForceSensitivity(ForceRamp {
                max_force_n: 40.0,
                ramp_rate_m_per_s: 2e-6,
                contact: indenter,
            }),
            ProtocolKind::SpatialSensitivity => Protocol::SpatialSensitivity(SurfaceLoad {
                load_n: SweepPlan::LOADS_N[0],
                ridge: None,
            }),
        }
    }

    pub fn kind(&self) -> ProtocolKind {
        match self {
            Protocol::CyclicCompression(_) => ProtocolKind::CyclicCompression,
            Protocol::CyclicLocalShear(_) => ProtocolKind::CyclicLocalShear,
            Protocol::CyclicTransverseShear(_) => ProtocolKind::CyclicTransverseShear,
            Protocol::Abrasion(_) => ProtocolKind::Abrasion,
            Protocol::ForceSensitivity(_) => ProtocolKind::ForceSensitivity,
            Protocol::SpatialSensitivity(_) => ProtocolKind::SpatialSensitivity,
        }
    }

    pub fn cyclic(&self) -> Option<&CyclicLoading> {
        match self {
            Protocol::CyclicCompression(p)
            | Protocol::CyclicLocalShear(p)
            | Protocol::CyclicTransverseShear(p) => Some(p),
            _ => None,
        }
    }

    /// Parameters as a JSON value, the `parameters` object of a manifest.
    pub fn parameters_json(&self) -> serde_json::Value {
        let v = match self {
            Protocol::CyclicCompression(p)
            | Protocol::CyclicLocalShear(p)
            | Protocol::CyclicTransverseShear(p) => serde_json::to_value(p),
            Protocol::Abrasion(p) => serde_json::to_value(p),
            Protocol::ForceSensitivity(p) => serde_json::to_value(p),
            Protocol::SpatialSensitivity(p) => serde_json::to_value(p),
        };
        v.expect("protocol parameters serialize")
    }

    /// Inverse of [`Protocol::parameters_json`].
    pub fn from_parameters(kind: ProtocolKind, parameters: serde_json::Value) -> Result<Protocol> {
        fn parse<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T> {
            serde_path_to_error::deserialize(v).map_err(|e| {
                let path = e.path().to_string();
                Error::schema(format!("parameters.{path}"), e.into_inner().to_string())
            })
        }
        Ok(match kind {
            ProtocolKind::CyclicCompression => Protocol::CyclicCompression(parse(parameters)?),
            ProtocolKind::CyclicLocalShear => Protocol::CyclicLocalShear(parse(parameters)?),
            ProtocolKind::CyclicTransverseShear => {
                Protocol::CyclicTransverseShear(parse(parameters)?)
            }
            ProtocolKind::Abrasion => Protocol::Abrasion(parse(parameters)?),
            ProtocolKind::ForceSensitivity => Protocol::ForceSensitivity(parse(parameters)?),
            ProtocolKind::SpatialSensitivity => Protocol::SpatialSensitivity(parse(parameters)?),
        })
    }
}

/// The grid of ridged surfaces and loads used for a spatial-sensitivity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub loads_n: Vec<f64>,
    /// Amplitudes tested at the constant period `fixed_period_mm`.
    pub amplitudes_mm: Vec<f64>,
    /// Periods tested at the constant amplitude `fixed_amplitude_mm`.
    pub periods_mm: Vec<f64>,
    pub fixed_period_mm: f64,
    pub fixed_amplitude_mm: f64,
    pub orientation: RidgeOrientation,
}

impl SweepPlan {
    pub const LOADS_N: [f64; 2] = [2.0, 10.0];
    pub const AMPLITUDE_RANGE_MM: (f64, f64) = (0.005, 0.05);
    pub const PERIOD_RANGE_MM: (f64, f64) = (0.6, 1.5);
    pub const STEPS: usize = 10;

    /// Ten amplitudes at the largest period and ten periods at the largest
    /// amplitude, each pressed at 2 N and 10 N.
    pub fn standard() -> Self {
        let (a_lo, a_hi) = Self::AMPLITUDE_RANGE_MM;
        let (p_lo, p_hi) = Self::PERIOD_RANGE_MM;
        Self {
            loads_n: Self::LOADS_N.to_vec(),
            amplitudes_mm: linspace(a_lo, a_hi, Self::STEPS),
            periods_mm: linspace(p_lo, p_hi, Self::STEPS),
            fixed_period_mm: p_hi,
            fixed_amplitude_mm: a_hi,
            orientation: RidgeOrientation::Vertical,
        }
    }

    /// Every ridged surface in the plan: the amplitude series followed by the period series.
    pub fn surfaces(&self) -> Vec<RidgeSpec> {
        let amps = self.amplitudes_mm.iter().map(|&a| RidgeSpec {
            period_mm: self.fixed_period_mm,
            amplitude_mm: a,
            orientation: self.orientation,
        });
        let periods = self.periods_mm.iter().map(|&p| RidgeSpec {
            period_mm: p,
            amplitude_mm: self.fixed_amplitude_mm,
            orientation: self.orientation,
        });
        amps.chain(periods).collect()
    }
}

/// `n` evenly spaced values from `lo` to `hi` inclusive, rounded to 1e-9 so
/// that decimal grids print cleanly.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                let v = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (v * 1e9).round() / 1e9
            })
            .collect(),
    }
}
