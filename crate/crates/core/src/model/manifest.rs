//! Recorded benchmark runs and their on-disk layout.
//!
//! A run directory holds `manifest.json`, the PNG frames it references, and
//! depending on the protocol a `forces.csv` log and a `truth.json` sidecar:
//!
//! ```text
//! manifest.json
//! cycles/0001/unloaded/frame_000.png   resilience runs
//! cycles/0001/loaded/frame_000.png
//! frames/frame_000.png                 force ramps (+ forces.csv)
//! loaded/frame_000.png                 spatial surfaces
//! unloaded/frame_000.png
//! truth.json                           simulated runs only
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::{ensure_strictly_increasing, Frame, FrameStack};
use super::protocol::{Protocol, ProtocolKind};
use crate::error::{Error, Result};
use crate::simulator::GroundTruth;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORCES_FILE: &str = "forces.csv";
pub const TRUTH_FILE: &str = "truth.json";

/// One force/torque sensor reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSample {
    #[serde(rename = "timestamp_s")]
    pub timestamp: f64,
    #[serde(rename = "fx_n")]
    pub fx: f64,
    #[serde(rename = "fy_n")]
    pub fy: f64,
    #[serde(rename = "fz_n")]
    pub fz: f64,
}

/// Frames recorded for one cycle (or one abrasion increment).
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    /// 1-based; cycle 1 is the wear reference.
    pub cycle_index: u32,
    /// Cumulative abraded distance for abrasion increments.
    pub distance_m: Option<f64>,
    pub unloaded: FrameStack,
    /// Absent for abrasion, where only unloaded frames are recorded.
    pub loaded: Option<FrameStack>,
}

/// Protocol-specific recorded data.
#[derive(Debug, Clone, PartialEq)]
pub enum RunData {
    Cycles(Vec<CycleRecord>),
    ForceRamp {
        /// Timestamped frames.
        frames: FrameStack,
        forces: Vec<LoadSample>,
    },
    Surface {
        loaded: FrameStack,
        unloaded: FrameStack,
    },
}

/// A complete recorded benchmark run.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub protocol: Protocol,
    pub material_label: String,
    pub sample_id: String,
    /// Camera calibration; required for spatial-sensitivity runs.
    pub mm_per_pixel: Option<f64>,
    pub fps: f64,
    pub data: RunData,
    /// Injected ground truth for simulated runs.
    pub truth: Option<GroundTruth>,
    /// Directory the run was loaded from. Not part of equality.
    pub source: Option<PathBuf>,
}

impl PartialEq for RunManifest {
    fn eq(&self, other: &Self) -> bool {
        self.protocol == other.protocol
            && self.material_label == other.material_label
            && self.sample_id == other.sample_id
            && self.mm_per_pixel == other.mm_per_pixel
            && self.fps == other.fps
            && self.data == other.data
            && self.truth == other.truth
    }
}

impl RunManifest {
    pub fn kind(&self) -> ProtocolKind {
        self.protocol.kind()
    }

    /// `(width, height)` shared by every frame in the run.
    pub fn resolution(&self) -> (usize, usize) {
        match &self.data {
            RunData::Cycles(cycles) => cycles[0].unloaded.dims(),
            RunData::ForceRamp { frames, .. } => frames.dims(),
            RunData::Surface { loaded, .. } => loaded.dims(),
        }
    }

    pub fn cycles(&self) -> Option<&[CycleRecord]> {
        match &self.data {
            RunData::Cycles(c) => Some(c),
            _ => None,
        }
    }

    /// Checks every structural invariant of a run.
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind();
        if kind == ProtocolKind::SpatialSensitivity {
            match self.mm_per_pixel {
                Some(v) if v.is_finite() && v > 0.0 => {}
                Some(v) => {
                    return Err(Error::schema(
                        "mm_per_pixel",
                        format!("must be positive, got {v}"),
                    ))
                }
                None => {
                    return Err(Error::schema(
                        "mm_per_pixel",
                        "required for spatial_sensitivity runs",
                    ))
                }
            }
        } else if let Some(v) = self.mm_per_pixel {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::schema("mm_per_pixel", format!("must be positive, got {v}")));
            }
        }

        match (&self.data, kind) {
            (RunData::Cycles(cycles), k) if k.is_resilience() => {
                if cycles.is_empty() {
                    return Err(Error::Validation("resilience run has no cycles".into()));
                }
                let dims = cycles[0].unloaded.dims();
                let mut previous = 0;
                for c in cycles {
                    check_cycle(k, dims, previous, c)?;
                    previous = c.cycle_index;
                }
            }
            (RunData::ForceRamp { frames, forces }, ProtocolKind::ForceSensitivity) => {
                if frames.timestamps().is_none() {
                    return Err(Error::Validation("force ramp frames need timestamps".into()));
                }
                if forces.is_empty() {
                    return Err(Error::Validation("force log is empty".into()));
                }
                let ts: Vec<f64> = forces.iter().map(|s| s.timestamp).collect();
                ensure_strictly_increasing(&ts, "force log timestamps")?;
            }
            (RunData::Surface { loaded, unloaded }, ProtocolKind::SpatialSensitivity) => {
                if loaded.dims() != unloaded.dims() {
                    return Err(Error::DimensionMismatch {
                        context: "surface unloaded stack".into(),
                        expected: loaded.dims(),
                        found: unloaded.dims(),
                    });
                }
                if let Protocol::SpatialSensitivity(s) = &self.protocol {
                    if let Some(r) = &s.ridge {
                        r.validate()?;
                    }
                }
            }
            _ => {
                return Err(Error::Validation(format!(
                    "recorded data does not match protocol {kind}"
                )))
            }
        }
        Ok(())
    }
}

/// Checks one cycle against the run's protocol, resolution and the previous cycle index.
fn check_cycle(kind: ProtocolKind, dims: (usize, usize), previous: u32, c: &CycleRecord) -> Result<()> {
    if c.cycle_index <= previous {
        return Err(Error::Validation(format!(
            "cycle indices must be 1-based and increasing; {} follows {}",
            c.cycle_index, previous
        )));
    }
    let loaded_expected = kind != ProtocolKind::Abrasion;
    if c.loaded.is_some() != loaded_expected {
        return Err(Error::Validation(format!(
            "cycle {}: {} runs {} loaded frames",
            c.cycle_index,
            kind,
            if loaded_expected { "require" } else { "must not record" }
        )));
    }
    for (label, stack) in
        std::iter::once(("unloaded", &c.unloaded)).chain(c.loaded.iter().map(|s| ("loaded", s)))
    {
        if stack.dims() != dims {
            return Err(Error::DimensionMismatch {
                context: format!("cycle {} {label} stack", c.cycle_index),
                expected: dims,
                found: stack.dims(),
            });
        }
    }
    Ok(())
}

/// Everything in a run except its recorded frames.
#[derive(Debug, Clone, PartialEq)]
pub struct RunHeader {
    pub protocol: Protocol,
    pub material_label: String,
    pub sample_id: String,
    pub mm_per_pixel: Option<f64>,
    pub fps: f64,
    pub truth: Option<GroundTruth>,
}

impl RunHeader {
    fn check_calibration(&self) -> Result<()> {
        match self.mm_per_pixel {
            Some(v) if !(v.is_finite() && v > 0.0) => {
                Err(Error::schema("mm_per_pixel", format!("must be positive, got {v}")))
            }
            None if self.protocol.kind() == ProtocolKind::SpatialSensitivity => Err(Error::schema(
                "mm_per_pixel",
                "required for spatial_sensitivity runs",
            )),
            _ => Ok(()),
        }
    }

    fn manifest_file(&self, (w, h): (usize, usize)) -> ManifestFile {
        ManifestFile {
            schema_version: SCHEMA_VERSION,
            protocol: self.protocol.kind(),
            parameters: self.protocol.parameters_json(),
            material_label: self.material_label.clone(),
            sample_id: self.sample_id.clone(),
            mm_per_pixel: self.mm_per_pixel,
            resolution: Resolution { w, h },
            fps: self.fps,
            cycles: None,
            frames: None,
            frame_timestamps_s: None,
            forces: None,
            loaded: None,
            unloaded: None,
        }
    }
}

impl RunManifest {
    pub fn header(&self) -> RunHeader {
        RunHeader {
            protocol: self.protocol,
            material_label: self.material_label.clone(),
            sample_id: self.sample_id.clone(),
            mm_per_pixel: self.mm_per_pixel,
            fps: self.fps,
            truth: self.truth.clone(),
        }
    }

    pub fn from_parts(header: RunHeader, data: RunData) -> Self {
        RunManifest {
            protocol: header.protocol,
            material_label: header.material_label,
            sample_id: header.sample_id,
            mm_per_pixel: header.mm_per_pixel,
            fps: header.fps,
            data,
            truth: header.truth,
            source: None,
        }
    }
}

/// Writes a resilience run one cycle at a time, so long runs never need to
/// be held in memory. The manifest is written by [`CycleWriter::finish`].
pub struct CycleWriter {
    dir: PathBuf,
    header: RunHeader,
    resolution: Option<(usize, usize)>,
    entries: Vec<CycleEntry>,
}

impl CycleWriter {
    pub fn create(dir: impl AsRef<Path>, header: RunHeader) -> Result<Self> {
        let kind = header.protocol.kind();
        if !kind.is_resilience() {
            return Err(Error::Validation(format!("{kind} runs are not recorded in cycles")));
        }
        header.check_calibration()?;
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            header,
            resolution: None,
            entries: Vec::new(),
        })
    }

    pub fn push(&mut self, c: &CycleRecord) -> Result<()> {
        let dims = *self.resolution.get_or_insert(c.unloaded.dims());
        let previous = self.entries.last().map_or(0, |e| e.index);
        check_cycle(self.header.protocol.kind(), dims, previous, c)?;
        let base = cycle_dir(c.cycle_index);
        let mut jobs: Vec<(String, &Frame)> = Vec::new();
        let unloaded = frame_names(&format!("{base}/unloaded"), c.unloaded.len());
        jobs.extend(unloaded.iter().cloned().zip(c.unloaded.frames()));
        let loaded = c.loaded.as_ref().map(|s| {
            let names = frame_names(&format!("{base}/loaded"), s.len());
            jobs.extend(names.iter().cloned().zip(s.frames()));
            names
        });
        jobs.par_iter()
            .try_for_each(|(rel, frame)| write_png(&self.dir.join(rel), frame))?;
        self.entries.push(CycleEntry {
            index: c.cycle_index,
            distance_m: c.distance_m,
            unloaded,
            loaded,
        });
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let Some(dims) = self.resolution else {
            return Err(Error::Validation("resilience run has no cycles".into()));
        };
        let mut file = self.header.manifest_file(dims);
        file.cycles = Some(self.entries);
        write_metadata(&self.dir, &file, self.header.truth.as_ref())
    }
}

fn write_metadata(dir: &Path, file: &ManifestFile, truth: Option<&GroundTruth>) -> Result<()> {
    let json = serde_json::to_string_pretty(file).expect("manifest serializes");
    write_text(&dir.join(MANIFEST_FILE), &(json + "\n"))?;
    if let Some(truth) = truth {
        let json = serde_json::to_string_pretty(truth).expect("truth serializes");
        write_text(&dir.join(TRUTH_FILE), &(json + "\n"))?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct Resolution {
    w: usize,
    h: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CycleEntry {
    index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distance_m: Option<f64>,
    unloaded: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loaded: Option<Vec<String>>,
}

/// The literal contents of `manifest.json`.
#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    schema_version: u32,
    protocol: ProtocolKind,
    parameters: serde_json::Value,
    material_label: String,
    sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mm_per_pixel: Option<f64>,
    resolution: Resolution,
    fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cycles: Option<Vec<CycleEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frames: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame_timestamps_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    forces: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    loaded: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unloaded: Option<Vec<String>>,
}

fn frame_names(dir: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{dir}/frame_{i:03}.png")).collect()
}

fn cycle_dir(index: u32) -> String {
    format!("cycles/{index:04}")
}

/// Writes `run` to `dir`, creating it (and parents) if needed.
///
/// Frames are stored as 8-bit PNG, so the round trip is exact for frames
/// whose samples are integers in `[0, 255]`; other frames are quantized.
pub fn save_manifest(run: &RunManifest, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    run.validate()?;
    let header = run.header();

    let mut file = header.manifest_file(run.resolution());
    // (relative path, frame) pairs to encode.
    let mut jobs: Vec<(String, &Frame)> = Vec::new();
    match &run.data {
        RunData::Cycles(cycles) => {
            let mut writer = CycleWriter::create(dir, header)?;
            for c in cycles {
                writer.push(c)?;
            }
            return writer.finish();
        }
        RunData::ForceRamp { frames, forces } => {
            let names = frame_names("frames", frames.len());
            jobs.extend(names.iter().cloned().zip(frames.frames()));
            file.frames = Some(names);
            file.frame_timestamps_s = frames.timestamps().map(<[f64]>::to_vec);
            file.forces = Some(FORCES_FILE.to_string());
            write_forces(&dir.join(FORCES_FILE), forces, dir)?;
        }
        RunData::Surface { loaded, unloaded } => {
            let l = frame_names("loaded", loaded.len());
            let u = frame_names("unloaded", unloaded.len());
            jobs.extend(l.iter().cloned().zip(loaded.frames()));
            jobs.extend(u.iter().cloned().zip(unloaded.frames()));
            file.loaded = Some(l);
            file.unloaded = Some(u);
        }
    }

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    jobs.par_iter()
        .try_for_each(|(rel, frame)| write_png(&dir.join(rel), frame))?;
    write_metadata(dir, &file, run.truth.as_ref())
}

fn read_manifest_file(dir: &Path) -> Result<(ManifestFile, RunHeader)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(Error::MissingFile(manifest_path));
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let mut file: ManifestFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let field = if path == "." {
            missing_field_name(&inner.to_string()).unwrap_or_else(|| "manifest".into())
        } else {
            path
        };
        Error::schema(field, inner.to_string())
    })?;

    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::schema(
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", file.schema_version),
        ));
    }
    let parameters = std::mem::take(&mut file.parameters);
    let protocol = Protocol::from_parameters(file.protocol, parameters)?;

    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.is_file() {
        let text = fs::read_to_string(&truth_path).map_err(|e| Error::io(&truth_path, e))?;
        Some(
            serde_json::from_str(&text)
                .map_err(|e| Error::schema(TRUTH_FILE, e.to_string()))?,
        )
    } else {
        None
    };
    let header = RunHeader {
        protocol,
        material_label: file.material_label.clone(),
        sample_id: file.sample_id.clone(),
        mm_per_pixel: file.mm_per_pixel,
        fps: file.fps,
        truth,
    };
    header.check_calibration()?;
    Ok((file, header))
}

fn read_stack(dir: &Path, file: &ManifestFile, names: &[String], context: String) -> Result<FrameStack> {
    let resolution = (file.resolution.w, file.resolution.h);
    if names.is_empty() {
        return Err(Error::schema(context, "frame list is empty"));
    }
    let frames = names
        .par_iter()
        .map(|n| read_png(&dir.join(n)))
        .collect::<Result<Vec<_>>>()?;
    for f in &frames {
        if f.dims() != resolution {
            return Err(Error::DimensionMismatch {
                context,
                expected: resolution,
                found: f.dims(),
            });
        }
    }
    FrameStack::new(frames, file.fps)
}

fn read_cycle(dir: &Path, file: &ManifestFile, e: &CycleEntry) -> Result<CycleRecord> {
    let unloaded = read_stack(dir, file, &e.unloaded, format!("cycle {} unloaded stack", e.index))?;
    let loaded = e
        .loaded
        .as_ref()
        .map(|l| read_stack(dir, file, l, format!("cycle {} loaded stack", e.index)))
        .transpose()?;
    Ok(CycleRecord {
        cycle_index: e.index,
        distance_m: e.distance_m,
        unloaded,
        loaded,
    })
}

fn cycle_entries(file: &ManifestFile) -> Result<&[CycleEntry]> {
    file.cycles
        .as_deref()
        .ok_or_else(|| Error::schema("cycles", format!("required for {} runs", file.protocol)))
}

/// Reads and fully validates the run stored in `dir`.
pub fn load_manifest(dir: impl AsRef<Path>) -> Result<RunManifest> {
    let dir = dir.as_ref();
    let (file, header) = read_manifest_file(dir)?;

    let data = match file.protocol {
        k if k.is_resilience() => {
            let cycles = cycle_entries(&file)?
                .par_iter()
                .map(|e| read_cycle(dir, &file, e))
                .collect::<Result<Vec<_>>>()?;
            RunData::Cycles(cycles)
        }
        ProtocolKind::ForceSensitivity => {
            let names = file
                .frames
                .as_ref()
                .ok_or_else(|| Error::schema("frames", "required for force_sensitivity runs"))?;
            let timestamps = file.frame_timestamps_s.clone().ok_or_else(|| {
                Error::schema("frame_timestamps_s", "required for force_sensitivity runs")
            })?;
            let stack = read_stack(dir, &file, names, "force ramp frames".into())?;
            let frames =
                FrameStack::with_timestamps(stack.frames().to_vec(), file.fps, timestamps)?;
            let forces_name = file.forces.clone().unwrap_or_else(|| FORCES_FILE.to_string());
            let forces = read_forces(&dir.join(forces_name))?;
            RunData::ForceRamp { frames, forces }
        }
        _ => {
            let loaded = file
                .loaded
                .as_ref()
                .ok_or_else(|| Error::schema("loaded", "required for spatial_sensitivity runs"))?;
            let unloaded = file.unloaded.as_ref().ok_or_else(|| {
                Error::schema("unloaded", "required for spatial_sensitivity runs")
            })?;
            RunData::Surface {
                loaded: read_stack(dir, &file, loaded, "loaded surface stack".into())?,
                unloaded: read_stack(dir, &file, unloaded, "unloaded surface stack".into())?,
            }
        }
    };

    let mut run = RunManifest::from_parts(header, data);
    run.source = Some(dir.to_path_buf());
    run.validate()?;
    Ok(run)
}

/// Reads a resilience run one cycle at a time, handing each validated cycle
/// to `f` in order. Returns the run's header.
pub fn stream_cycles(
    dir: impl AsRef<Path>,
    mut f: impl FnMut(CycleRecord) -> Result<()>,
) -> Result<RunHeader> {
    let dir = dir.as_ref();
    let (file, header) = read_manifest_file(dir)?;
    let kind = file.protocol;
    if !kind.is_resilience() {
        return Err(Error::Validation(format!("{kind} runs are not recorded in cycles")));
    }
    let entries = cycle_entries(&file)?;
    if entries.is_empty() {
        return Err(Error::Validation("resilience run has no cycles".into()));
    }
    let dims = (file.resolution.w, file.resolution.h);
    let mut previous = 0;
    for e in entries {
        let c = read_cycle(dir, &file, e)?;
        check_cycle(kind, dims, previous, &c)?;
        previous = c.cycle_index;
        f(c)?;
    }
    Ok(header)
}

/// Reads only the header of the run stored in `dir`.
pub fn read_header(dir: impl AsRef<Path>) -> Result<RunHeader> {
    read_manifest_file(dir.as_ref()).map(|(_, h)| h)
}

/// Loads every run directory directly below `dir`, sorted by directory name.
pub fn load_sweep(dir: impl AsRef<Path>) -> Result<Vec<RunManifest>> {
    run_dirs(dir)?.par_iter().map(load_manifest).collect()
}

/// Subdirectories of `dir` that hold a run, sorted by name.
pub fn run_dirs(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(MANIFEST_FILE).is_file())
        .collect();
    subdirs.sort();
    Ok(subdirs)
}

fn missing_field_name(message: &str) -> Option<String> {
    let rest = message.strip_prefix("missing field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_png(path: &Path, frame: &Frame) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let (w, h) = frame.dims();
    let bytes: Vec<u8> = frame
        .samples()
        .iter()
        .map(|&v| super::frame::quantize_sample(v) as u8)
        .collect();
    image::save_buffer_with_format(
        path,
        &bytes,
        w as u32,
        h as u32,
        image::ExtendedColorType::Rgb8,
        image::ImageFormat::Png,
    )
    .map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

/// Decodes an image file into a frame, dropping any alpha channel.
pub fn read_png(path: &Path) -> Result<Frame> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb.into_raw().into_iter().map(f64::from).collect();
    Frame::new(w as usize, h as usize, data)
}

fn write_forces(path: &Path, forces: &[LoadSample], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for s in forces {
        w.serialize(s).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a `timestamp_s,fx_n,fy_n,fz_n` force log.
pub fn read_forces(path: &Path) -> Result<Vec<LoadSample>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .map(|rec| rec.map_err(|e| csv_error(path, e)))
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}
