use std::fs;
use std::path::{Path, PathBuf};

use tactile_core::metrics::{
    force_curve, saturation_force_windowed, ForceCurve, MaeSeries, MaeSeriesBuilder, SeriesPoint,
};
use tactile_core::model::{
    load_manifest, read_header, run_dirs, save_manifest, stream_cycles, CycleWriter, Protocol,
    ProtocolKind, RunData, SweepPlan,
};
use tactile_core::simulator::{
    generate_run_with, generate_sweep_run, recorded_cycles, run_header, simulate_cycles, sweep_run_name,
    sweep_surfaces, MaterialProfile, SimOptions, WearEvent, WearMode,
};
use tactile_core::spatial::{sweep_dir, write_snr_csv, SnrRecord};

use crate::config::AnalysisConfig;
use crate::error::CliError;
use crate::plot::{Chart, Series};
use crate::report::{
    ForceResults, Report, ResilienceResults, Results, RunInfo, SpatialResults,
};

fn prepare_out(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> tactile_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Largest step of `values`, skipping the first comparison against the reference cycle.
fn step_after_reference(series: &MaeSeries, values: &[f64]) -> Option<SeriesPoint> {
    if values.len() < 3 {
        return None;
    }
    let tail = MaeSeries {
        cycle_indices: series.cycle_indices[1..].to_vec(),
        distances_m: None,
        mae_unloaded: Vec::new(),
        mae_loaded: None,
    };
    tail.largest_step(&values[1..])
}

pub fn resilience(input: &Path, out: &Path, config: &AnalysisConfig) -> Result<MaeSeries, CliError> {
    let mut builder = MaeSeriesBuilder::new();
    let header = stream_cycles(input, |c| builder.push(&c).map(|_| ()))?;
    let series = builder.finish()?;
    prepare_out(out)?;

    write_file(&out.join("mae_series.csv"), &csv_bytes(|b| series.write_csv(b))?)?;

    let x: Vec<f64> = match &series.distances_m {
        Some(d) => d.clone(),
        None => series.cycle_indices.iter().map(|&c| c as f64).collect(),
    };
    let pairs = |v: &[f64]| x.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let mut chart = Chart::new(
        format!("{} {}: MAE", header.material_label, header.sample_id),
        if series.distances_m.is_some() { "abraded distance (m)" } else { "cycle" },
        "MAE (intensity units)",
    )
    .with_series(Series::new("unloaded", pairs(&series.mae_unloaded)));
    if let Some(l) = &series.mae_loaded {
        chart = chart.with_series(Series::new("loaded", pairs(l)));
    }
    write_file(&out.join("mae_vs_cycle.svg"), chart.to_svg().as_bytes())?;

    let loaded = series.mae_loaded.as_deref();
    let results = ResilienceResults {
        cycles: series.len(),
        final_mae_unloaded: *series.mae_unloaded.last().expect("non-empty series"),
        final_mae_loaded: loaded.and_then(|l| l.last().copied()),
        peak_unloaded: series.peak(&series.mae_unloaded).expect("non-empty series"),
        peak_loaded: loaded.and_then(|l| series.peak(l)),
        largest_step_unloaded: step_after_reference(&series, &series.mae_unloaded),
        largest_step_loaded: loaded.and_then(|l| step_after_reference(&series, l)),
        injected_wear: header.truth.as_ref().map(|t| t.wear_events.clone()).unwrap_or_default(),
    };
    let seed = header.truth.as_ref().map(|t| t.seed);
    Report::new("resilience", RunInfo::from_header(&header), config, input, seed, Results::Resilience(results))
        .write(&out.join("report.json"))?;
    Ok(series)
}

pub fn force(input: &Path, out: &Path, config: &AnalysisConfig) -> Result<ForceCurve, CliError> {
    let run = load_manifest(input)?;
    let RunData::ForceRamp { frames, forces } = &run.data else {
        return Err(CliError::Usage(format!(
            "{} holds a {} run, not a force_sensitivity run",
            input.display(),
            run.kind()
        )));
    };
    let curve = force_curve(frames, forces)?;
    let saturation =
        saturation_force_windowed(&curve, config.force.saturation_ratio, config.force.window_n)?;
    prepare_out(out)?;

    write_file(&out.join("force_curve.csv"), &csv_bytes(|b| curve.write_csv(b))?)?;
    let trace = |it: &mut dyn Iterator<Item = &tactile_core::metrics::ForceSample>| {
        it.map(|s| (s.force_n, s.mae)).collect::<Vec<_>>()
    };
    let chart = Chart::new(
        format!("{} {}: MAE vs force", run.material_label, run.sample_id),
        "normal force (N)",
        "MAE (intensity units)",
    )
    .with_series(Series::new("loading", trace(&mut curve.loading())))
    .with_series(Series::new("unloading", trace(&mut curve.unloading())));
    write_file(&out.join("mae_vs_force.svg"), chart.to_svg().as_bytes())?;

    let peak = curve
        .samples
        .iter()
        .max_by(|a, b| a.force_n.total_cmp(&b.force_n))
        .expect("force curve is non-empty");
    let results = ForceResults {
        samples: curve.samples.len(),
        loading_samples: curve.loading().count(),
        unloading_samples: curve.unloading().count(),
        peak_force_n: peak.force_n,
        peak_mae: curve.samples.iter().map(|s| s.mae).fold(0.0, f64::max),
        saturation_force_n: saturation,
    };
    let seed = run.truth.as_ref().map(|t| t.seed);
    Report::new("force", RunInfo::from_header(&run.header()), config, input, seed, Results::Force(results))
        .write(&out.join("report.json"))?;
    Ok(curve)
}

fn snr_panel(records: &[&SnrRecord], load: f64, by_amplitude: bool) -> Chart {
    let (what, unit) = if by_amplitude { ("amplitude", "amplitude (mm)") } else { ("period", "period (mm)") };
    let points = records
        .iter()
        .map(|r| {
            let x = if by_amplitude { r.ridge.amplitude_mm } else { r.ridge.period_mm };
            (x, r.snr_db.unwrap_or(f64::NAN))
        })
        .collect();
    Chart::new(format!("SNR vs {what} at {load} N"), unit, "SNR (dB)")
        .with_series(Series::new(format!("{load} N"), points))
}

pub fn spatial(input: &Path, out: &Path, config: &AnalysisConfig) -> Result<Vec<SnrRecord>, CliError> {
    let dirs = run_dirs(input)?;
    let Some(first) = dirs.first() else {
        return Err(CliError::Usage(format!("no run directories found in {}", input.display())));
    };
    let header = read_header(first)?;
    let records = sweep_dir(input, &config.pipeline)?;
    prepare_out(out)?;

    write_file(&out.join("snr_sweep.csv"), &csv_bytes(|b| write_snr_csv(&records, b))?)?;

    let mut loads: Vec<f64> = records.iter().map(|r| r.load_n).collect();
    loads.dedup();
    for &load in &loads {
        let at_load: Vec<&SnrRecord> = records.iter().filter(|r| r.load_n == load).collect();
        let max_period = at_load.iter().map(|r| r.ridge.period_mm).fold(f64::MIN, f64::max);
        let max_amp = at_load.iter().map(|r| r.ridge.amplitude_mm).fold(f64::MIN, f64::max);
        let mut amp_series: Vec<&SnrRecord> =
            at_load.iter().copied().filter(|r| r.ridge.period_mm == max_period).collect();
        amp_series.sort_by(|a, b| a.ridge.amplitude_mm.total_cmp(&b.ridge.amplitude_mm));
        let period_series: Vec<&SnrRecord> =
            at_load.iter().copied().filter(|r| r.ridge.amplitude_mm == max_amp).collect();
        write_file(
            &out.join(format!("snr_vs_amplitude_{load}N.svg")),
            snr_panel(&amp_series, load, true).to_svg().as_bytes(),
        )?;
        write_file(
            &out.join(format!("snr_vs_period_{load}N.svg")),
            snr_panel(&period_series, load, false).to_svg().as_bytes(),
        )?;
    }

    let run = RunInfo {
        material_label: header.material_label.clone(),
        sample_id: header.sample_id.clone(),
        protocol: ProtocolKind::SpatialSensitivity.name().to_string(),
        parameters: None,
    };
    let seed = header.truth.as_ref().map(|t| t.seed);
    let results = SpatialResults {
        runs: dirs.len(),
        records: records.clone(),
    };
    Report::new("spatial", run, config, input, seed, Results::Spatial(results))
        .write(&out.join("report.json"))?;
    Ok(records)
}

/// A `--wear` argument: `MODE@CYCLE:SEVERITY[@X,Y]`.
pub fn parse_wear(text: &str, width: usize, height: usize) -> Result<WearEvent, CliError> {
    let bad = |why: &str| {
        CliError::Usage(format!(
            "--wear expects MODE@CYCLE:SEVERITY[@X,Y], got {text:?}: {why}"
        ))
    };
    let mut parts = text.split('@');
    let mode_name = parts.next().unwrap_or_default();
    let mode = WearMode::from_name(mode_name).ok_or_else(|| {
        bad("mode must be one of puncture, tear, delamination, abrasion_speckle")
    })?;
    let timing = parts.next().ok_or_else(|| bad("missing cycle"))?;
    let (cycle, severity) = timing.split_once(':').ok_or_else(|| bad("missing severity"))?;
    let cycle: u32 = cycle.parse().map_err(|_| bad("cycle is not an integer"))?;
    let severity: f64 = severity.parse().map_err(|_| bad("severity is not a number"))?;
    let (x, y) = match parts.next() {
        Some(pos) => {
            let (x, y) = pos.split_once(',').ok_or_else(|| bad("location must be X,Y"))?;
            (
                x.parse().map_err(|_| bad("x is not a number"))?,
                y.parse().map_err(|_| bad("y is not a number"))?,
            )
        }
        None => (width as f64 / 2.0, height as f64 / 2.0),
    };
    if parts.next().is_some() {
        return Err(bad("too many fields"));
    }
    Ok(WearEvent::new(mode, cycle, severity, x, y))
}

pub struct SimulateRequest {
    pub protocol: String,
    pub material: String,
    pub seed: u64,
    pub out: PathBuf,
    pub cycles: Option<u32>,
    pub frames: Option<usize>,
    pub ramp_frames: Option<usize>,
    pub resolution: Option<(usize, usize)>,
    pub wear: Vec<String>,
}

pub fn parse_resolution(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--resolution expects WIDTHxHEIGHT, got {text:?}"));
    let (w, h) = text.split_once('x').ok_or_else(bad)?;
    Ok((w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?))
}

/// Writes a simulated run to `req.out`; spatial sensitivity writes the
/// standard sweep as one subdirectory per surface.
pub fn simulate(req: &SimulateRequest) -> Result<(), CliError> {
    let kind = ProtocolKind::from_name(&req.protocol).ok_or_else(|| {
        let names: Vec<&str> = ProtocolKind::ALL.iter().map(|k| k.name()).collect();
        CliError::Usage(format!(
            "unknown protocol preset {:?}; available presets: {}",
            req.protocol,
            names.join(", ")
        ))
    })?;
    let material = MaterialProfile::preset(&req.material).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown material preset {:?}; available presets: {}",
            req.material,
            MaterialProfile::PRESETS.join(", ")
        ))
    })?;
    let mut opts = SimOptions::for_protocol(kind);
    if let Some((w, h)) = req.resolution {
        opts.width = w;
        opts.height = h;
    }
    if let Some(n) = req.frames {
        opts.frames_per_stack = n;
    }
    if let Some(n) = req.ramp_frames {
        opts.ramp_frames = n;
    }
    opts.cycles = req.cycles;
    let wear = req
        .wear
        .iter()
        .map(|w| parse_wear(w, opts.width, opts.height))
        .collect::<Result<Vec<_>, _>>()?;
    let protocol = Protocol::preset(kind);

    if kind.is_resilience() {
        let header = run_header(&protocol, &material, &wear, req.seed, &opts);
        let n = recorded_cycles(&protocol, &opts)?;
        for w in &wear {
            w.validate(n)?;
        }
        let mut writer = CycleWriter::create(&req.out, header)?;
        simulate_cycles(&protocol, &material, &wear, req.seed, &opts, |c| writer.push(&c))?;
        writer.finish()?;
    } else if kind == ProtocolKind::SpatialSensitivity {
        if !wear.is_empty() {
            return Err(CliError::Usage("--wear applies only to resilience protocols".into()));
        }
        for (i, surface) in sweep_surfaces(&SweepPlan::standard()).iter().enumerate() {
            let run = generate_sweep_run(surface, i, &material, req.seed, &opts)?;
            save_manifest(&run, req.out.join(sweep_run_name(i, surface)))?;
        }
    } else {
        let run = generate_run_with(&protocol, &material, &wear, req.seed, &opts)?;
        save_manifest(&run, &req.out)?;
    }
    Ok(())
}
