//! Frame averaging, the MAE wear metric, and force-sensitivity curves.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ensure_increasing, CycleRecord, Frame, FrameStack, LoadSample, RunData, RunManifest,
};

/// Width of the least-squares window used for local slopes, in newtons.
pub const SATURATION_WINDOW_N: f64 = 5.0;

/// Half-width (in samples) of the moving average used to tag loading/unloading.
const PHASE_HALF_WINDOW: usize = 2;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Per-pixel, per-channel arithmetic mean of a stack.
///
/// Accumulates deviations from the first frame, so a stack of identical
/// frames averages back to that frame exactly.
pub fn average_frames(stack: &FrameStack) -> Result<Frame> {
    let frames = stack.frames();
    let first = frames
        .first()
        .ok_or_else(|| Error::Argument("cannot average an empty stack".into()))?;
    if frames.len() == 1 {
        return Ok(first.clone());
    }
    let pivot = first.samples();
    let mut acc = vec![0.0; pivot.len()];
    for f in &frames[1..] {
        first.ensure_same_dims(f, "averaged stack")?;
        for ((a, &v), &p) in acc.iter_mut().zip(f.samples()).zip(pivot) {
            *a += v - p;
        }
    }
    let n = frames.len() as f64;
    let data = acc.iter().zip(pivot).map(|(&a, &p)| p + a / n).collect();
    Frame::new(first.width(), first.height(), data)
}

/// Mean absolute difference over every pixel and channel.
///
/// Summation runs in row-major order through a compensated accumulator, so
/// the result is reproducible bit for bit.
pub fn mae(current: &Frame, reference: &Frame) -> Result<f64> {
    reference.ensure_same_dims(current, "MAE operands")?;
    let mut sum = CompensatedSum::default();
    for (&a, &b) in current.samples().iter().zip(reference.samples()) {
        sum.add((a - b).abs());
    }
    Ok(sum.value() / current.samples().len() as f64)
}

/// MAE of every cycle against cycle 1, for unloaded and (if recorded) loaded frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeSeries {
    pub cycle_indices: Vec<u32>,
    /// Cumulative abraded distance per entry, for abrasion runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances_m: Option<Vec<f64>>,
    pub mae_unloaded: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mae_loaded: Option<Vec<f64>>,
}

/// Where in a series the largest value or jump occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub cycle: u32,
    pub value: f64,
}

impl MaeSeries {
    pub fn len(&self) -> usize {
        self.cycle_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle_indices.is_empty()
    }

    /// Cycle with the largest MAE in `values` (earliest on ties).
    pub fn peak(&self, values: &[f64]) -> Option<SeriesPoint> {
        let mut best: Option<SeriesPoint> = None;
        for (&cycle, &value) in self.cycle_indices.iter().zip(values) {
            if best.is_none_or(|b| value > b.value) {
                best = Some(SeriesPoint { cycle, value });
            }
        }
        best
    }

    /// Largest increase between consecutive entries, reported at the later cycle.
    pub fn largest_step(&self, values: &[f64]) -> Option<SeriesPoint> {
        let mut best: Option<SeriesPoint> = None;
        for (i, w) in values.windows(2).enumerate() {
            let value = w[1] - w[0];
            if best.is_none_or(|b| value > b.value) {
                best = Some(SeriesPoint {
                    cycle: self.cycle_indices[i + 1],
                    value,
                });
            }
        }
        best
    }

    /// Writes `cycle[,distance_m],mae_unloaded[,mae_loaded]`, omitting absent columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Validation(format!("CSV export failed: {e}"));
        let mut header = vec!["cycle"];
        if self.distances_m.is_some() {
            header.push("distance_m");
        }
        header.push("mae_unloaded");
        if self.mae_loaded.is_some() {
            header.push("mae_loaded");
        }
        w.write_record(&header).map_err(io)?;
        for (i, cycle) in self.cycle_indices.iter().enumerate() {
            let mut rec = vec![cycle.to_string()];
            if let Some(d) = &self.distances_m {
                rec.push(fmt_f64(d[i]));
            }
            rec.push(fmt_f64(self.mae_unloaded[i]));
            if let Some(l) = &self.mae_loaded {
                rec.push(fmt_f64(l[i]));
            }
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Validation(format!("CSV export failed: {e}")))
    }
}

/// Shortest decimal representation that round-trips, e.g. `0.0`, `5.25`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Computes the wear series of a cyclic or abrasion run.
///
/// Each cycle's stacks are averaged first and the averages compared against
/// cycle 1's averages. Cycles are evaluated in parallel.
pub fn mae_series(run: &RunManifest) -> Result<MaeSeries> {
    if !run.kind().is_resilience() {
        return Err(Error::Argument(format!(
            "MAE series needs a resilience run, got {}",
            run.kind()
        )));
    }
    let RunData::Cycles(cycles) = &run.data else {
        return Err(Error::Validation("resilience run holds no cycle records".into()));
    };
    let first = cycles
        .first()
        .ok_or_else(|| Error::Argument("resilience run has no cycles".into()))?;
    let with_loaded = first.loaded.is_some();
    if let Some(c) = cycles.iter().find(|c| c.loaded.is_some() != with_loaded) {
        return Err(Error::Validation(format!(
            "cycle {} {} loaded frames but cycle {} {}",
            c.cycle_index,
            if c.loaded.is_some() { "has" } else { "lacks" },
            first.cycle_index,
            if with_loaded { "has them" } else { "does not" }
        )));
    }

    let ref_unloaded = average_frames(&first.unloaded)?;
    let ref_loaded = first.loaded.as_ref().map(average_frames).transpose()?;

    let rows: Vec<(f64, Option<f64>)> = cycles
        .par_iter()
        .map(|c| {
            let u = mae(&average_frames(&c.unloaded)?, &ref_unloaded)?;
            let l = match (&c.loaded, &ref_loaded) {
                (Some(stack), Some(reference)) => Some(mae(&average_frames(stack)?, reference)?),
                _ => None,
            };
            Ok((u, l))
        })
        .collect::<Result<_>>()?;

    let distances = cycles
        .iter()
        .map(|c| c.distance_m)
        .collect::<Option<Vec<f64>>>();
    Ok(MaeSeries {
        cycle_indices: cycles.iter().map(|c| c.cycle_index).collect(),
        distances_m: distances,
        mae_unloaded: rows.iter().map(|r| r.0).collect(),
        mae_loaded: with_loaded.then(|| rows.iter().map(|r| r.1.unwrap_or(0.0)).collect()),
    })
}

/// Builds a wear series from cycles supplied one at a time, in order.
///
/// Produces the same series as [`mae_series`] while holding only cycle 1's
/// averaged frames in memory.
#[derive(Debug, Default)]
pub struct MaeSeriesBuilder {
    reference: Option<(Frame, Option<Frame>)>,
    first_cycle: u32,
    cycle_indices: Vec<u32>,
    distances: Vec<Option<f64>>,
    unloaded: Vec<f64>,
    loaded: Vec<f64>,
}

impl MaeSeriesBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one cycle and returns its `(unloaded, loaded)` MAE.
    pub fn push(&mut self, c: &CycleRecord) -> Result<(f64, Option<f64>)> {
        let avg_u = average_frames(&c.unloaded)?;
        let avg_l = c.loaded.as_ref().map(average_frames).transpose()?;
        let Some((ref_u, ref_l)) = &self.reference else {
            self.first_cycle = c.cycle_index;
            let point = (0.0, avg_l.as_ref().map(|_| 0.0));
            self.record(c, point);
            self.reference = Some((avg_u, avg_l));
            return Ok(point);
        };
        if c.loaded.is_some() != ref_l.is_some() {
            return Err(Error::Validation(format!(
                "cycle {} {} loaded frames but cycle {} {}",
                c.cycle_index,
                if c.loaded.is_some() { "has" } else { "lacks" },
                self.first_cycle,
                if ref_l.is_some() { "has them" } else { "does not" }
            )));
        }
        let u = mae(&avg_u, ref_u)?;
        let l = match (&avg_l, ref_l) {
            (Some(a), Some(r)) => Some(mae(a, r)?),
            _ => None,
        };
        self.record(c, (u, l));
        Ok((u, l))
    }

    fn record(&mut self, c: &CycleRecord, (u, l): (f64, Option<f64>)) {
        self.cycle_indices.push(c.cycle_index);
        self.distances.push(c.distance_m);
        self.unloaded.push(u);
        if let Some(l) = l {
            self.loaded.push(l);
        }
    }

    pub fn finish(self) -> Result<MaeSeries> {
        let Some((_, ref_l)) = self.reference else {
            return Err(Error::Argument("resilience run has no cycles".into()));
        };
        Ok(MaeSeries {
            cycle_indices: self.cycle_indices,
            distances_m: self.distances.into_iter().collect(),
            mae_unloaded: self.unloaded,
            mae_loaded: ref_l.map(|_| self.loaded),
        })
    }
}

/// Whether the normal force was rising or falling when a frame was captured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Loading,
    Unloading,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Loading => "loading",
            Phase::Unloading => "unloading",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceSample {
    pub t_s: f64,
    pub force_n: f64,
    pub phase: Phase,
    pub mae: f64,
}

/// Image change versus normal force over one load/unload ramp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceCurve {
    /// In acquisition order.
    pub samples: Vec<ForceSample>,
}

impl ForceCurve {
    pub fn loading(&self) -> impl Iterator<Item = &ForceSample> {
        self.samples.iter().filter(|s| s.phase == Phase::Loading)
    }

    pub fn unloading(&self) -> impl Iterator<Item = &ForceSample> {
        self.samples.iter().filter(|s| s.phase == Phase::Unloading)
    }

    /// Writes `t_s,force_n,phase,mae`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Validation(format!("CSV export failed: {e}"));
        w.write_record(["t_s", "force_n", "phase", "mae"]).map_err(err)?;
        for s in &self.samples {
            w.write_record([
                fmt_f64(s.t_s),
                fmt_f64(s.force_n),
                s.phase.name().to_string(),
                fmt_f64(s.mae),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Validation(format!("CSV export failed: {e}")))
    }
}

/// Linear interpolation of `fz` at time `t`; `t` must lie within the log.
fn interpolate_fz(forces: &[LoadSample], t: f64) -> f64 {
    let idx = forces.partition_point(|s| s.timestamp <= t);
    if idx == 0 {
        return forces[0].fz;
    }
    if idx == forces.len() {
        return forces[forces.len() - 1].fz;
    }
    let (a, b) = (&forces[idx - 1], &forces[idx]);
    let w = (t - a.timestamp) / (b.timestamp - a.timestamp);
    a.fz + w * (b.fz - a.fz)
}

/// Tags each sample by the sign of a centred 5-sample moving average of the
/// force derivative. A zero derivative keeps the previous tag.
fn tag_phases(forces: &[f64]) -> Vec<Phase> {
    let n = forces.len();
    let mut phases = Vec::with_capacity(n);
    let mut current = Phase::Loading;
    for i in 0..n {
        let lo = i.saturating_sub(PHASE_HALF_WINDOW);
        let hi = (i + PHASE_HALF_WINDOW).min(n - 1);
        if hi > lo {
            // Mean of the first differences in the window telescopes to this.
            let d = (forces[hi] - forces[lo]) / (hi - lo) as f64;
            if d > 0.0 {
                current = Phase::Loading;
            } else if d < 0.0 {
                current = Phase::Unloading;
            }
        }
        phases.push(current);
    }
    phases
}

/// Pairs every frame inside the force log's time span with the interpolated
/// normal force and its MAE against the stack's first frame.
pub fn force_curve(frames: &FrameStack, forces: &[LoadSample]) -> Result<ForceCurve> {
    let timestamps = frames
        .timestamps()
        .ok_or_else(|| Error::Validation("force curve frames need timestamps".into()))?;
    if forces.is_empty() {
        return Err(Error::Argument("force log is empty".into()));
    }
    let ft: Vec<f64> = forces.iter().map(|s| s.timestamp).collect();
    ensure_increasing(&ft, "force log timestamps")?;

    let (t0, t1) = (ft[0], ft[ft.len() - 1]);
    let selected: Vec<usize> = (0..timestamps.len())
        .filter(|&i| timestamps[i] >= t0 && timestamps[i] <= t1)
        .collect();
    if selected.is_empty() {
        return Err(Error::Alignment(format!(
            "frames span [{}, {}] s but the force log spans [{t0}, {t1}] s",
            timestamps[0],
            timestamps[timestamps.len() - 1]
        )));
    }

    let reference = &frames.frames()[0];
    let maes: Vec<f64> = selected
        .par_iter()
        .map(|&i| mae(&frames.frames()[i], reference))
        .collect::<Result<_>>()?;
    let fz: Vec<f64> = selected
        .iter()
        .map(|&i| interpolate_fz(forces, timestamps[i]))
        .collect();
    let phases = tag_phases(&fz);

    Ok(ForceCurve {
        samples: selected
            .iter()
            .enumerate()
            .map(|(k, &i)| ForceSample {
                t_s: timestamps[i],
                force_n: fz[k],
                phase: phases[k],
                mae: maes[k],
            })
            .collect(),
    })
}

/// Ordinary least-squares slope of `y` on `x`. `None` if `x` has no spread.
pub(crate) fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Force at which the loading curve flattens, using a 5 N slope window.
///
/// See [`saturation_force_windowed`].
pub fn saturation_force(curve: &ForceCurve, ratio_threshold: f64) -> Result<Option<f64>> {
    saturation_force_windowed(curve, ratio_threshold, SATURATION_WINDOW_N)
}

/// Slides a `window_n`-wide least-squares fit over the loading samples
/// (sorted by force) and returns the centre of the first window whose slope
/// drops below `ratio_threshold` times the slope of the lowest window.
///
/// The reference frame itself is left out when it leads the curve with a
/// zero MAE. Returns `None` when the curve never flattens, or when the
/// initial slope is not positive (nothing to saturate).
pub fn saturation_force_windowed(
    curve: &ForceCurve,
    ratio_threshold: f64,
    window_n: f64,
) -> Result<Option<f64>> {
    if !(ratio_threshold.is_finite() && ratio_threshold > 0.0) {
        return Err(Error::Argument(format!(
            "ratio threshold must be positive, got {ratio_threshold}"
        )));
    }
    if !(window_n.is_finite() && window_n > 0.0) {
        return Err(Error::Argument(format!("slope window must be positive, got {window_n}")));
    }
    // The reference frame is compared with itself; its zero MAE sits below
    // the noise floor of every other frame and would inflate the initial slope.
    let reference_t = curve.samples.first().filter(|s| s.mae == 0.0).map(|s| s.t_s);
    let mut pts: Vec<(f64, f64)> = curve
        .loading()
        .filter(|s| Some(s.t_s) != reference_t)
        .map(|s| (s.force_n, s.mae))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 10 {
        return Err(Error::Argument(format!(
            "saturation needs at least 10 loading samples, got {}",
            pts.len()
        )));
    }
    let (f_lo, f_hi) = (pts[0].0, pts[pts.len() - 1].0);
    if f_hi - f_lo < window_n {
        return Err(Error::Argument(format!(
            "loading samples span {:.3} N, less than the {window_n} N window",
            f_hi - f_lo
        )));
    }

    let window = |start: f64| -> &[(f64, f64)] {
        let a = pts.partition_point(|p| p.0 < start);
        let b = pts.partition_point(|p| p.0 <= start + window_n);
        &pts[a..b]
    };
    let initial = match ls_slope(window(f_lo)) {
        Some(s) if s > 0.0 => s,
        _ => return Ok(None),
    };
    for &(start, _) in &pts {
        if start + window_n > f_hi {
            break;
        }
        let w = window(start);
        if w.len() < 3 {
            continue;
        }
        if let Some(slope) = ls_slope(w) {
            if slope < ratio_threshold * initial {
                return Ok(Some(start + window_n / 2.0));
            }
        }
    }
    Ok(None)
}
