use serde::{Deserialize, Serialize};

use super::{splitmix64, WearSusceptibility};
use crate::error::{Error, Result};
use crate::model::{Frame, CHANNELS};

/// Damage mechanisms that can be injected into a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WearMode {
    /// Dark disk where the gel is pierced.
    Puncture,
    /// Elongated dark streak.
    Tear,
    /// Ring-shaped brightness shift where the gel lifts off its window.
    Delamination,
    /// Accumulating multiplicative speckle from surface particles wearing away.
    AbrasionSpeckle,
}

impl WearMode {
    pub fn name(self) -> &'static str {
        match self {
            WearMode::Puncture => "puncture",
            WearMode::Tear => "tear",
            WearMode::Delamination => "delamination",
            WearMode::AbrasionSpeckle => "abrasion_speckle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            WearMode::Puncture,
            WearMode::Tear,
            WearMode::Delamination,
            WearMode::AbrasionSpeckle,
        ]
        .into_iter()
        .find(|m| m.name() == name)
    }

    fn default_growth(self) -> Growth {
        match self {
            WearMode::Puncture => Growth::Step,
            _ => Growth::Linear,
        }
    }

    fn susceptibility(self, s: &WearSusceptibility) -> f64 {
        match self {
            WearMode::Puncture => s.puncture,
            WearMode::Tear => s.tear,
            WearMode::Delamination => s.delamination,
            WearMode::AbrasionSpeckle => s.abrasion,
        }
    }
}

/// How severity develops after onset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Full severity from the onset cycle on.
    Step,
    /// Rises linearly from onset to reach full severity at the final cycle.
    Linear,
}

/// A failure injected at a given cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WearEvent {
    pub mode: WearMode,
    /// 1-based cycle at which the damage first appears.
    pub onset_cycle: u32,
    /// Final severity in `[0, 1]`.
    pub severity: f64,
    /// Pixel centre of the damage.
    pub x: f64,
    pub y: f64,
    /// Defaults to a step for punctures and linear growth otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<Growth>,
}

impl WearEvent {
    pub fn new(mode: WearMode, onset_cycle: u32, severity: f64, x: f64, y: f64) -> Self {
        Self {
            mode,
            onset_cycle,
            severity,
            x,
            y,
            growth: None,
        }
    }

    pub fn validate(&self, final_cycle: u32) -> Result<()> {
        if self.onset_cycle < 1 {
            return Err(Error::Argument("wear onset cycle must be at least 1".into()));
        }
        if self.onset_cycle > final_cycle {
            return Err(Error::Argument(format!(
                "{} onset at cycle {} is beyond the final cycle {final_cycle}",
                self.mode.name(),
                self.onset_cycle
            )));
        }
        if !(0.0..=1.0).contains(&self.severity) {
            return Err(Error::Argument(format!(
                "wear severity must lie in [0, 1], got {}",
                self.severity
            )));
        }
        Ok(())
    }

    /// Severity in effect at `cycle`; zero before onset, nondecreasing after.
    pub fn severity_at(&self, cycle: u32, final_cycle: u32) -> f64 {
        if cycle < self.onset_cycle {
            return 0.0;
        }
        match self.growth.unwrap_or(self.mode.default_growth()) {
            Growth::Step => self.severity,
            Growth::Linear => {
                let span = (final_cycle - self.onset_cycle + 1) as f64;
                let done = (cycle.min(final_cycle) - self.onset_cycle + 1) as f64;
                self.severity * (done / span)
            }
        }
    }
}

/// Uniform value in `[0, 1)` fixed per pixel and event.
fn pixel_hash(x: usize, y: usize, salt: u64) -> f64 {
    let h = splitmix64(salt ^ ((y as u64) << 32 | x as u64));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Applies every event's damage, at its severity for `cycle`, to a clean frame.
pub(crate) fn apply_wear(
    frame: &mut Frame,
    events: &[WearEvent],
    susceptibility: &WearSusceptibility,
    cycle: u32,
    final_cycle: u32,
) {
    let (w, h) = frame.dims();
    let scale = w as f64 / 320.0;
    for (i, e) in events.iter().enumerate() {
        let s = (e.severity_at(cycle, final_cycle) * e.mode.susceptibility(susceptibility)).min(1.0);
        if s <= 0.0 {
            continue;
        }
        match e.mode {
            WearMode::Puncture => {
                let r = (4.0 + 12.0 * s) * scale;
                let gain = 1.0 - 0.85 * s;
                for_each_in_box(w, h, e.x, e.y, r, |x, y| {
                    if (x as f64 - e.x).powi(2) + (y as f64 - e.y).powi(2) <= r * r {
                        scale_pixel(frame, x, y, gain);
                    }
                });
            }
            WearMode::Tear => {
                let len = (0.05 + 0.35 * s) * w as f64;
                let half_width = 1.5 * scale;
                let (dx, dy) = (30f64.to_radians().cos(), 30f64.to_radians().sin());
                let gain = 1.0 - 0.7 * s;
                for_each_in_box(w, h, e.x, e.y, len, |x, y| {
                    let (px, py) = (x as f64 - e.x, y as f64 - e.y);
                    let along = px * dx + py * dy;
                    let across = (-px * dy + py * dx).abs();
                    if (0.0..=len).contains(&along) && across <= half_width {
                        scale_pixel(frame, x, y, gain);
                    }
                });
            }
            WearMode::Delamination => {
                let radius = 0.25 * w as f64 * (0.5 + s);
                let width = 6.0 * scale;
                let boost = 35.0 * s;
                for_each_in_box(w, h, e.x, e.y, radius + 4.0 * width, |x, y| {
                    let d = ((x as f64 - e.x).powi(2) + (y as f64 - e.y).powi(2)).sqrt();
                    let shift = boost * (-((d - radius) / width).powi(2) / 2.0).exp();
                    for c in 0..CHANNELS {
                        frame.set(x, y, c, frame.get(x, y, c) + shift);
                    }
                });
            }
            WearMode::AbrasionSpeckle => {
                let density = 0.08 * s;
                let salt = splitmix64(i as u64 + 0xA5A5);
                for y in 0..h {
                    for x in 0..w {
                        let u = pixel_hash(x, y, salt);
                        if u < density {
                            // Darkening fixed per pixel so speckle accumulates consistently.
                            scale_pixel(frame, x, y, 0.55 + 0.3 * pixel_hash(x, y, !salt));
                        }
                    }
                }
            }
        }
    }
}

fn scale_pixel(frame: &mut Frame, x: usize, y: usize, gain: f64) {
    for c in 0..CHANNELS {
        frame.set(x, y, c, frame.get(x, y, c) * gain);
    }
}

fn for_each_in_box(w: usize, h: usize, cx: f64, cy: f64, r: f64, mut f: impl FnMut(usize, usize)) {
    let x0 = (cx - r).floor().max(0.0) as usize;
    let y0 = (cy - r).floor().max(0.0) as usize;
    let x1 = ((cx + r).ceil() as i64).min(w as i64 - 1);
    let y1 = ((cy + r).ceil() as i64).min(h as i64 - 1);
    if x1 < 0 || y1 < 0 {
        return;
    }
    for y in y0..=y1 as usize {
        for x in x0..=x1 as usize {
            f(x, y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::MaterialProfile;

    #[test]
    fn severity_schedule() {
        let p = WearEvent::new(WearMode::Puncture, 300, 0.8, 0.0, 0.0);
        assert_eq!(p.severity_at(299, 1000), 0.0);
        assert_eq!(p.severity_at(300, 1000), 0.8);
        assert_eq!(p.severity_at(1000, 1000), 0.8);
        let d = WearEvent::new(WearMode::Delamination, 1, 1.0, 0.0, 0.0);
        assert!((d.severity_at(500, 1000) - 0.5).abs() < 1e-12);
        assert_eq!(d.severity_at(1000, 1000), 1.0);
        let mut last = 0.0;
        for c in 1..=1000 {
            let s = d.severity_at(c, 1000);
            assert!(s >= last);
            last = s;
        }
    }

    #[test]
    fn onset_validation() {
        let e = WearEvent::new(WearMode::Tear, 11, 0.5, 0.0, 0.0);
        assert!(e.validate(10).is_err());
        assert!(e.validate(11).is_ok());
        assert!(WearEvent::new(WearMode::Tear, 0, 0.5, 0.0, 0.0).validate(10).is_err());
        assert!(WearEvent::new(WearMode::Tear, 1, 1.5, 0.0, 0.0).validate(10).is_err());
    }

    #[test]
    fn each_mode_changes_the_frame_after_onset() {
        let sus = MaterialProfile::si_like().wear_susceptibility;
        for mode in [WearMode::Puncture, WearMode::Tear, WearMode::Delamination, WearMode::AbrasionSpeckle] {
            let base = Frame::filled(320, 240, 120.0).unwrap();
            let e = [WearEvent::new(mode, 5, 1.0, 160.0, 120.0)];
            let mut before = base.clone();
            apply_wear(&mut before, &e, &sus, 4, 10);
            assert_eq!(before, base, "{mode:?}");
            let mut after = base.clone();
            apply_wear(&mut after, &e, &sus, 10, 10);
            assert_ne!(after, base, "{mode:?}");
        }
    }

    #[test]
    fn speckle_accumulates() {
        let sus = MaterialProfile::si_like().wear_susceptibility;
        let e = [WearEvent::new(WearMode::AbrasionSpeckle, 1, 1.0, 0.0, 0.0)];
        let base = Frame::filled(64, 64, 100.0).unwrap();
        let count = |cycle| {
            let mut f = base.clone();
            apply_wear(&mut f, &e, &sus, cycle, 4);
            f.samples().iter().filter(|&&v| v != 100.0).count()
        };
        assert!(count(1) < count(2) && count(2) < count(4));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [WearMode::Puncture, WearMode::Tear, WearMode::Delamination, WearMode::AbrasionSpeckle] {
            assert_eq!(WearMode::from_name(m.name()), Some(m));
        }
    }
}
