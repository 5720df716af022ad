use crate::error::{Error, Result};

/// Number of color channels carried by every frame.
pub const CHANNELS: usize = 3;

/// An RGB sensor image with real-valued intensities.
///
/// Pixels are stored row-major with interleaved channels, so the value at
/// column `x`, row `y`, channel `c` lives at `(y * width + x) * 3 + c`.
/// Values read from 8-bit files are integers in `[0, 255]`; anything derived
/// by arithmetic (averages, differences, filtered images) may be fractional
/// or negative and is only quantized on export.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Argument(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width * height * CHANNELS;
        if data.len() != expected {
            return Err(Error::Argument(format!(
                "{width}x{height} frame needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A frame with every sample set to `value`.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height * CHANNELS])
    }

    /// Builds a frame by evaluating `f(x, y, c)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                for c in 0..CHANNELS {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn samples(&self) -> &[f64] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        self.data[(y * self.width + x) * CHANNELS + c] = value;
    }

    /// Applies `f` to every sample in place.
    pub fn map_in_place(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    /// Adds a constant to every sample.
    pub fn offset(&self, k: f64) -> Frame {
        let mut out = self.clone();
        out.map_in_place(|v| v + k);
        out
    }

    pub(crate) fn ensure_same_dims(&self, other: &Frame, context: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                context: context.to_string(),
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    /// Rounds and clamps every sample to the 8-bit range, as a camera would record it.
    pub fn quantized(&self) -> Frame {
        let mut out = self.clone();
        out.map_in_place(quantize_sample);
        out
    }

    /// True when every sample is an integer in `[0, 255]`.
    pub fn is_8bit(&self) -> bool {
        self.data
            .iter()
            .all(|&v| (0.0..=255.0).contains(&v) && v.fract() == 0.0)
    }

    /// Extracts the `width`×`height` region whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, width: usize, height: usize) -> Result<Frame> {
        if width == 0 || height == 0 || x + width > self.width || y + height > self.height {
            return Err(Error::Argument(format!(
                "crop {width}x{height}+{x}+{y} exceeds {}x{} frame",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for row in y..y + height {
            let start = (row * self.width + x) * CHANNELS;
            data.extend_from_slice(&self.data[start..start + width * CHANNELS]);
        }
        Frame::new(width, height, data)
    }
}

pub(crate) fn quantize_sample(v: f64) -> f64 {
    v.round().clamp(0.0, 255.0)
}

/// An ordered sequence of equally sized frames, optionally timestamped.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    frames: Vec<Frame>,
    nominal_fps: f64,
    timestamps: Option<Vec<f64>>,
}

impl FrameStack {
    pub fn new(frames: Vec<Frame>, nominal_fps: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Argument("frame stack must not be empty".into()))?;
        for (i, f) in frames.iter().enumerate().skip(1) {
            first.ensure_same_dims(f, &format!("frame {i} of stack"))?;
        }
        Ok(Self {
            frames,
            nominal_fps,
            timestamps: None,
        })
    }

    /// A stack whose frames carry acquisition times in seconds.
    ///
    /// Timestamps must be finite and strictly increasing.
    pub fn with_timestamps(frames: Vec<Frame>, nominal_fps: f64, timestamps: Vec<f64>) -> Result<Self> {
        let mut stack = Self::new(frames, nominal_fps)?;
        if timestamps.len() != stack.frames.len() {
            return Err(Error::Validation(format!(
                "{} timestamps for {} frames",
                timestamps.len(),
                stack.frames.len()
            )));
        }
        ensure_strictly_increasing(&timestamps, "frame timestamps")?;
        stack.timestamps = Some(timestamps);
        Ok(stack)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn nominal_fps(&self) -> f64 {
        self.nominal_fps
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Adds a constant to every sample of every frame.
    pub fn offset(&self, k: f64) -> FrameStack {
        FrameStack {
            frames: self.frames.iter().map(|f| f.offset(k)).collect(),
            nominal_fps: self.nominal_fps,
            timestamps: self.timestamps.clone(),
        }
    }
}

pub(crate) fn ensure_strictly_increasing(values: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("{what}: entry {bad} is not finite")));
    }
    if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Validation(format!(
            "{what} must be strictly increasing (entry {} = {} follows {})",
            i + 1,
            values[i + 1],
            values[i]
        )));
    }
    Ok(())
}
