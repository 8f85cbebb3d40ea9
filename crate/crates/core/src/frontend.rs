//! Audio conditioning, sound-envelope extraction and jaw-movement event detection.
//!
//! The front end runs in three stages:
//!
//! 1. [`detrend`]: a first-order DC blocker on the raw samples.
//! 2. [`compute_envelope`]: full-wave rectification, a second-order Butterworth
//!    low-pass and block-average decimation down to the envelope rate.
//! 3. [`detect_events`]: the envelope is split into bumps at its valleys and a
//!    bump becomes a [`JmEvent`] when it rises above a time-varying threshold
//!    (a multiple of the exponential running mean plus a floor) for long enough.
//!
//! Everything here is a pure function over owned buffers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Corner frequency of the DC blocker used by [`detrend`].
pub const DEFAULT_DETREND_CUTOFF_HZ: f64 = 20.0;

/// Raw audio samples on the signed 16-bit scale, stored as reals.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAudio {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl RawAudio {
    /// Wraps samples that are already on the 16-bit amplitude scale.
    ///
    /// An empty buffer is accepted so that empty recordings can flow through the
    /// pipeline; the processing operations reject it where they need data.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn from_pcm16(samples: &[i16], sample_rate_hz: u32) -> Result<Self> {
        Self::new(samples.iter().map(|&s| f64::from(s)).collect(), sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    /// Samples rounded and saturated to 16-bit PCM.
    pub fn to_pcm16(&self) -> Vec<i16> {
        self.samples
            .iter()
            .map(|&s| s.round().clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16)
            .collect()
    }
}

/// Uniformly sampled, non-negative sound envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSignal {
    values: Vec<f64>,
    rate_hz: f64,
    origin_time_s: f64,
}

impl EnvelopeSignal {
    pub fn new(values: Vec<f64>, rate_hz: f64, origin_time_s: f64) -> Result<Self> {
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "envelope rate must be positive, got {rate_hz}"
            )));
        }
        if !origin_time_s.is_finite() {
            return Err(Error::InvalidInput("envelope origin must be finite".into()));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "envelope value {i} is negative or not finite"
            )));
        }
        Ok(Self {
            values,
            rate_hz,
            origin_time_s,
        })
    }

    /// An all-zero envelope of `len` samples.
    pub fn zeros(len: usize, rate_hz: f64, origin_time_s: f64) -> Result<Self> {
        Self::new(vec![0.0; len], rate_hz, origin_time_s)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn origin_time_s(&self) -> f64 {
        self.origin_time_s
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.rate_hz
    }

    /// Time of sample `index`.
    pub fn time_of(&self, index: usize) -> f64 {
        self.origin_time_s + index as f64 / self.rate_hz
    }

    /// Samples whose time falls in `[start_s, start_s + len_s)`.
    pub fn slice(&self, start_s: f64, len_s: f64) -> EnvelopeSignal {
        let first = ((start_s - self.origin_time_s) * self.rate_hz).ceil().max(0.0) as usize;
        let last = ((start_s + len_s - self.origin_time_s) * self.rate_hz)
            .ceil()
            .max(0.0) as usize;
        let first = first.min(self.values.len());
        let last = last.clamp(first, self.values.len());
        EnvelopeSignal {
            values: self.values[first..last].to_vec(),
            rate_hz: self.rate_hz,
            origin_time_s: self.origin_time_s + first as f64 / self.rate_hz,
        }
    }

    /// Same samples, every value multiplied by `factor` (which must be non-negative).
    pub fn scaled(&self, factor: f64) -> Result<EnvelopeSignal> {
        EnvelopeSignal::new(
            self.values.iter().map(|v| v * factor).collect(),
            self.rate_hz,
            self.origin_time_s,
        )
    }
}

/// One detected jaw movement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JmEvent {
    /// Onset, in seconds from the start of the recording.
    pub timestamp_s: f64,
    /// Peak-to-peak envelope amplitude.
    pub amplitude: f64,
    pub duration_s: f64,
}

impl JmEvent {
    pub fn new(timestamp_s: f64, amplitude: f64, duration_s: f64) -> Result<Self> {
        if !timestamp_s.is_finite() {
            return Err(Error::InvalidEvent("timestamp is not finite".into()));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidEvent(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        if !(duration_s > 0.0 && duration_s.is_finite()) {
            return Err(Error::InvalidEvent(format!(
                "duration must be positive, got {duration_s}"
            )));
        }
        Ok(Self {
            timestamp_s,
            amplitude,
            duration_s,
        })
    }
}

/// Tuning of the envelope extractor and the event detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub decimated_rate_hz: f64,
    pub lowpass_cutoff_hz: f64,
    pub detrend_cutoff_hz: f64,
    /// Multiplier on the running envelope mean.
    pub threshold_alpha: f64,
    /// Constant added to the scaled running mean, in envelope units.
    pub threshold_floor: f64,
    /// Time constant of the exponential running mean.
    pub threshold_window_s: f64,
    pub min_event_duration_s: f64,
    pub refractory_s: f64,
    /// Two neighbouring bumps stay separate only when the valley between them
    /// drops below `(1 - valley_depth)` times the smaller of the two peaks.
    pub valley_depth: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            decimated_rate_hz: 100.0,
            lowpass_cutoff_hz: 10.0,
            detrend_cutoff_hz: DEFAULT_DETREND_CUTOFF_HZ,
            threshold_alpha: 1.0,
            threshold_floor: 100.0,
            threshold_window_s: 10.0,
            min_event_duration_s: 0.1,
            refractory_s: 0.3,
            valley_depth: 0.5,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("decimated_rate_hz", self.decimated_rate_hz),
            ("lowpass_cutoff_hz", self.lowpass_cutoff_hz),
            ("detrend_cutoff_hz", self.detrend_cutoff_hz),
            ("threshold_window_s", self.threshold_window_s),
            ("min_event_duration_s", self.min_event_duration_s),
            ("refractory_s", self.refractory_s),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.threshold_alpha >= 0.0 && self.threshold_alpha.is_finite()) {
            return Err(Error::Config("threshold_alpha must be non-negative".into()));
        }
        if !(self.threshold_floor >= 0.0 && self.threshold_floor.is_finite()) {
            return Err(Error::Config("threshold_floor must be non-negative".into()));
        }
        if !(self.valley_depth > 0.0 && self.valley_depth <= 1.0) {
            return Err(Error::Config("valley_depth must be in (0, 1]".into()));
        }
        if self.lowpass_cutoff_hz > self.decimated_rate_hz / 2.0 {
            return Err(Error::Config(format!(
                "low-pass cutoff {} Hz is above the Nyquist frequency of the {} Hz envelope",
                self.lowpass_cutoff_hz, self.decimated_rate_hz
            )));
        }
        Ok(())
    }
}

/// Removes DC and slow drift with a first-order high-pass at
/// [`DEFAULT_DETREND_CUTOFF_HZ`].
pub fn detrend(audio: &RawAudio) -> Result<RawAudio> {
    detrend_with_cutoff(audio, DEFAULT_DETREND_CUTOFF_HZ)
}

/// DC blocker `y[n] = x[n] - x[n-1] + r * y[n-1]` with `r = exp(-2π fc / fs)`.
///
/// The filter state starts as if the first sample had been present forever, so
/// a constant input produces an exactly zero output.
pub fn detrend_with_cutoff(audio: &RawAudio, cutoff_hz: f64) -> Result<RawAudio> {
    if audio.is_empty() {
        return Err(Error::InvalidInput("cannot detrend empty audio".into()));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < f64::from(audio.sample_rate_hz) / 2.0) {
        return Err(Error::Config(format!(
            "detrend cutoff {cutoff_hz} Hz must lie in (0, fs/2)"
        )));
    }
    let r = (-2.0 * PI * cutoff_hz / f64::from(audio.sample_rate_hz)).exp();
    let mut prev_x = audio.samples[0];
    let mut prev_y = 0.0;
    let out = audio
        .samples
        .iter()
        .map(|&x| {
            let y = x - prev_x + r * prev_y;
            prev_x = x;
            prev_y = y;
            y
        })
        .collect();
    Ok(RawAudio {
        samples: out,
        sample_rate_hz: audio.sample_rate_hz,
    })
}

/// Second-order Butterworth low-pass (bilinear transform, transposed direct form II).
#[derive(Debug, Clone)]
pub(crate) struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    z1: f64,
    z2: f64,
}

impl Biquad {
    pub(crate) fn butterworth_lowpass(cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        let k = (PI * cutoff_hz / sample_rate_hz).tan();
        let sqrt2 = std::f64::consts::SQRT_2;
        let norm = 1.0 / (1.0 + sqrt2 * k + k * k);
        let b0 = k * k * norm;
        Self {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - sqrt2 * k + k * k) * norm,
            z1: 0.0,
            z2: 0.0,
        }
    }

    #[inline]
    pub(crate) fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.z1;
        self.z1 = self.b1 * x - self.a1 * y + self.z2;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }
}

/// Integer decimation factor for the configured envelope rate (nearest integer).
pub fn decimation_factor(sample_rate_hz: u32, cfg: &DetectorConfig) -> Result<usize> {
    let raw = f64::from(sample_rate_hz);
    if cfg.decimated_rate_hz > raw {
        return Err(Error::Config(format!(
            "envelope rate {} Hz exceeds the audio rate {raw} Hz",
            cfg.decimated_rate_hz
        )));
    }
    Ok(((raw / cfg.decimated_rate_hz).round() as usize).max(1))
}

/// Rectifies, low-pass filters and block-averages the audio down to the envelope rate.
///
/// `N` input samples produce `floor(N / factor)` envelope samples, where `factor`
/// is the nearest integer to `audio rate / cfg.decimated_rate_hz`.
pub fn compute_envelope(audio: &RawAudio, cfg: &DetectorConfig) -> Result<EnvelopeSignal> {
    cfg.validate()?;
    let raw = f64::from(audio.sample_rate_hz);
    if raw < 2.0 * cfg.lowpass_cutoff_hz {
        return Err(Error::Config(format!(
            "audio rate {raw} Hz cannot carry a {} Hz low-pass",
            cfg.lowpass_cutoff_hz
        )));
    }
    let factor = decimation_factor(audio.sample_rate_hz, cfg)?;
    let mut lowpass = Biquad::butterworth_lowpass(cfg.lowpass_cutoff_hz, raw);
    let mut values = Vec::with_capacity(audio.len() / factor);
    let mut acc = 0.0;
    let mut count = 0;
    for &x in &audio.samples {
        acc += lowpass.process(x.abs());
        count += 1;
        if count == factor {
            // The filter overshoots slightly on steep edges.
            values.push((acc / factor as f64).max(0.0));
            acc = 0.0;
            count = 0;
        }
    }
    EnvelopeSignal::new(values, raw / factor as f64, 0.0)
}

/// Time-varying detection threshold: `alpha * running_mean + floor`.
///
/// The running mean is a causal exponential average with time constant
/// `threshold_window_s`, seeded with the mean of the first window.
pub fn detection_threshold(env: &EnvelopeSignal, cfg: &DetectorConfig) -> Vec<f64> {
    let values = env.values();
    if values.is_empty() {
        return Vec::new();
    }
    let window = ((cfg.threshold_window_s * env.rate_hz()).round() as usize).clamp(1, values.len());
    let mut mean = values[..window].iter().sum::<f64>() / window as f64;
    let a = 1.0 - (-1.0 / (cfg.threshold_window_s * env.rate_hz())).exp();
    values
        .iter()
        .map(|&v| {
            mean += a * (v - mean);
            cfg.threshold_alpha * mean + cfg.threshold_floor
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Bump {
    onset: usize,
    peak: usize,
    end: usize,
}

/// Splits the envelope into bumps bounded by its local minima.
///
/// Flat stretches count as a single extremum. A bump starts at the last sample
/// of the valley before it and ends at the first sample of the valley after it.
fn split_bumps(values: &[f64]) -> Vec<Bump> {
    // Runs of equal values: (first index, last index).
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if values[run.0] == v => run.1 = i,
            _ => runs.push((i, i)),
        }
    }
    if runs.len() < 2 {
        return Vec::new();
    }
    let value = |r: usize| values[runs[r].0];
    let is_min = |r: usize| {
        let left_higher = r == 0 || value(r - 1) > value(r);
        let right_higher = r + 1 == runs.len() || value(r + 1) > value(r);
        left_higher && right_higher
    };
    let is_max = |r: usize| {
        let left_lower = r == 0 || value(r - 1) < value(r);
        let right_lower = r + 1 == runs.len() || value(r + 1) < value(r);
        left_lower && right_lower
    };

    let mut bumps = Vec::new();
    // Index where the current bump starts, once we've passed a valley (or the start).
    let mut onset: Option<usize> = None;
    let mut peak: Option<usize> = None;
    for r in 0..runs.len() {
        if is_min(r) {
            if let (Some(on), Some(pk)) = (onset, peak) {
                bumps.push(Bump {
                    onset: on,
                    peak: pk,
                    end: runs[r].0,
                });
            }
            onset = Some(runs[r].1);
            peak = None;
        } else if is_max(r) {
            if onset.is_none() {
                // The recording starts in the middle of a bump.
                onset = Some(0);
            }
            peak = Some(runs[r].0);
        }
    }
    if let (Some(on), Some(pk)) = (onset, peak) {
        bumps.push(Bump {
            onset: on,
            peak: pk,
            end: values.len() - 1,
        });
    }
    bumps
}

/// Merges neighbouring bumps whose shared valley is too shallow.
fn merge_shallow(values: &[f64], bumps: Vec<Bump>, depth: f64) -> Vec<Bump> {
    let mut stack: Vec<Bump> = Vec::with_capacity(bumps.len());
    for bump in bumps {
        stack.push(bump);
        while stack.len() >= 2 {
            let right = stack[stack.len() - 1];
            let left = stack[stack.len() - 2];
            let valley = values[right.onset];
            let lower_peak = values[left.peak].min(values[right.peak]);
            if valley > (1.0 - depth) * lower_peak {
                let peak = if values[right.peak] > values[left.peak] {
                    right.peak
                } else {
                    left.peak
                };
                stack.pop();
                let merged = stack.last_mut().expect("two bumps on the stack");
                merged.end = right.end;
                merged.peak = peak;
            } else {
                break;
            }
        }
    }
    stack
}

/// Start of the main rise of a bump, in fractional samples, and the valley
/// sample that opens it.
///
/// The onset is extrapolated from the quarter- and half-height crossings of
/// the rising edge (`3 t25 - 2 t50`), which is exact for a raised-cosine rise
/// and keeps a slowly drifting noise floor from dragging the onset early.
/// Ripples below half height, merged into the bump as shallow sub-bumps, are
/// skipped.
fn rise_onset(values: &[f64], bump: Bump) -> (f64, usize) {
    let span = &values[bump.onset..=bump.peak];
    let lo = span.iter().copied().fold(f64::INFINITY, f64::min);
    let height = values[bump.peak] - lo;
    let half_idx = bump.onset + span.iter().position(|&v| v >= lo + 0.5 * height).unwrap_or(0);
    let mut valley = half_idx;
    while valley > bump.onset && values[valley - 1] < values[valley] {
        valley -= 1;
    }
    if height <= 0.0 {
        return (valley as f64, valley);
    }
    // Last upward crossing of `level` at or before `half_idx`, interpolated.
    let crossing = |level: f64| {
        let mut i = half_idx;
        while i > valley && values[i - 1] >= level {
            i -= 1;
        }
        if i == valley || values[i] <= values[i - 1] {
            return i as f64;
        }
        (i - 1) as f64 + (level - values[i - 1]) / (values[i] - values[i - 1])
    };
    let t25 = crossing(lo + 0.25 * height);
    let t50 = crossing(lo + 0.5 * height);
    let onset = (3.0 * t25 - 2.0 * t50).clamp(bump.onset as f64, t50);
    (onset, valley.min(onset.floor() as usize).max(bump.onset))
}

/// Detects jaw-movement events on an envelope.
///
/// A bump is kept when its peak exceeds the time-varying threshold and at least
/// `min_event_duration_s` worth of its samples lie above the threshold. Kept
/// bumps whose onsets fall within `refractory_s` of the previous event's onset
/// are folded into that event. The onset is the valley before the bump's main
/// rise; the amplitude is the peak-to-peak range of the envelope over the
/// event span.
///
/// The bump segmentation does not depend on the threshold, so raising the
/// threshold can only remove events.
pub fn detect_events(env: &EnvelopeSignal, cfg: &DetectorConfig) -> Vec<JmEvent> {
    let values = env.values();
    if values.len() < 3 {
        return Vec::new();
    }
    let threshold = detection_threshold(env, cfg);
    let min_samples = cfg.min_event_duration_s * env.rate_hz() - 1e-9;
    let bumps = merge_shallow(values, split_bumps(values), cfg.valley_depth);

    let mut spans: Vec<(f64, usize, usize)> = Vec::new();
    for bump in bumps {
        if values[bump.peak] <= threshold[bump.peak] {
            continue;
        }
        let above = (bump.onset..=bump.end)
            .filter(|&i| values[i] > threshold[i])
            .count();
        if (above as f64) < min_samples {
            continue;
        }
        let (onset, first) = rise_onset(values, bump);
        match spans.last_mut() {
            Some(last) if (onset - last.0) / env.rate_hz() < cfg.refractory_s => {
                last.2 = bump.end;
            }
            _ => spans.push((onset, first, bump.end)),
        }
    }

    spans
        .into_iter()
        .filter_map(|(onset, first, end)| {
            let span = &values[first..=end];
            let max = span.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = span.iter().copied().fold(f64::INFINITY, f64::min);
            let duration = (end as f64 - onset).max(1.0) / env.rate_hz();
            let time = env.origin_time_s() + onset / env.rate_hz();
            JmEvent::new(time, max - min, duration).ok()
        })
        .collect()
}
