//! Synthetic jaw-movement recordings with known events and activity blocks.
//!
//! Event trains are drawn from an [`ActivityModel`]: log-normal periods,
//! amplitudes and durations, optional periodic pauses (rumination boluses) and
//! optional random feed-search gaps (grazing). Envelopes are sums of
//! raised-cosine bumps; audio renders the envelope onto a sine carrier.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Activity, ActivityBlock};
use crate::frontend::{compute_envelope, DetectorConfig, EnvelopeSignal, JmEvent, RawAudio};

/// Audio rate the envelope noise is drawn at before it is reduced to an envelope.
pub const NOISE_AUDIO_RATE_HZ: u32 = 2000;

/// Shortest rendered event, and the share of the following period a bump may fill.
const MIN_DURATION_S: f64 = 0.12;
const MAX_DURATION_SHARE: f64 = 0.8;
const MIN_PERIOD_S: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityModel {
    pub label: Activity,
    pub jm_rate_hz: f64,
    pub period_jitter_cv: f64,
    pub amplitude_mean: f64,
    pub amplitude_cv: f64,
    pub duration_mean_s: f64,
    pub duration_cv: f64,
    /// Mean spacing of chewing pauses; 0 disables them.
    pub pause_period_s: f64,
    pub pause_period_cv: f64,
    pub pause_len_s: f64,
    /// Poisson rate of feed-search gaps; 0 disables them.
    pub long_gaps_per_min: f64,
    pub long_gap_min_s: f64,
    pub long_gap_max_s: f64,
}

impl ActivityModel {
    /// Irregular, mixed-amplitude jaw movements with a few search gaps.
    pub fn grazing() -> Self {
        Self {
            label: Activity::Grazing,
            jm_rate_hz: 1.0,
            period_jitter_cv: 0.2,
            amplitude_mean: 900.0,
            amplitude_cv: 0.3,
            duration_mean_s: 0.45,
            duration_cv: 0.2,
            pause_period_s: 0.0,
            pause_period_cv: 0.0,
            pause_len_s: 0.0,
            long_gaps_per_min: 0.6,
            long_gap_min_s: 3.0,
            long_gap_max_s: 10.0,
        }
    }

    /// Regular, low and uniform chews with a swallowing pause about once a minute.
    pub fn rumination() -> Self {
        Self {
            label: Activity::Rumination,
            jm_rate_hz: 1.0,
            period_jitter_cv: 0.05,
            amplitude_mean: 450.0,
            amplitude_cv: 0.15,
            duration_mean_s: 0.3,
            duration_cv: 0.1,
            pause_period_s: 55.0,
            pause_period_cv: 0.04,
            pause_len_s: 4.0,
            long_gaps_per_min: 0.0,
            long_gap_min_s: 3.0,
            long_gap_max_s: 10.0,
        }
    }

    /// Sparse, unstructured sounds.
    pub fn other() -> Self {
        Self {
            label: Activity::Other,
            jm_rate_hz: 0.15,
            period_jitter_cv: 1.0,
            amplitude_mean: 600.0,
            amplitude_cv: 0.6,
            duration_mean_s: 0.35,
            duration_cv: 0.3,
            pause_period_s: 0.0,
            pause_period_cv: 0.0,
            pause_len_s: 0.0,
            long_gaps_per_min: 0.0,
            long_gap_min_s: 3.0,
            long_gap_max_s: 10.0,
        }
    }

    /// Lying or idle: a handful of isolated sounds per segment, often none.
    pub fn resting() -> Self {
        Self {
            jm_rate_hz: 0.005,
            ..Self::other()
        }
    }

    pub fn preset(label: Activity) -> Self {
        match label {
            Activity::Grazing => Self::grazing(),
            Activity::Rumination => Self::rumination(),
            Activity::Other => Self::other(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("jm_rate_hz", self.jm_rate_hz),
            ("amplitude_mean", self.amplitude_mean),
            ("duration_mean_s", self.duration_mean_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("period_jitter_cv", self.period_jitter_cv),
            ("amplitude_cv", self.amplitude_cv),
            ("duration_cv", self.duration_cv),
            ("pause_period_s", self.pause_period_s),
            ("pause_period_cv", self.pause_period_cv),
            ("pause_len_s", self.pause_len_s),
            ("long_gaps_per_min", self.long_gaps_per_min),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.long_gap_min_s > 0.0 && self.long_gap_max_s >= self.long_gap_min_s) {
            return Err(Error::Config("long gap bounds must satisfy 0 < min <= max".into()));
        }
        Ok(())
    }
}

/// Log-normal draw with the given mean and coefficient of variation.
fn log_normal(rng: &mut ChaCha8Rng, mean: f64, cv: f64) -> f64 {
    if cv == 0.0 {
        return mean;
    }
    let sigma2 = (1.0 + cv * cv).ln();
    LogNormal::new(mean.ln() - sigma2 / 2.0, sigma2.sqrt())
        .expect("finite parameters")
        .sample(rng)
}

/// Event times and attributes for `[start_s, start_s + duration_s)`.
fn event_train(model: &ActivityModel, start_s: f64, duration_s: f64, rng: &mut ChaCha8Rng) -> Vec<JmEvent> {
    let period = 1.0 / model.jm_rate_hz;
    let end = start_s + duration_s;
    let gap_prob = (model.long_gaps_per_min * period / 60.0).min(1.0);
    let mut next_pause = if model.pause_period_s > 0.0 {
        start_s + rng.gen_range(0.4..1.0) * model.pause_period_s
    } else {
        f64::INFINITY
    };

    let mut times = Vec::new();
    let mut t = start_s + rng.gen_range(0.0..period.min(duration_s));
    while t < end {
        times.push(t);
        let dt = if t >= next_pause {
            let jitter = Normal::new(0.0, model.pause_period_cv).expect("finite cv").sample(rng);
            next_pause += model.pause_period_s * (1.0 + jitter).max(0.5);
            model.pause_len_s * rng.gen_range(0.85..1.25)
        } else if gap_prob > 0.0 && rng.gen_bool(gap_prob) {
            rng.gen_range(model.long_gap_min_s..=model.long_gap_max_s)
        } else {
            log_normal(rng, period, model.period_jitter_cv)
        };
        t += dt.max(MIN_PERIOD_S);
    }

    let mut events = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let room = times.get(i + 1).map_or(end - t, |next| next - t) * MAX_DURATION_SHARE;
        let duration = log_normal(rng, model.duration_mean_s, model.duration_cv)
            .min(room)
            .max(MIN_DURATION_S);
        let amplitude = log_normal(rng, model.amplitude_mean, model.amplitude_cv);
        events.push(JmEvent::new(t, amplitude, duration).expect("positive draws"));
    }
    events
}

/// Jaw-movement events over `[0, duration_s)`, reproducible from `seed`.
pub fn generate_event_stream(model: &ActivityModel, duration_s: f64, seed: u64) -> Result<Vec<JmEvent>> {
    model.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::InvalidInput("duration must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(event_train(model, 0.0, duration_s, &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpShape {
    /// `A (1 - cos(2 pi t / d)) / 2` over the event duration `d`.
    #[default]
    RaisedCosine,
}

/// Envelope of `len_s` seconds at `rate_hz` with one bump per event; overlapping bumps add.
pub fn render_envelope(events: &[JmEvent], len_s: f64, rate_hz: f64, shape: BumpShape) -> Result<EnvelopeSignal> {
    if !(len_s >= 0.0) {
        return Err(Error::InvalidInput("envelope length must be non-negative".into()));
    }
    let n = (len_s * rate_hz).floor() as usize;
    let mut values = vec![0.0; n];
    for e in events {
        let first = (e.timestamp_s * rate_hz).ceil().max(0.0) as usize;
        let last = (((e.timestamp_s + e.duration_s) * rate_hz).floor() as usize).min(n.saturating_sub(1));
        for (i, v) in values.iter_mut().enumerate().take(last + 1).skip(first) {
            let t = i as f64 / rate_hz - e.timestamp_s;
            match shape {
                BumpShape::RaisedCosine => {
                    *v += e.amplitude * 0.5 * (1.0 - (2.0 * PI * t / e.duration_s).cos());
                }
            }
        }
    }
    // Cosine rounding can leave values a hair below zero.
    values.iter_mut().for_each(|v| *v = v.max(0.0));
    EnvelopeSignal::new(values, rate_hz, 0.0)
}

/// Power of the audio that [`render_audio`] would produce for `env` (sine carrier of
/// amplitude `pi/2 * env`).
pub fn carrier_power(env: &EnvelopeSignal) -> f64 {
    if env.is_empty() {
        return 0.0;
    }
    let mean_sq = env.values().iter().map(|v| v * v).sum::<f64>() / env.len() as f64;
    PI * PI / 8.0 * mean_sq
}

/// Envelope of white Gaussian audio noise of standard deviation `sigma`,
/// drawn at [`NOISE_AUDIO_RATE_HZ`] and reduced by the regular envelope chain.
pub fn noise_envelope(len: usize, rate_hz: f64, sigma: f64, seed: u64) -> Result<EnvelopeSignal> {
    let cfg = DetectorConfig {
        decimated_rate_hz: rate_hz,
        ..DetectorConfig::default()
    };
    let factor = (f64::from(NOISE_AUDIO_RATE_HZ) / rate_hz).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    let samples: Vec<f64> = (0..len * factor.max(1)).map(|_| normal.sample(&mut rng)).collect();
    let env = compute_envelope(&RawAudio::new(samples, NOISE_AUDIO_RATE_HZ)?, &cfg)?;
    EnvelopeSignal::new(env.values().to_vec(), rate_hz, 0.0)
}

/// Adds audio-noise envelope at `snr_db` relative to the envelope's carrier power.
pub fn add_noise(env: &EnvelopeSignal, snr_db: f64, seed: u64) -> Result<EnvelopeSignal> {
    let sigma = (carrier_power(env) / 10f64.powf(snr_db / 10.0)).sqrt();
    let noise = noise_envelope(env.len(), env.rate_hz(), sigma, seed)?;
    let values = env
        .values()
        .iter()
        .zip(noise.values().iter().chain(std::iter::repeat(&0.0)))
        .map(|(s, n)| s + n)
        .collect();
    EnvelopeSignal::new(values, env.rate_hz(), env.origin_time_s())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AudioRender {
    pub sample_rate_hz: u32,
    pub carrier_hz: f64,
    /// `None` renders without noise.
    pub snr_db: Option<f64>,
}

impl Default for AudioRender {
    fn default() -> Self {
        Self {
            sample_rate_hz: 2000,
            carrier_hz: 250.0,
            snr_db: Some(30.0),
        }
    }
}

/// Audio whose full-wave rectified mean follows `env`: `pi/2 * env(t) * sin(2 pi f t)` plus noise.
pub fn render_audio(env: &EnvelopeSignal, render: &AudioRender, seed: u64) -> Result<RawAudio> {
    let fs = f64::from(render.sample_rate_hz);
    if render.carrier_hz <= 0.0 || render.carrier_hz >= fs / 2.0 {
        return Err(Error::Config("carrier must lie below the audio Nyquist frequency".into()));
    }
    let n = (env.duration_s() * fs).round() as usize;
    let sigma = render
        .snr_db
        .map(|snr| (carrier_power(env) / 10f64.powf(snr / 10.0)).sqrt())
        .unwrap_or(0.0);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = env.values();
    let samples = (0..n)
        .map(|i| {
            let pos = i as f64 / fs * env.rate_hz();
            let k = pos.floor() as usize;
            let frac = pos - k as f64;
            let a = values.get(k).copied().unwrap_or(0.0);
            let b = values.get(k + 1).copied().unwrap_or(a);
            let e = a + frac * (b - a);
            let t = i as f64 / fs;
            PI / 2.0 * e * (2.0 * PI * render.carrier_hz * t).sin() + normal.sample(&mut rng)
        })
        .collect();
    RawAudio::new(samples, render.sample_rate_hz)
}

/// A recording with its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRecording {
    pub duration_s: f64,
    pub blocks: Vec<ActivityBlock>,
    pub events: Vec<JmEvent>,
    pub seed: u64,
}

impl SynthRecording {
    pub fn envelope(&self, rate_hz: f64) -> Result<EnvelopeSignal> {
        render_envelope(&self.events, self.duration_s, rate_hz, BumpShape::RaisedCosine)
    }

    /// Envelope with audio-noise envelope added at `snr_db`.
    pub fn noisy_envelope(&self, rate_hz: f64, snr_db: f64) -> Result<EnvelopeSignal> {
        add_noise(&self.envelope(rate_hz)?, snr_db, self.seed ^ 0x5EED)
    }

    pub fn audio(&self, render: &AudioRender) -> Result<RawAudio> {
        let env = self.envelope(f64::from(render.sample_rate_hz).min(1000.0))?;
        render_audio(&env, render, self.seed ^ 0xA0D10)
    }

    /// Label of the block containing `t`, if any.
    pub fn label_at(&self, t: f64) -> Option<Activity> {
        self.blocks
            .iter()
            .find(|b| b.start_s <= t && t < b.end_s)
            .map(|b| b.label)
    }
}

/// Seed of recording `index` in a corpus seeded with `seed`.
fn derive_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// One recording made of consecutive activity blocks.
pub fn generate_recording(parts: &[(ActivityModel, f64)], seed: u64) -> Result<SynthRecording> {
    if parts.is_empty() {
        return Err(Error::InvalidInput("recording needs at least one block".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(parts.len());
    let mut events = Vec::new();
    let mut start = 0.0;
    for (model, len) in parts {
        model.validate()?;
        if !(*len > 0.0) {
            return Err(Error::InvalidInput("block durations must be positive".into()));
        }
        blocks.push(ActivityBlock::new(start, start + len, model.label)?);
        let train = event_train(model, start, *len, &mut rng);
        // Keep the whole train strictly increasing across block boundaries.
        let last = events.last().map_or(f64::NEG_INFINITY, |e: &JmEvent| e.timestamp_s + MIN_PERIOD_S);
        events.extend(train.into_iter().filter(|e| e.timestamp_s >= last));
        start += len;
    }
    Ok(SynthRecording {
        duration_s: start,
        blocks,
        events,
        seed,
    })
}

/// One single-block recording per `(model, duration)` entry.
pub fn generate_corpus(spec: &[(ActivityModel, f64)], seed: u64) -> Result<Vec<SynthRecording>> {
    if spec.is_empty() {
        return Err(Error::InvalidInput("corpus spec is empty".into()));
    }
    spec.iter()
        .enumerate()
        .map(|(i, part)| generate_recording(std::slice::from_ref(part), derive_seed(seed, i)))
        .collect()
}

/// `per_class` segments of `segment_len_s` for each class. Every second
/// `Other` segment is [`ActivityModel::resting`], so near-silent segments are
/// represented.
pub fn balanced_spec(per_class: usize, segment_len_s: f64) -> Vec<(ActivityModel, f64)> {
    Activity::ALL
        .iter()
        .flat_map(|&a| {
            (0..per_class).map(move |i| {
                let model = match a {
                    Activity::Other if i % 2 == 1 => ActivityModel::resting(),
                    _ => ActivityModel::preset(a),
                };
                (model, segment_len_s)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::detect_events;

    #[test]
    fn same_seed_same_stream() {
        let m = ActivityModel::grazing();
        assert_eq!(
            generate_event_stream(&m, 300.0, 3).unwrap(),
            generate_event_stream(&m, 300.0, 3).unwrap()
        );
        assert_ne!(
            generate_event_stream(&m, 300.0, 3).unwrap(),
            generate_event_stream(&m, 300.0, 4).unwrap()
        );
    }

    #[test]
    fn events_stay_inside_and_do_not_overlap() {
        for model in [ActivityModel::grazing(), ActivityModel::rumination(), ActivityModel::other()] {
            let events = generate_event_stream(&model, 300.0, 11).unwrap();
            assert!(events.iter().all(|e| (0.0..300.0).contains(&e.timestamp_s)));
            for w in events.windows(2) {
                assert!(w[0].timestamp_s + w[0].duration_s < w[1].timestamp_s);
            }
        }
    }

    #[test]
    fn empty_events_render_zero_envelope() {
        let env = render_envelope(&[], 10.0, 100.0, BumpShape::RaisedCosine).unwrap();
        assert_eq!(env.len(), 1000);
        assert!(env.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_event_round_trip() {
        let e = JmEvent::new(2.0, 800.0, 0.4).unwrap();
        let env = render_envelope(&[e], 5.0, 100.0, BumpShape::RaisedCosine).unwrap();
        let found = detect_events(&env, &DetectorConfig::default());
        assert_eq!(found.len(), 1);
        assert!((found[0].timestamp_s - 2.0).abs() * 100.0 < 2.0);
    }

    #[test]
    fn recording_blocks_tile() {
        let rec = generate_recording(
            &[(ActivityModel::rumination(), 900.0), (ActivityModel::grazing(), 900.0)],
            5,
        )
        .unwrap();
        assert_eq!(rec.duration_s, 1800.0);
        assert_eq!(rec.blocks[0].end_s, rec.blocks[1].start_s);
        for e in &rec.events {
            let label = rec.label_at(e.timestamp_s).unwrap();
            let expected = if e.timestamp_s < 900.0 { Activity::Rumination } else { Activity::Grazing };
            assert_eq!(label, expected);
        }
    }

    #[test]
    fn audio_envelope_tracks_rendered_envelope() {
        let e = JmEvent::new(1.0, 1000.0, 0.6).unwrap();
        let rec = SynthRecording {
            duration_s: 3.0,
            blocks: vec![ActivityBlock::new(0.0, 3.0, Activity::Grazing).unwrap()],
            events: vec![e],
            seed: 1,
        };
        let audio = rec
            .audio(&AudioRender {
                snr_db: None,
                ..AudioRender::default()
            })
            .unwrap();
        assert_eq!(audio.len(), 6000);
        let env = compute_envelope(&audio, &DetectorConfig::default()).unwrap();
        let peak = env.values().iter().copied().fold(0.0, f64::max);
        // The 10 Hz low-pass trims the 0.6 s bump peak a little.
        assert!((peak - 1000.0).abs() < 60.0, "{peak}");
    }
}
