#![allow(dead_code)]

use jmfar::eval::Activity;
use jmfar::features::{extract_features, FeatureMask, FeatureVector, SegmentBuffer};
use jmfar::frontend::{detect_events, DetectorConfig, EnvelopeSignal, JmEvent};
use jmfar::synth::{balanced_spec, generate_corpus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random event train with `n` events; about one period in twenty is a 3-12 s gap.
pub fn random_events(n: usize, rng: &mut ChaCha8Rng) -> Vec<JmEvent> {
    let mut t = rng.gen_range(0.0..2.0);
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        let amplitude = 10f64.powf(rng.gen_range(1.5..3.7));
        let duration = rng.gen_range(0.1..0.8);
        events.push(JmEvent::new(t, amplitude, duration).unwrap());
        t += if rng.gen_bool(0.05) {
            rng.gen_range(3.0..12.0)
        } else {
            rng.gen_range(0.3..2.0)
        };
    }
    events
}

/// Segment holding `events` over a flat envelope.
pub fn buffer_for(events: Vec<JmEvent>) -> SegmentBuffer {
    let len = events.last().map_or(1.0, |e| e.timestamp_s + 1.0);
    let env = EnvelopeSignal::zeros((len * 100.0) as usize, 100.0, 0.0).unwrap();
    SegmentBuffer::new(events, env, 0.0, len).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Full feature vectors of a balanced synthetic corpus of 300 s segments,
/// detected on noisy envelopes (30 dB).
pub fn synthetic_feature_corpus(per_class: usize, seed: u64) -> Vec<(FeatureVector, Activity)> {
    let cfg = DetectorConfig::default();
    generate_corpus(&balanced_spec(per_class, 300.0), seed)
        .unwrap()
        .iter()
        .map(|rec| {
            let env = rec.noisy_envelope(100.0, 30.0).unwrap();
            let events = detect_events(&env, &cfg);
            let buf = SegmentBuffer::new(events, env, 0.0, 300.0).unwrap();
            (extract_features(&buf, FeatureMask::JMFAR).unwrap(), rec.blocks[0].label)
        })
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Literal transcriptions of the feature definitions, 1-based as written.
pub mod literal {
    fn at(xs: &[f64], i: usize) -> f64 {
        xs[i - 1]
    }

    pub fn mean(xs: &[f64]) -> f64 {
        let n = xs.len();
        let mut s = 0.0;
        for i in 1..=n {
            s += at(xs, i);
        }
        s / n as f64
    }

    fn central(xs: &[f64], k: i32) -> f64 {
        let mu = mean(xs);
        let mut s = 0.0;
        for i in 1..=xs.len() {
            s += (at(xs, i) - mu).powi(k);
        }
        s / xs.len() as f64
    }

    /// (mean, std, skewness, kurtosis) with population moments.
    pub fn moments(xs: &[f64]) -> [f64; 4] {
        let m2 = central(xs, 2);
        let sd = m2.sqrt();
        [mean(xs), sd, central(xs, 3) / sd.powi(3), central(xs, 4) / (m2 * m2)]
    }

    pub fn std(xs: &[f64]) -> f64 {
        central(xs, 2).sqrt()
    }

    /// Mean absolute difference of successive periods.
    pub fn jitter_abs(t: &[f64]) -> f64 {
        let n = t.len();
        let mut s = 0.0;
        for i in 1..=n - 1 {
            s += (at(t, i) - at(t, i + 1)).abs();
        }
        s / (n - 1) as f64
    }

    pub fn jitter_rel(t: &[f64]) -> f64 {
        jitter_abs(t) / mean(t)
    }

    fn five_point(x: &[f64]) -> f64 {
        let n = x.len();
        let mut s = 0.0;
        for i in 3..=n - 2 {
            let avg = (at(x, i - 2) + at(x, i - 1) + at(x, i) + at(x, i + 1) + at(x, i + 2)) / 5.0;
            s += (at(x, i) - avg).abs();
        }
        s / (n - 4) as f64
    }

    pub fn jitter_ppq5(t: &[f64]) -> f64 {
        five_point(t) / mean(t)
    }

    pub fn jitter_std(t: &[f64]) -> f64 {
        let d: Vec<f64> = (1..t.len()).map(|i| (at(t, i) - at(t, i + 1)).abs()).collect();
        std(&d)
    }

    fn db(a: &[f64]) -> Vec<f64> {
        (1..a.len()).map(|i| (20.0 * (at(a, i + 1) / at(a, i)).log10()).abs()).collect()
    }

    /// Mean absolute successive amplitude ratio in dB.
    pub fn shimmer_abs(a: &[f64]) -> f64 {
        let n = a.len();
        let mut s = 0.0;
        for i in 1..=n - 1 {
            s += (20.0 * (at(a, i + 1) / at(a, i)).log10()).abs();
        }
        s / (n - 1) as f64
    }

    pub fn shimmer_rel(a: &[f64]) -> f64 {
        let n = a.len();
        let mut s = 0.0;
        for i in 1..=n - 1 {
            s += (at(a, i) - at(a, i + 1)).abs();
        }
        s / (n - 1) as f64 / mean(a)
    }

    pub fn shimmer_apq5(a: &[f64]) -> f64 {
        five_point(a) / mean(a)
    }

    pub fn shimmer_std(a: &[f64]) -> f64 {
        std(&db(a))
    }

    /// Periods of 3 to 10 s per minute.
    pub fn long_interval_rate(t: &[f64], segment_len_s: f64) -> f64 {
        let mut count = 0;
        for i in 1..=t.len() {
            let p = at(t, i);
            if p >= 3.0 && p <= 10.0 {
                count += 1;
            }
        }
        count as f64 * 60.0 / segment_len_s
    }
}
