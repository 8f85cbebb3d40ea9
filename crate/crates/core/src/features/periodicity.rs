//! Jitter (inter-event period perturbation) and shimmer (amplitude perturbation).
//!
//! Every measure returns a [`Measure`]; when the sequence is too short for the
//! formula the value is zero and the measure is flagged degenerate.

use crate::error::{Error, Result};
use crate::features::stats::population_std;
use crate::features::Tachogram;

/// A feature value plus a flag telling whether there was enough data to compute it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measure {
    pub value: f64,
    pub degenerate: bool,
}

impl Measure {
    pub(crate) fn ok(value: f64) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }

    pub(crate) fn degenerate() -> Self {
        Self {
            value: 0.0,
            degenerate: true,
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `|x[i] - x[i+1]|` for every consecutive pair.
fn abs_successive_differences(xs: &[f64]) -> Vec<f64> {
    xs.windows(2).map(|w| (w[0] - w[1]).abs()).collect()
}

/// Mean absolute deviation of each interior point from its five-point moving
/// average. Written as `|Σ_j (x_i - x_j)| / 5` so constant input gives exactly 0.
fn five_point_perturbation(xs: &[f64]) -> f64 {
    let terms = xs.windows(5).map(|w| {
        let centre = w[2];
        let sum: f64 = w.iter().map(|&x| centre - x).sum();
        (sum / 5.0).abs()
    });
    let count = xs.len() - 4;
    terms.sum::<f64>() / count as f64
}

fn db_ratios(amplitudes: &[f64]) -> Vec<f64> {
    amplitudes
        .windows(2)
        .map(|w| (20.0 * (w[1] / w[0]).log10()).abs())
        .collect()
}

fn check_amplitudes(amplitudes: &[f64]) -> Result<()> {
    match amplitudes.iter().position(|a| !(*a > 0.0 && a.is_finite())) {
        Some(i) => Err(Error::InvalidEvent(format!(
            "amplitude {i} must be positive, got {}",
            amplitudes[i]
        ))),
        None => Ok(()),
    }
}

/// Mean absolute difference between consecutive periods, in seconds.
pub fn jitter_abs(tach: &Tachogram) -> Measure {
    let periods = tach.intervals_s();
    if periods.len() < 2 {
        return Measure::degenerate();
    }
    Measure::ok(mean(&abs_successive_differences(periods)))
}

/// Absolute jitter divided by the mean period.
pub fn jitter_rel(tach: &Tachogram) -> Measure {
    let periods = tach.intervals_s();
    if periods.len() < 2 {
        return Measure::degenerate();
    }
    Measure::ok(mean(&abs_successive_differences(periods)) / mean(periods))
}

/// Five-point period perturbation quotient; needs at least five periods.
pub fn jitter_ppq5(tach: &Tachogram) -> Measure {
    let periods = tach.intervals_s();
    if periods.len() < 5 {
        return Measure::degenerate();
    }
    Measure::ok(five_point_perturbation(periods) / mean(periods))
}

/// Population standard deviation of the consecutive period differences.
pub fn jitter_std(tach: &Tachogram) -> Measure {
    let periods = tach.intervals_s();
    if periods.len() < 2 {
        return Measure::degenerate();
    }
    Measure::ok(population_std(&abs_successive_differences(periods)))
}

/// Mean absolute consecutive amplitude ratio, in dB.
pub fn shimmer_abs(amplitudes: &[f64]) -> Result<Measure> {
    check_amplitudes(amplitudes)?;
    if amplitudes.len() < 2 {
        return Ok(Measure::degenerate());
    }
    Ok(Measure::ok(mean(&db_ratios(amplitudes))))
}

/// Mean absolute consecutive amplitude difference divided by the mean amplitude.
pub fn shimmer_rel(amplitudes: &[f64]) -> Result<Measure> {
    check_amplitudes(amplitudes)?;
    if amplitudes.len() < 2 {
        return Ok(Measure::degenerate());
    }
    Ok(Measure::ok(
        mean(&abs_successive_differences(amplitudes)) / mean(amplitudes),
    ))
}

/// Five-point amplitude perturbation quotient; needs at least five events.
pub fn shimmer_apq5(amplitudes: &[f64]) -> Result<Measure> {
    check_amplitudes(amplitudes)?;
    if amplitudes.len() < 5 {
        return Ok(Measure::degenerate());
    }
    Ok(Measure::ok(
        five_point_perturbation(amplitudes) / mean(amplitudes),
    ))
}

/// Population standard deviation of the consecutive dB ratios.
pub fn shimmer_std(amplitudes: &[f64]) -> Result<Measure> {
    check_amplitudes(amplitudes)?;
    if amplitudes.len() < 2 {
        return Ok(Measure::degenerate());
    }
    Ok(Measure::ok(population_std(&db_ratios(amplitudes))))
}

/// Number of periods lasting between 3 and 10 s (inclusive) per minute of segment.
pub fn long_interval_rate(tach: &Tachogram, segment_len_s: f64) -> f64 {
    if segment_len_s <= 0.0 {
        return 0.0;
    }
    let count = tach
        .intervals_s()
        .iter()
        .filter(|&&t| (3.0..=10.0).contains(&t))
        .count();
    count as f64 / (segment_len_s / 60.0)
}
