//! Relative band energies of the sound envelope and of the resampled tachogram.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::features::periodicity::Measure;
use crate::features::Tachogram;
use crate::frontend::EnvelopeSignal;

/// Uniform rate the tachogram is resampled to before its spectrum is taken.
pub const TACHOGRAM_RESAMPLE_HZ: f64 = 4.0;

/// One-sided power spectrum normalized so that the bins sum to the signal energy.
#[derive(Debug, Clone)]
pub struct PowerSpectrum {
    power: Vec<f64>,
    bin_hz: f64,
}

impl PowerSpectrum {
    /// Periodogram (rectangular window) of `x` zero-padded to `fft_len` samples.
    pub fn periodogram(x: &[f64], rate_hz: f64, fft_len: usize) -> Self {
        assert!(fft_len >= x.len() && fft_len > 0);
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(fft_len, Complex::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(fft_len).process(&mut buf);

        let m = fft_len as f64;
        let half = fft_len / 2;
        let power = (0..=half)
            .map(|k| {
                let p = buf[k].norm_sqr() / m;
                let mirrored = k != 0 && !(fft_len % 2 == 0 && k == half);
                if mirrored {
                    2.0 * p
                } else {
                    p
                }
            })
            .collect();
        Self {
            power,
            bin_hz: rate_hz / m,
        }
    }

    pub fn bins(&self) -> &[f64] {
        &self.power
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    pub(crate) fn bins_mut(&mut self) -> &mut [f64] {
        &mut self.power
    }

    /// Energy of the bins whose centre frequency lies in `[low_hz, high_hz)`.
    pub fn band_energy(&self, low_hz: f64, high_hz: f64) -> f64 {
        self.power
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let f = *k as f64 * self.bin_hz;
                f >= low_hz && f < high_hz
            })
            .map(|(_, p)| p)
            .sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Share of the envelope energy (mean removed, DC excluded) in the 1.0 to 1.5 Hz band.
pub fn envelope_band_energy(env: &EnvelopeSignal) -> Measure {
    let values = env.values();
    if values.len() < 2 || env.rate_hz() < 3.0 {
        return Measure::degenerate();
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let centred: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let raw_energy: f64 = values.iter().map(|v| v * v).sum();
    let centred_energy: f64 = centred.iter().map(|v| v * v).sum();
    if centred_energy <= 1e-20 * raw_energy || centred_energy == 0.0 {
        return Measure::degenerate();
    }
    let mut spectrum = PowerSpectrum::periodogram(&centred, env.rate_hz(), centred.len());
    spectrum.bins_mut()[0] = 0.0;
    let total = spectrum.total_energy();
    if total <= 0.0 {
        return Measure::degenerate();
    }
    Measure::ok((spectrum.band_energy(1.0, 1.5) / total).clamp(0.0, 1.0))
}

/// The tachogram resampled on a uniform grid over `[start, start + len)`.
///
/// Each period is placed at the time of the event that closes it. Between the
/// first and last of those points the series is linearly interpolated; outside
/// them it is zero.
pub fn resample_tachogram(
    tach: &Tachogram,
    segment_start_s: f64,
    segment_len_s: f64,
    rate_hz: f64,
) -> Vec<f64> {
    let n = (segment_len_s * rate_hz).floor().max(0.0) as usize;
    let times = &tach.times_s()[1.min(tach.times_s().len())..];
    let periods = tach.intervals_s();
    let mut out = vec![0.0; n];
    if periods.is_empty() {
        return out;
    }
    let first = times[0];
    let last = times[times.len() - 1];
    let mut j = 0;
    for (k, slot) in out.iter_mut().enumerate() {
        let t = segment_start_s + k as f64 / rate_hz;
        if t < first || t > last {
            continue;
        }
        while j + 1 < times.len() && times[j + 1] < t {
            j += 1;
        }
        *slot = if j + 1 < times.len() {
            let (t0, t1) = (times[j], times[j + 1]);
            let w = (t - t0) / (t1 - t0);
            periods[j] + w * (periods[j + 1] - periods[j])
        } else {
            periods[j]
        };
    }
    out
}

/// Relative tachogram energies in the 0.017 to 0.020 Hz band and the 0 to 0.02 Hz band.
///
/// The spectrum of the mean-removed resampled tachogram is taken with at least
/// twofold zero padding, then the energy of the mean is put back into the 0 Hz
/// bin exactly, so the offset counts towards both the low band and the total
/// without leaking across neighbouring bins. Needs at least eight events.
pub fn tachogram_band_energies(
    tach: &Tachogram,
    segment_start_s: f64,
    segment_len_s: f64,
) -> (Measure, Measure) {
    if tach.times_s().len() < 8 {
        return (Measure::degenerate(), Measure::degenerate());
    }
    let series = resample_tachogram(tach, segment_start_s, segment_len_s, TACHOGRAM_RESAMPLE_HZ);
    if series.len() < 2 {
        return (Measure::degenerate(), Measure::degenerate());
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let centred: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let fft_len = (2 * series.len()).next_power_of_two();
    let mut spectrum = PowerSpectrum::periodogram(&centred, TACHOGRAM_RESAMPLE_HZ, fft_len);
    spectrum.bins_mut()[0] = n * mean * mean;
    let total = spectrum.total_energy();
    if !(total > 0.0) {
        return (Measure::degenerate(), Measure::degenerate());
    }
    let band = |lo, hi| Measure::ok((spectrum.band_energy(lo, hi) / total).clamp(0.0, 1.0));
    (band(0.017, 0.020), band(0.0, 0.02))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn periodogram_satisfies_parseval() {
        let x: Vec<f64> = (0..37).map(|i| ((i * 7919) % 23) as f64 - 11.0).collect();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        for len in [37, 38, 64, 100] {
            let s = PowerSpectrum::periodogram(&x, 1.0, len);
            assert_relative_eq!(s.total_energy(), energy, max_relative = 1e-12);
        }
    }

    #[test]
    fn band_edges_are_half_open() {
        let s = PowerSpectrum {
            power: vec![1.0; 11],
            bin_hz: 0.1,
        };
        // Bins at 0.0, 0.1, ..., 1.0; [0.2, 0.5) holds 0.2, 0.3, 0.4.
        assert_eq!(s.band_energy(0.2, 0.5 - 1e-12), 3.0);
        assert_eq!(s.band_energy(0.0, 0.05), 1.0);
    }

    #[test]
    fn constant_envelope_is_degenerate() {
        let env = EnvelopeSignal::new(vec![3.0; 500], 100.0, 0.0).unwrap();
        let m = envelope_band_energy(&env);
        assert!(m.degenerate);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn in_band_sinusoid() {
        let env = EnvelopeSignal::new(
            (0..30_000)
                .map(|i| 1.0 + (2.0 * PI * 1.2 * i as f64 / 100.0).sin())
                .collect(),
            100.0,
            0.0,
        )
        .unwrap();
        assert!(envelope_band_energy(&env).value >= 0.95);
    }

    #[test]
    fn resampling_interpolates_between_closing_events() {
        // Events at 0, 1, 3, 4: periods 1 @ t=1, 2 @ t=3, 1 @ t=4.
        let tach = Tachogram::from_times(&[0.0, 1.0, 3.0, 4.0]).unwrap();
        let s = resample_tachogram(&tach, 0.0, 5.0, 2.0);
        assert_eq!(s.len(), 10);
        let expected = [0.0, 0.0, 1.0, 1.25, 1.5, 1.75, 2.0, 1.5, 1.0, 0.0];
        for (a, b) in s.iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn tachogram_needs_eight_events() {
        let tach = Tachogram::from_times(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let (a, b) = tachogram_band_energies(&tach, 0.0, 300.0);
        assert!(a.degenerate && b.degenerate);
    }
}
