//! Jaw-movement segment features f4 to f24.
//!
//! Features are computed over every event (and the envelope slice) of one
//! analysis segment, without looking at the type of each jaw movement:
//!
//! | slot | feature | definition |
//! |------|---------|------------|
//! | f4 | JM rate | events per second |
//! | f5 to f8 | amplitude moments | mean, std, skewness, kurtosis |
//! | f9 to f12 | duration moments | mean, std, skewness, kurtosis |
//! | f13 | envelope band energy | share of envelope energy in 1.0 to 1.5 Hz |
//! | f14 to f17 | jitter | absolute, relative, PPQ5, std |
//! | f18 to f21 | shimmer | absolute (dB), relative, APQ5, std (dB) |
//! | f22 | long intervals | periods of 3 to 10 s per minute |
//! | f23, f24 | tachogram band energy | 0.017 to 0.020 Hz and 0 to 0.02 Hz |

pub mod periodicity;
pub mod spectral;
pub mod stats;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Activity;
use crate::frontend::{EnvelopeSignal, JmEvent};

pub use periodicity::{
    jitter_abs, jitter_ppq5, jitter_rel, jitter_std, long_interval_rate, shimmer_abs,
    shimmer_apq5, shimmer_rel, shimmer_std, Measure,
};
pub use spectral::{envelope_band_energy, tachogram_band_energies, PowerSpectrum};
pub use stats::{moment_stats, MomentStats};

/// Number of feature slots (f4 through f24).
pub const FEATURE_COUNT: usize = 21;

/// Default analysis segment length.
pub const DEFAULT_SEGMENT_LEN_S: f64 = 300.0;

/// One of the 21 segment features, numbered as in f4..f24.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId(u8);

impl FeatureId {
    pub const F4: FeatureId = FeatureId(4);
    pub const F5: FeatureId = FeatureId(5);
    pub const F6: FeatureId = FeatureId(6);
    pub const F7: FeatureId = FeatureId(7);
    pub const F8: FeatureId = FeatureId(8);
    pub const F9: FeatureId = FeatureId(9);
    pub const F10: FeatureId = FeatureId(10);
    pub const F11: FeatureId = FeatureId(11);
    pub const F12: FeatureId = FeatureId(12);
    pub const F13: FeatureId = FeatureId(13);
    pub const F14: FeatureId = FeatureId(14);
    pub const F15: FeatureId = FeatureId(15);
    pub const F16: FeatureId = FeatureId(16);
    pub const F17: FeatureId = FeatureId(17);
    pub const F18: FeatureId = FeatureId(18);
    pub const F19: FeatureId = FeatureId(19);
    pub const F20: FeatureId = FeatureId(20);
    pub const F21: FeatureId = FeatureId(21);
    pub const F22: FeatureId = FeatureId(22);
    pub const F23: FeatureId = FeatureId(23);
    pub const F24: FeatureId = FeatureId(24);

    pub fn from_number(number: u8) -> Option<Self> {
        (4..=24).contains(&number).then_some(FeatureId(number))
    }

    pub fn from_slot(slot: usize) -> Option<Self> {
        (slot < FEATURE_COUNT).then(|| FeatureId(slot as u8 + 4))
    }

    pub fn number(self) -> u8 {
        self.0
    }

    /// Position in a [`FeatureVector`].
    pub fn slot(self) -> usize {
        usize::from(self.0) - 4
    }

    pub fn all() -> impl Iterator<Item = FeatureId> {
        (4..=24).map(FeatureId)
    }

    pub fn is_spectral(self) -> bool {
        matches!(self.0, 13 | 23 | 24)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        s.strip_prefix(['f', 'F'])
            .and_then(|n| n.parse::<u8>().ok())
            .and_then(FeatureId::from_number)
            .ok_or_else(|| Error::InvalidInput(format!("unknown feature '{s}' (expected f4..f24)")))
    }
}

/// Set of active features, one bit per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureMask(u32);

impl FeatureMask {
    const ALL_BITS: u32 = (1 << FEATURE_COUNT) - 1;

    pub const EMPTY: FeatureMask = FeatureMask(0);
    pub const JMFAR: FeatureMask = FeatureMask(Self::ALL_BITS);

    pub fn from_bits(bits: u32) -> Result<Self> {
        if bits & !Self::ALL_BITS != 0 {
            return Err(Error::InvalidInput(format!("mask bits {bits:#x} exceed 21 features")));
        }
        Ok(FeatureMask(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn from_features(ids: impl IntoIterator<Item = FeatureId>) -> Self {
        FeatureMask(ids.into_iter().fold(0, |acc, id| acc | 1 << id.slot()))
    }

    /// All features except the three spectral ones (f13, f23, f24).
    pub fn jmfar_ns() -> Self {
        Self::from_features(FeatureId::all().filter(|id| !id.is_spectral()))
    }

    /// The twelve features kept by wrapper feature selection.
    pub fn jmfar_sel() -> Self {
        Self::from_features(
            [6, 7, 8, 11, 12, 13, 15, 17, 18, 19, 20, 22].map(FeatureId),
        )
    }

    pub fn contains(self, id: FeatureId) -> bool {
        self.0 & (1 << id.slot()) != 0
    }

    pub fn with(self, id: FeatureId) -> Self {
        FeatureMask(self.0 | 1 << id.slot())
    }

    pub fn without(self, id: FeatureId) -> Self {
        FeatureMask(self.0 & !(1 << id.slot()))
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = FeatureId> {
        FeatureId::all().filter(move |id| self.contains(*id))
    }

    pub fn any_spectral(self) -> bool {
        self.iter().any(FeatureId::is_spectral)
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|id| id.to_string()).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for FeatureMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut mask = FeatureMask::EMPTY;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            mask = mask.with(part.parse()?);
        }
        Ok(mask)
    }
}

impl TryFrom<String> for FeatureMask {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureMask> for String {
    fn from(mask: FeatureMask) -> String {
        mask.to_string()
    }
}

/// Named feature sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Jmfar,
    JmfarSel,
    JmfarNs,
    Custom(FeatureMask),
}

impl Variant {
    pub fn mask(self) -> FeatureMask {
        match self {
            Variant::Jmfar => FeatureMask::JMFAR,
            Variant::JmfarSel => FeatureMask::jmfar_sel(),
            Variant::JmfarNs => FeatureMask::jmfar_ns(),
            Variant::Custom(mask) => mask,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Jmfar => f.write_str("jmfar"),
            Variant::JmfarSel => f.write_str("jmfar-sel"),
            Variant::JmfarNs => f.write_str("jmfar-ns"),
            Variant::Custom(mask) => write!(f, "{mask}"),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// `jmfar`, `jmfar-sel`, `jmfar-ns`, or a comma-separated feature list such as `f4,f6,f22`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jmfar" => Ok(Variant::Jmfar),
            "jmfar-sel" => Ok(Variant::JmfarSel),
            "jmfar-ns" => Ok(Variant::JmfarNs),
            other => {
                let mask: FeatureMask = other.parse()?;
                if mask.is_empty() {
                    return Err(Error::InvalidInput(format!("unknown variant '{s}'")));
                }
                Ok(Variant::Custom(mask))
            }
        }
    }
}

bitflags! {
    /// Conditions met while computing a feature vector.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct FeatureFlags: u16 {
        const NO_EVENTS = 1 << 0;
        const DEGENERATE_AMPLITUDE_STATS = 1 << 1;
        const DEGENERATE_DURATION_STATS = 1 << 2;
        const DEGENERATE_ENVELOPE_SPECTRUM = 1 << 3;
        const DEGENERATE_JITTER = 1 << 4;
        const DEGENERATE_SHIMMER = 1 << 5;
        const DEGENERATE_TACHOGRAM_SPECTRUM = 1 << 6;
        /// The segment is shorter than the configured segment length.
        const PARTIAL_SEGMENT = 1 << 7;
    }
}

const FLAG_NAMES: [(FeatureFlags, &str); 8] = [
    (FeatureFlags::NO_EVENTS, "no_events"),
    (FeatureFlags::DEGENERATE_AMPLITUDE_STATS, "degenerate_amplitude_stats"),
    (FeatureFlags::DEGENERATE_DURATION_STATS, "degenerate_duration_stats"),
    (FeatureFlags::DEGENERATE_ENVELOPE_SPECTRUM, "degenerate_envelope_spectrum"),
    (FeatureFlags::DEGENERATE_JITTER, "degenerate_jitter"),
    (FeatureFlags::DEGENERATE_SHIMMER, "degenerate_shimmer"),
    (FeatureFlags::DEGENERATE_TACHOGRAM_SPECTRUM, "degenerate_tachogram_spectrum"),
    (FeatureFlags::PARTIAL_SEGMENT, "partial_segment"),
];

impl FeatureFlags {
    /// Flag names joined by `|`; empty when no flag is set.
    pub fn to_names(self) -> String {
        FLAG_NAMES
            .iter()
            .filter(|(flag, _)| self.contains(*flag))
            .map(|(_, name)| *name)
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn from_names(s: &str) -> Result<Self> {
        let mut flags = FeatureFlags::empty();
        for name in s.split('|').map(str::trim).filter(|n| !n.is_empty()) {
            let flag = FLAG_NAMES
                .iter()
                .find(|(_, n)| *n == name)
                .map(|(f, _)| *f)
                .ok_or_else(|| Error::Format(format!("unknown feature flag '{name}'")))?;
            flags |= flag;
        }
        Ok(flags)
    }
}

/// Feature values in slot order f4..f24; inactive slots hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    pub mask: FeatureMask,
    pub flags: FeatureFlags,
}

impl FeatureVector {
    /// Builds a vector from raw slot values, zeroing the inactive slots.
    pub fn new(values: [f64; FEATURE_COUNT], mask: FeatureMask, flags: FeatureFlags) -> Self {
        let mut values = values;
        for (slot, v) in values.iter_mut().enumerate() {
            if !mask.contains(FeatureId::from_slot(slot).expect("slot in range")) {
                *v = 0.0;
            }
        }
        Self {
            values,
            mask,
            flags,
        }
    }

    pub fn get(&self, id: FeatureId) -> f64 {
        self.values[id.slot()]
    }

    /// Values of the active features, in slot order.
    pub fn active_values(&self) -> Vec<f64> {
        self.mask.iter().map(|id| self.values[id.slot()]).collect()
    }

    /// Same values seen through a narrower mask.
    pub fn restricted(&self, mask: FeatureMask) -> Result<FeatureVector> {
        if mask.bits() & !self.mask.bits() != 0 {
            return Err(Error::InvalidInput(format!(
                "mask {mask} is not a subset of the computed features {}",
                self.mask
            )));
        }
        Ok(FeatureVector::new(self.values, mask, self.flags))
    }
}

/// Inter-event periods indexed by event time.
#[derive(Debug, Clone, PartialEq)]
pub struct Tachogram {
    times_s: Vec<f64>,
    intervals_s: Vec<f64>,
}

impl Tachogram {
    /// From strictly increasing event times.
    pub fn from_times(times_s: &[f64]) -> Result<Self> {
        if let Some(i) = times_s.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!(
                "event times must be strictly increasing (index {})",
                i + 1
            )));
        }
        Ok(Self {
            times_s: times_s.to_vec(),
            intervals_s: times_s.windows(2).map(|w| w[1] - w[0]).collect(),
        })
    }

    pub fn from_events(events: &[JmEvent]) -> Result<Self> {
        Self::from_times(&events.iter().map(|e| e.timestamp_s).collect::<Vec<_>>())
    }

    /// From a start time and explicit periods; the periods are kept verbatim.
    pub fn from_intervals(start_s: f64, intervals_s: &[f64]) -> Result<Self> {
        if let Some(i) = intervals_s.iter().position(|p| !(*p > 0.0)) {
            return Err(Error::InvalidInput(format!("period {i} must be positive")));
        }
        let mut times = Vec::with_capacity(intervals_s.len() + 1);
        times.push(start_s);
        let mut t = start_s;
        for &p in intervals_s {
            t += p;
            times.push(t);
        }
        Ok(Self {
            times_s: times,
            intervals_s: intervals_s.to_vec(),
        })
    }

    pub fn times_s(&self) -> &[f64] {
        &self.times_s
    }

    pub fn intervals_s(&self) -> &[f64] {
        &self.intervals_s
    }
}

/// Events and envelope of one analysis segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentBuffer {
    pub events: Vec<JmEvent>,
    pub envelope: EnvelopeSignal,
    pub segment_start_s: f64,
    pub segment_len_s: f64,
}

impl SegmentBuffer {
    pub fn new(
        events: Vec<JmEvent>,
        envelope: EnvelopeSignal,
        segment_start_s: f64,
        segment_len_s: f64,
    ) -> Result<Self> {
        if !(segment_len_s > 0.0) {
            return Err(Error::InvalidInput("segment length must be positive".into()));
        }
        let end = segment_start_s + segment_len_s;
        if let Some(e) = events
            .iter()
            .find(|e| e.timestamp_s < segment_start_s || e.timestamp_s >= end)
        {
            return Err(Error::InvalidInput(format!(
                "event at {} s lies outside the segment [{segment_start_s}, {end})",
                e.timestamp_s
            )));
        }
        if events.windows(2).any(|w| !(w[1].timestamp_s > w[0].timestamp_s)) {
            return Err(Error::InvalidInput("event timestamps must be strictly increasing".into()));
        }
        Ok(Self {
            events,
            envelope,
            segment_start_s,
            segment_len_s,
        })
    }

    /// Cuts one segment out of a whole-recording event list and envelope.
    pub fn from_recording(
        events: &[JmEvent],
        envelope: &EnvelopeSignal,
        segment_start_s: f64,
        segment_len_s: f64,
    ) -> Result<Self> {
        let end = segment_start_s + segment_len_s;
        let events = events
            .iter()
            .filter(|e| e.timestamp_s >= segment_start_s && e.timestamp_s < end)
            .copied()
            .collect();
        Self::new(
            events,
            envelope.slice(segment_start_s, segment_len_s),
            segment_start_s,
            segment_len_s,
        )
    }

    pub fn tachogram(&self) -> Tachogram {
        Tachogram::from_events(&self.events).expect("buffer events are strictly increasing")
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.amplitude).collect()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.duration_s).collect()
    }
}

/// Events per second over the segment.
pub fn jm_rate(buf: &SegmentBuffer) -> f64 {
    buf.events.len() as f64 / buf.segment_len_s
}

/// Computes the masked features of one segment.
///
/// Degenerate inputs (too few events, a flat envelope) produce zeros plus a
/// flag instead of an error, so silent segments still get a vector.
pub fn extract_features(buf: &SegmentBuffer, mask: FeatureMask) -> Result<FeatureVector> {
    let mut values = [0.0; FEATURE_COUNT];
    let mut flags = FeatureFlags::empty();
    let on = |n: u8| mask.contains(FeatureId(n));
    let any = |ns: &[u8]| ns.iter().any(|&n| on(n));
    let mut set = |n: u8, v: f64| values[usize::from(n) - 4] = v;

    if buf.events.is_empty() {
        flags |= FeatureFlags::NO_EVENTS;
    }
    if on(4) {
        set(4, jm_rate(buf));
    }
    if any(&[5, 6, 7, 8]) {
        let s = moment_stats(&buf.amplitudes());
        if s.degenerate {
            flags |= FeatureFlags::DEGENERATE_AMPLITUDE_STATS;
        }
        set(5, s.mean);
        set(6, s.std);
        set(7, s.skewness);
        set(8, s.kurtosis);
    }
    if any(&[9, 10, 11, 12]) {
        let s = moment_stats(&buf.durations());
        if s.degenerate {
            flags |= FeatureFlags::DEGENERATE_DURATION_STATS;
        }
        set(9, s.mean);
        set(10, s.std);
        set(11, s.skewness);
        set(12, s.kurtosis);
    }
    if on(13) {
        let m = envelope_band_energy(&buf.envelope);
        if m.degenerate {
            flags |= FeatureFlags::DEGENERATE_ENVELOPE_SPECTRUM;
        }
        set(13, m.value);
    }

    let tach = buf.tachogram();
    if any(&[14, 15, 16, 17]) {
        let measures = [
            (14, jitter_abs(&tach)),
            (15, jitter_rel(&tach)),
            (16, jitter_ppq5(&tach)),
            (17, jitter_std(&tach)),
        ];
        for (n, m) in measures.into_iter().filter(|(n, _)| on(*n)) {
            if m.degenerate {
                flags |= FeatureFlags::DEGENERATE_JITTER;
            }
            set(n, m.value);
        }
    }
    if any(&[18, 19, 20, 21]) {
        let amplitudes = buf.amplitudes();
        let measures = [
            (18, shimmer_abs(&amplitudes)?),
            (19, shimmer_rel(&amplitudes)?),
            (20, shimmer_apq5(&amplitudes)?),
            (21, shimmer_std(&amplitudes)?),
        ];
        for (n, m) in measures.into_iter().filter(|(n, _)| on(*n)) {
            if m.degenerate {
                flags |= FeatureFlags::DEGENERATE_SHIMMER;
            }
            set(n, m.value);
        }
    }
    if on(22) {
        set(22, long_interval_rate(&tach, buf.segment_len_s));
    }
    if any(&[23, 24]) {
        let (low, wide) = tachogram_band_energies(&tach, buf.segment_start_s, buf.segment_len_s);
        if low.degenerate || wide.degenerate {
            flags |= FeatureFlags::DEGENERATE_TACHOGRAM_SPECTRUM;
        }
        set(23, low.value);
        set(24, wide.value);
    }
    Ok(FeatureVector::new(values, mask, flags))
}

/// One row of a feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub segment_start_s: f64,
    pub features: FeatureVector,
    pub label: Option<Activity>,
}

/// Column names of a feature table, in order: `segment_start_s`, `f4`..`f24`,
/// `flags`, `label`. Inactive features are written as 0; `flags` holds
/// `|`-separated flag names and `label` may be empty.
pub fn feature_csv_header() -> Vec<String> {
    let mut cols = vec!["segment_start_s".to_string()];
    cols.extend(FeatureId::all().map(|id| id.to_string()));
    cols.push("flags".into());
    cols.push("label".into());
    cols
}

pub fn write_feature_csv<W: Write>(writer: W, rows: &[FeatureRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(feature_csv_header())?;
    for row in rows {
        let mut record = vec![row.segment_start_s.to_string()];
        record.extend(row.features.values.iter().map(|v| v.to_string()));
        record.push(row.features.flags.to_names());
        record.push(row.label.map(|l| l.to_string()).unwrap_or_default());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a feature table; every row gets `mask` (values outside it are zeroed).
pub fn read_feature_csv<R: Read>(reader: R, mask: FeatureMask) -> Result<Vec<FeatureRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let expected = feature_csv_header();
    if header != expected && header[..] != expected[..expected.len() - 1] {
        return Err(Error::Format(format!(
            "unexpected feature table header: {}",
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("row {}: column {} is not a number", line + 1, header[i])))
        };
        let start = parse(0)?;
        let mut values = [0.0; FEATURE_COUNT];
        for (slot, v) in values.iter_mut().enumerate() {
            *v = parse(slot + 1)?;
        }
        let flags = FeatureFlags::from_names(record.get(FEATURE_COUNT + 1).unwrap_or(""))?;
        let label = match record.get(FEATURE_COUNT + 2).map(str::trim) {
            None | Some("") => None,
            Some(l) => Some(l.parse()?),
        };
        rows.push(FeatureRow {
            segment_start_s: start,
            features: FeatureVector::new(values, mask, flags),
            label,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(t: f64, a: f64, d: f64) -> JmEvent {
        JmEvent::new(t, a, d).unwrap()
    }

    fn buffer(events: Vec<JmEvent>) -> SegmentBuffer {
        SegmentBuffer::new(events, EnvelopeSignal::zeros(30_000, 100.0, 0.0).unwrap(), 0.0, 300.0)
            .unwrap()
    }

    #[test]
    fn variant_masks() {
        assert_eq!(FeatureMask::JMFAR.count(), 21);
        assert_eq!(FeatureMask::jmfar_ns().count(), 18);
        assert!(!FeatureMask::jmfar_ns().any_spectral());
        let sel = FeatureMask::jmfar_sel();
        assert_eq!(sel.count(), 12);
        assert_eq!(sel.to_string(), "f6,f7,f8,f11,f12,f13,f15,f17,f18,f19,f20,f22");
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("jmfar".parse::<Variant>().unwrap(), Variant::Jmfar);
        assert_eq!("JMFAR-sel".parse::<Variant>().unwrap(), Variant::JmfarSel);
        assert_eq!("jmfar-ns".parse::<Variant>().unwrap(), Variant::JmfarNs);
        let custom: Variant = "f4, f22".parse().unwrap();
        assert_eq!(custom.mask().count(), 2);
        assert!("bufar".parse::<Variant>().is_err());
        assert!("f3".parse::<Variant>().is_err());
        assert!("f25".parse::<FeatureId>().is_err());
    }

    #[test]
    fn flag_names_round_trip() {
        let flags = FeatureFlags::NO_EVENTS | FeatureFlags::PARTIAL_SEGMENT;
        assert_eq!(flags.to_names(), "no_events|partial_segment");
        assert_eq!(FeatureFlags::from_names(&flags.to_names()).unwrap(), flags);
        assert_eq!(FeatureFlags::from_names("").unwrap(), FeatureFlags::empty());
    }

    #[test]
    fn jm_rate_counts_per_second() {
        let events: Vec<_> = (0..600).map(|i| event(i as f64 * 0.5, 1.0, 0.2)).collect();
        assert_eq!(jm_rate(&buffer(events)), 2.0);
        let events: Vec<_> = (0..300).map(|i| event(i as f64, 1.0, 0.2)).collect();
        assert_eq!(jm_rate(&buffer(events)), 1.0);
        assert_eq!(jm_rate(&buffer(Vec::new())), 0.0);
    }

    #[test]
    fn silent_segment_is_flagged_zero_vector() {
        let fv = extract_features(&buffer(Vec::new()), FeatureMask::JMFAR).unwrap();
        assert!(fv.values.iter().all(|&v| v == 0.0));
        assert!(fv.flags.contains(FeatureFlags::NO_EVENTS));
        assert!(fv.flags.contains(FeatureFlags::DEGENERATE_JITTER));
        assert!(fv.flags.contains(FeatureFlags::DEGENERATE_TACHOGRAM_SPECTRUM));
    }

    #[test]
    fn masked_slots_are_zero() {
        let events: Vec<_> = (0..200)
            .map(|i| event(i as f64 * 1.1, 1.0 + (i % 3) as f64, 0.3))
            .collect();
        let buf = buffer(events);
        let full = extract_features(&buf, FeatureMask::JMFAR).unwrap();
        let ns = extract_features(&buf, FeatureMask::jmfar_ns()).unwrap();
        for id in [FeatureId::F13, FeatureId::F23, FeatureId::F24] {
            assert_eq!(ns.get(id), 0.0);
        }
        for id in FeatureMask::jmfar_ns().iter() {
            assert_eq!(ns.get(id), full.get(id));
        }
        assert_eq!(ns.active_values().len(), 18);
    }

    #[test]
    fn buffer_rejects_out_of_segment_events() {
        let env = EnvelopeSignal::zeros(10, 100.0, 0.0).unwrap();
        assert!(SegmentBuffer::new(vec![event(300.0, 1.0, 0.1)], env.clone(), 0.0, 300.0).is_err());
        assert!(SegmentBuffer::new(
            vec![event(2.0, 1.0, 0.1), event(1.0, 1.0, 0.1)],
            env,
            0.0,
            300.0
        )
        .is_err());
    }

    #[test]
    fn csv_round_trip() {
        let events: Vec<_> = (0..50).map(|i| event(i as f64 * 1.3, 1.0 + (i % 4) as f64, 0.3)).collect();
        let fv = extract_features(&buffer(events), FeatureMask::JMFAR).unwrap();
        let rows = vec![
            FeatureRow {
                segment_start_s: 0.0,
                features: fv,
                label: Some(Activity::Grazing),
            },
            FeatureRow {
                segment_start_s: 300.0,
                features: extract_features(&buffer(Vec::new()), FeatureMask::JMFAR).unwrap(),
                label: None,
            },
        ];
        let mut out = Vec::new();
        write_feature_csv(&mut out, &rows).unwrap();
        let back = read_feature_csv(out.as_slice(), FeatureMask::JMFAR).unwrap();
        assert_eq!(back, rows);
    }
}
