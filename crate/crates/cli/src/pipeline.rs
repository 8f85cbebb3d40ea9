//! Recording-level pipeline: envelope, events, segments, features, labels, blocks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use jmfar::classifier::{classify, MlpModel};
use jmfar::eval::{Activity, ActivityBlock};
use jmfar::features::{extract_features, FeatureFlags, FeatureMask, FeatureRow, SegmentBuffer, Variant};
use jmfar::frontend::{compute_envelope, detect_events, detrend_with_cutoff, DetectorConfig, EnvelopeSignal, JmEvent, RawAudio};
use jmfar::{Error, Result};

pub const DEFAULT_SEGMENT_LEN_S: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub detector: DetectorConfig,
    pub segment_len_s: f64,
    /// `jmfar`, `jmfar-sel`, `jmfar-ns` or a feature list such as `f4,f6,f22`.
    pub variant: String,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            detector: DetectorConfig::default(),
            segment_len_s: DEFAULT_SEGMENT_LEN_S,
            variant: "jmfar".into(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn mask(&self) -> Result<FeatureMask> {
        let variant: Variant = self
            .variant
            .parse()
            .map_err(|e| Error::Config(format!("variant: {e}")))?;
        Ok(variant.mask())
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        if !(self.segment_len_s > 0.0 && self.segment_len_s.is_finite()) {
            return Err(Error::Config("segment_len_s must be positive".into()));
        }
        self.mask().map(|_| ())
    }
}

/// Detrended, rectified and decimated envelope of a recording.
pub fn recording_envelope(audio: &RawAudio, detector: &DetectorConfig) -> Result<EnvelopeSignal> {
    let clean = detrend_with_cutoff(audio, detector.detrend_cutoff_hz)?;
    compute_envelope(&clean, detector)
}

/// `(start, length)` of each segment. Segments tile `[0, duration_s)`; the last
/// one is shorter when the duration is not a multiple of `segment_len_s`.
pub fn segment_bounds(duration_s: f64, segment_len_s: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let start = k as f64 * segment_len_s;
        if start >= duration_s {
            break;
        }
        out.push((start, segment_len_s.min(duration_s - start)));
        k += 1;
    }
    out
}

/// Feature rows of every segment, in time order. Short trailing segments carry
/// [`FeatureFlags::PARTIAL_SEGMENT`].
pub fn segment_features(
    events: &[JmEvent],
    envelope: &EnvelopeSignal,
    segment_len_s: f64,
    mask: FeatureMask,
) -> Result<Vec<FeatureRow>> {
    segment_bounds(envelope.duration_s(), segment_len_s)
        .into_par_iter()
        .map(|(start, len)| {
            let buf = SegmentBuffer::from_recording(events, envelope, start, len)?;
            let mut features = extract_features(&buf, mask)?;
            if len < segment_len_s {
                features.flags |= FeatureFlags::PARTIAL_SEGMENT;
            }
            Ok(FeatureRow {
                segment_start_s: start,
                features,
                label: None,
            })
        })
        .collect()
}

/// Joins consecutive segments with the same label.
pub fn merge_segments(labels: &[(f64, f64, Activity)]) -> Vec<ActivityBlock> {
    let mut blocks: Vec<ActivityBlock> = Vec::new();
    for &(start, end, label) in labels {
        match blocks.last_mut() {
            Some(b) if b.label == label => b.end_s = end,
            _ => blocks.push(ActivityBlock { start_s: start, end_s: end, label }),
        }
    }
    blocks
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub blocks: Vec<ActivityBlock>,
    /// One row per segment with its predicted label.
    pub segments: Vec<FeatureRow>,
}

/// Classifies a recording segment by segment and merges the result into blocks.
pub fn run_pipeline(audio: &RawAudio, cfg: &PipelineConfig, model: &MlpModel) -> Result<PipelineOutput> {
    cfg.validate()?;
    let mask = cfg.mask()?;
    if model.mask != mask {
        return Err(Error::Config(format!(
            "model features {} differ from the configured variant {mask}",
            model.mask
        )));
    }
    if audio.is_empty() {
        return Ok(PipelineOutput {
            blocks: Vec::new(),
            segments: Vec::new(),
        });
    }
    let envelope = recording_envelope(audio, &cfg.detector)?;
    let events = detect_events(&envelope, &cfg.detector);
    let mut rows = segment_features(&events, &envelope, cfg.segment_len_s, mask)?;
    rows.par_iter_mut().try_for_each(|row| -> Result<()> {
        row.label = Some(classify(model, &row.features)?.label);
        Ok(())
    })?;
    let duration = audio.duration_s();
    let labelled: Vec<(f64, f64, Activity)> = rows
        .iter()
        .map(|r| {
            let end = (r.segment_start_s + cfg.segment_len_s).min(duration);
            (r.segment_start_s, end, r.label.expect("labelled above"))
        })
        .collect();
    Ok(PipelineOutput {
        blocks: merge_segments(&labelled),
        segments: rows,
    })
}

/// Label covering most of `[start, start + len)`, if the blocks cover any of it.
pub fn majority_label(blocks: &[ActivityBlock], start: f64, len: f64) -> Option<Activity> {
    let mut cover = [0.0; 3];
    for b in blocks {
        let overlap = (b.end_s.min(start + len) - b.start_s.max(start)).max(0.0);
        cover[b.label.index()] += overlap;
    }
    let best = (0..3).max_by(|&a, &b| cover[a].total_cmp(&cover[b]))?;
    (cover[best] > 0.0).then(|| Activity::ALL[best])
}
