//! Worst-case operation counts and RAM footprint of the recognizer.
//!
//! Per-second stages scale with the sampling rate and the event rate. Feature
//! costs are worst-case counts for one segment with 600 events; features that
//! reuse another feature's partial results pay for that feature too, once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureMask};

/// Reference operating point the per-feature table was counted at.
pub const REFERENCE_SAMPLING_RATE_HZ: f64 = 2000.0;
pub const REFERENCE_SEGMENT_LEN_S: f64 = 300.0;
pub const REFERENCE_EVENTS_PER_S: f64 = 2.0;

const DETREND_OPS_PER_SAMPLE: f64 = 5.0;
const DETECTION_OPS_PER_S_AT_REFERENCE: f64 = 27_200.0;
const EVENT_FEATURE_OPS_PER_EVENT: f64 = 150.0;
const BUFFER_OPS_PER_EVENT: f64 = 3.0;

/// Interpolation, transform and total energy of the tachogram; shared by f23 and f24.
pub const TACHOGRAM_SPECTRUM_OPS: u64 = 2_009_479;

/// Ops per weight of a dense layer (multiply and accumulate).
pub const MLP_OPS_PER_WEIGHT: u64 = 2;
/// Biases, activations and the output decision of the 20-3 reference network.
pub const MLP_FIXED_OPS: u64 = 1_319;

/// Published total of the predecessor recognizer, kept for comparison only.
pub const BUFAR_OPS_PER_S: u64 = 37_966;

/// How a relative jitter or shimmer variant is charged when its absolute
/// variant is not in the mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelativeCharging {
    /// The absolute variant is computed anyway and paid for.
    #[default]
    WithBase,
    /// Only the 601 extra ops are paid.
    ExtraOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpDims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl MlpDims {
    /// Dense mat-vec products plus the fixed overhead.
    pub fn ops(&self) -> u64 {
        let weights = (self.input * self.hidden + self.hidden * self.output) as u64;
        MLP_OPS_PER_WEIGHT * weights + MLP_FIXED_OPS
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostAssumptions {
    pub sampling_rate_hz: f64,
    pub segment_len_s: f64,
    pub events_per_s: f64,
    pub mask: FeatureMask,
    /// `None` leaves the classifier out of the ledger.
    pub classifier: Option<MlpDims>,
    pub relative_charging: RelativeCharging,
    pub envelope_rate_hz: f64,
    pub bytes_per_sample: f64,
}

impl CostAssumptions {
    /// Reference operating point with a 20-hidden, 3-output classifier over the masked features.
    pub fn for_mask(mask: FeatureMask) -> Self {
        Self {
            sampling_rate_hz: REFERENCE_SAMPLING_RATE_HZ,
            segment_len_s: REFERENCE_SEGMENT_LEN_S,
            events_per_s: REFERENCE_EVENTS_PER_S,
            mask,
            classifier: Some(MlpDims {
                input: mask.count(),
                hidden: 20,
                output: 3,
            }),
            relative_charging: RelativeCharging::WithBase,
            envelope_rate_hz: 100.0,
            bytes_per_sample: 1.0,
        }
    }

    pub fn front_end_only() -> Self {
        Self {
            classifier: None,
            ..Self::for_mask(FeatureMask::EMPTY)
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("sampling_rate_hz", self.sampling_rate_hz),
            ("segment_len_s", self.segment_len_s),
            ("events_per_s", self.events_per_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(d) = self.classifier {
            if d.input != self.mask.count() {
                return Err(Error::Config(format!(
                    "classifier input {} does not match {} active features",
                    d.input,
                    self.mask.count()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostUnit {
    PerSecond,
    PerSegment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCost {
    pub stage: String,
    pub ops: f64,
    pub unit: CostUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub stages: Vec<StageCost>,
    pub per_second_ops: f64,
    pub per_segment_ops: f64,
    pub segment_len_s: f64,
    /// `per_second_ops + per_segment_ops / segment_len_s`, unrounded.
    pub exact_ops_per_s: f64,
    pub total_ops_per_s: u64,
    pub ram_bytes: u64,
}

/// Stand-alone per-segment count of one feature (without shared prerequisites).
pub fn feature_ops(id: FeatureId) -> u64 {
    match id.number() {
        4 => 1,
        5 | 9 => 600,
        6 | 10 => 1_801,
        7 | 11 => 2_401,
        8 | 12 => 3_001,
        13 => 1_830_252,
        14 => 2_396,
        18 => 2_398,
        15 | 19 => 601,
        16 | 20 => 4_770,
        17 => 2_997,
        21 => 4_195,
        22 => 1_201,
        23 => 5,
        24 => 53,
        _ => unreachable!("feature ids are f4..f24"),
    }
}

/// Features whose partial results `id` reuses.
fn prerequisites(id: FeatureId, charging: RelativeCharging) -> &'static [u8] {
    let relative_base = charging == RelativeCharging::WithBase;
    match id.number() {
        6 => &[5],
        7 | 8 => &[5, 6],
        10 => &[9],
        11 | 12 => &[9, 10],
        15 if relative_base => &[14],
        16 if relative_base => &[14, 15],
        16 => &[15],
        17 => &[14],
        19 if relative_base => &[18],
        20 | 21 => &[18],
        _ => &[],
    }
}

/// Features charged for `mask`: the mask plus every prerequisite.
pub fn charged_features(mask: FeatureMask, charging: RelativeCharging) -> FeatureMask {
    mask.iter().fold(mask, |acc, id| {
        prerequisites(id, charging)
            .iter()
            .fold(acc, |acc, &n| acc.with(FeatureId::from_number(n).expect("valid id")))
    })
}

pub fn cost(a: &CostAssumptions) -> Result<CostReport> {
    a.validate()?;
    let fs_scale = a.sampling_rate_hz / REFERENCE_SAMPLING_RATE_HZ;
    let mut stages = vec![
        StageCost {
            stage: "pre-processing (detrend)".into(),
            ops: DETREND_OPS_PER_SAMPLE * a.sampling_rate_hz,
            unit: CostUnit::PerSecond,
        },
        StageCost {
            stage: "JM detection".into(),
            ops: DETECTION_OPS_PER_S_AT_REFERENCE * fs_scale,
            unit: CostUnit::PerSecond,
        },
        StageCost {
            stage: "JM feature extraction".into(),
            ops: EVENT_FEATURE_OPS_PER_EVENT * a.events_per_s,
            unit: CostUnit::PerSecond,
        },
        StageCost {
            stage: "buffering".into(),
            ops: BUFFER_OPS_PER_EVENT * a.events_per_s,
            unit: CostUnit::PerSecond,
        },
    ];

    let charged = charged_features(a.mask, a.relative_charging);
    for id in charged.iter() {
        let name = if a.mask.contains(id) {
            id.to_string()
        } else {
            format!("{id} (shared, not in mask)")
        };
        stages.push(StageCost {
            stage: name,
            ops: feature_ops(id) as f64,
            unit: CostUnit::PerSegment,
        });
    }
    if a.mask.contains(FeatureId::F23) || a.mask.contains(FeatureId::F24) {
        stages.push(StageCost {
            stage: "tachogram interpolation and transform".into(),
            ops: TACHOGRAM_SPECTRUM_OPS as f64,
            unit: CostUnit::PerSegment,
        });
    }
    if let Some(dims) = a.classifier {
        stages.push(StageCost {
            stage: format!("MLP {}-{}-{}", dims.input, dims.hidden, dims.output),
            ops: dims.ops() as f64,
            unit: CostUnit::PerSegment,
        });
    }

    let sum = |unit| {
        stages
            .iter()
            .filter(|s| s.unit == unit)
            .map(|s| s.ops)
            .sum::<f64>()
    };
    let per_second_ops = sum(CostUnit::PerSecond);
    let per_segment_ops = sum(CostUnit::PerSegment);
    let exact = per_second_ops + per_segment_ops / a.segment_len_s;
    Ok(CostReport {
        stages,
        per_second_ops,
        per_segment_ops,
        segment_len_s: a.segment_len_s,
        exact_ops_per_s: exact,
        total_ops_per_s: exact.round() as u64,
        ram_bytes: ram_estimate(a),
    })
}

/// Bytes to hold one segment of envelope, doubled when a spectral feature needs
/// its own buffer.
pub fn ram_estimate(a: &CostAssumptions) -> u64 {
    let envelope = (a.envelope_rate_hz * a.segment_len_s.max(0.0) * a.bytes_per_sample).round() as u64;
    if a.mask.any_spectral() {
        2 * envelope
    } else {
        envelope
    }
}

/// Published total of the predecessor recognizer. Only the front end is
/// itemized; the rest is a single opaque remainder.
pub fn bufar_report() -> CostReport {
    let front = cost(&CostAssumptions::front_end_only()).expect("reference assumptions are valid");
    let remainder = BUFAR_OPS_PER_S as f64 - front.per_second_ops;
    let mut stages = front.stages;
    stages.push(StageCost {
        stage: "JM classification, f1-f4 and classifier (not itemized)".into(),
        ops: remainder,
        unit: CostUnit::PerSecond,
    });
    CostReport {
        stages,
        per_second_ops: BUFAR_OPS_PER_S as f64,
        per_segment_ops: 0.0,
        segment_len_s: REFERENCE_SEGMENT_LEN_S,
        exact_ops_per_s: BUFAR_OPS_PER_S as f64,
        total_ops_per_s: BUFAR_OPS_PER_S,
        ram_bytes: ram_estimate(&CostAssumptions::front_end_only()),
    }
}
