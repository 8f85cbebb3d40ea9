//! Frame-based scoring of activity blocks.
//!
//! Blocks are turned into 1 s frames (a frame takes the label of the block
//! covering its midpoint), then scored with per-class and weighted F1, a
//! row-normalized confusion matrix, and segment-based error metrics.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Activity classes, in matrix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    Grazing,
    Rumination,
    Other,
}

impl Activity {
    pub const ALL: [Activity; 3] = [Activity::Grazing, Activity::Rumination, Activity::Other];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Activity> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activity::Grazing => "grazing",
            Activity::Rumination => "rumination",
            Activity::Other => "other",
        })
    }
}

impl FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "grazing" => Ok(Activity::Grazing),
            "rumination" => Ok(Activity::Rumination),
            "other" => Ok(Activity::Other),
            _ => Err(Error::Format(format!("unknown activity label '{s}'"))),
        }
    }
}

/// A labelled interval `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityBlock {
    pub start_s: f64,
    pub end_s: f64,
    pub label: Activity,
}

impl ActivityBlock {
    pub fn new(start_s: f64, end_s: f64, label: Activity) -> Result<Self> {
        if !(start_s.is_finite() && end_s.is_finite() && end_s > start_s) {
            return Err(Error::InvalidInput(format!(
                "block [{start_s}, {end_s}) must have end > start"
            )));
        }
        Ok(Self {
            start_s,
            end_s,
            label,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Checks that blocks are time-ordered and do not overlap.
pub fn validate_blocks(blocks: &[ActivityBlock]) -> Result<()> {
    for b in blocks {
        ActivityBlock::new(b.start_s, b.end_s, b.label)?;
    }
    match blocks.windows(2).position(|w| w[1].start_s < w[0].end_s) {
        Some(i) => Err(Error::InvalidInput(format!(
            "blocks {i} and {} overlap or are out of order",
            i + 1
        ))),
        None => Ok(()),
    }
}

/// Labels of consecutive 1 s frames starting at `origin_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    pub labels: Vec<Activity>,
    pub origin_s: u64,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Frames per class, in [`Activity::ALL`] order.
    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Collapses runs of equal labels back into blocks.
    pub fn to_blocks(&self) -> Vec<ActivityBlock> {
        runs(&self.labels)
            .into_iter()
            .map(|(start, end, label)| ActivityBlock {
                start_s: (self.origin_s + start as u64) as f64,
                end_s: (self.origin_s + end as u64) as f64,
                label,
            })
            .collect()
    }
}

/// Maximal runs of equal values as `(start, end, value)`, end exclusive.
fn runs<T: Copy + PartialEq>(xs: &[T]) -> Vec<(usize, usize, T)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=xs.len() {
        if i == xs.len() || xs[i] != xs[start] {
            out.push((start, i, xs[start]));
            start = i;
        }
    }
    out
}

/// One frame per whole second of the recording; uncovered frames are `Other`.
pub fn blocks_to_frames(blocks: &[ActivityBlock], recording_len_s: f64) -> Result<FrameSequence> {
    validate_blocks(blocks)?;
    if !(recording_len_s >= 0.0) {
        return Err(Error::InvalidInput("recording length must be non-negative".into()));
    }
    let n = recording_len_s.floor() as usize;
    let mut labels = vec![Activity::Other; n];
    for b in blocks {
        // Frames whose midpoint i + 0.5 lies in [start, end).
        let first = (b.start_s - 0.5).ceil().max(0.0) as usize;
        let end = ((b.end_s - 0.5).ceil().max(0.0) as usize).min(n);
        for label in labels.iter_mut().take(end).skip(first) {
            *label = b.label;
        }
    }
    Ok(FrameSequence {
        labels,
        origin_s: 0,
    })
}

fn check_lengths(truth: &FrameSequence, pred: &FrameSequence) -> Result<()> {
    if truth.len() != pred.len() {
        return Err(Error::InvalidInput(format!(
            "frame sequences differ in length ({} vs {})",
            truth.len(),
            pred.len()
        )));
    }
    Ok(())
}

/// Raw 3x3 tally; rows are truth, columns prediction.
pub fn confusion_counts(truth: &FrameSequence, pred: &FrameSequence) -> Result<[[usize; 3]; 3]> {
    check_lengths(truth, pred)?;
    let mut counts = [[0; 3]; 3];
    for (t, p) in truth.labels.iter().zip(&pred.labels) {
        counts[t.index()][p.index()] += 1;
    }
    Ok(counts)
}

/// Confusion matrix with each row divided by its truth count; absent rows are zero.
pub fn confusion_matrix(truth: &FrameSequence, pred: &FrameSequence) -> Result<[[f64; 3]; 3]> {
    let counts = confusion_counts(truth, pred)?;
    let mut m = [[0.0; 3]; 3];
    for (row, counts) in m.iter_mut().zip(counts) {
        let total: usize = counts.iter().sum();
        if total > 0 {
            for (cell, c) in row.iter_mut().zip(counts) {
                *cell = c as f64 / total as f64;
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    /// `None` for a class absent from both sequences.
    pub per_class: [Option<f64>; 3],
    /// Truth frames per class.
    pub support: [usize; 3],
    pub weighted: f64,
}

/// Per-class F1 and their support-weighted mean, `Other` included.
pub fn weighted_f1(truth: &FrameSequence, pred: &FrameSequence) -> Result<F1Scores> {
    weighted_f1_with(truth, pred, true)
}

/// As [`weighted_f1`]; with `include_other` false the `Other` class gets no weight.
pub fn weighted_f1_with(
    truth: &FrameSequence,
    pred: &FrameSequence,
    include_other: bool,
) -> Result<F1Scores> {
    let counts = confusion_counts(truth, pred)?;
    let mut per_class = [None; 3];
    let mut support = [0; 3];
    for c in 0..3 {
        let tp = counts[c][c];
        let actual: usize = counts[c].iter().sum();
        let predicted: usize = (0..3).map(|r| counts[r][c]).sum();
        support[c] = actual;
        if actual + predicted == 0 {
            continue;
        }
        per_class[c] = Some(2.0 * tp as f64 / (actual + predicted) as f64);
    }
    let weighted_classes: Vec<usize> = (0..3)
        .filter(|&c| include_other || c != Activity::Other.index())
        .collect();
    let total: usize = weighted_classes.iter().map(|&c| support[c]).sum();
    let weighted = if total == 0 {
        // Nothing to weigh: perfect only if no weighted class was predicted either.
        let predicted_any = weighted_classes.iter().any(|&c| per_class[c].is_some());
        if predicted_any {
            0.0
        } else {
            1.0
        }
    } else {
        weighted_classes
            .iter()
            .map(|&c| support[c] as f64 * per_class[c].unwrap_or(0.0))
            .sum::<f64>()
            / total as f64
    };
    Ok(F1Scores {
        per_class,
        support,
        weighted,
    })
}

/// Segment-based error rates for one class.
///
/// Frame rates `d_f`, `f_f`, `u_f` and `fnr` are fractions of truth frames of
/// the class; `i_f`, `m_f`, `o_f` and `fdr` are fractions of predicted frames.
/// Block rates `d_b`, `f_b` count truth blocks; `i_b`, `m_b` count predicted
/// blocks. Empty denominators give 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlockMetrics {
    pub fnr: f64,
    pub fdr: f64,
    pub f_b: f64,
    pub m_b: f64,
    pub d_b: f64,
    pub i_b: f64,
    pub u_f: f64,
    pub o_f: f64,
    pub f_f: f64,
    pub m_f: f64,
    pub d_f: f64,
    pub i_f: f64,
}

impl BlockMetrics {
    pub const NAMES: [&'static str; 12] = [
        "FNR", "FDR", "F_b", "M_b", "D_b", "I_b", "U_f", "O_f", "F_f", "M_f", "D_f", "I_f",
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.fnr, self.fdr, self.f_b, self.m_b, self.d_b, self.i_b, self.u_f, self.o_f,
            self.f_f, self.m_f, self.d_f, self.i_f,
        ]
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Error frames of `reference` blocks missed by `other`, split into
/// (in blocks `other` never touches, interior gaps, edge shortfall), plus the
/// number of reference blocks and of those untouched or touched twice or more.
struct SideTally {
    blocks: usize,
    untouched_blocks: usize,
    multi_touched_blocks: usize,
    frames: usize,
    untouched_frames: usize,
    gap_frames: usize,
    edge_frames: usize,
}

fn tally(reference: &[bool], other: &[bool]) -> SideTally {
    let mut t = SideTally {
        blocks: 0,
        untouched_blocks: 0,
        multi_touched_blocks: 0,
        frames: 0,
        untouched_frames: 0,
        gap_frames: 0,
        edge_frames: 0,
    };
    for (start, end, on) in runs(reference) {
        if !on {
            continue;
        }
        t.blocks += 1;
        t.frames += end - start;
        let hits = &other[start..end];
        let touching = runs(hits).iter().filter(|(_, _, h)| *h).count();
        match touching {
            0 => {
                t.untouched_blocks += 1;
                t.untouched_frames += end - start;
                continue;
            }
            1 => {}
            _ => t.multi_touched_blocks += 1,
        }
        let first_hit = hits.iter().position(|&h| h).expect("touched");
        let last_hit = hits.iter().rposition(|&h| h).expect("touched");
        let missed = hits.iter().filter(|&&h| !h).count();
        let edge = first_hit + (hits.len() - 1 - last_hit);
        t.edge_frames += edge;
        t.gap_frames += missed - edge;
    }
    t
}

/// Segment-based error metrics of `class`, computed on the 1 s frame grid.
pub fn block_metrics(truth: &FrameSequence, pred: &FrameSequence, class: Activity) -> Result<BlockMetrics> {
    check_lengths(truth, pred)?;
    let t: Vec<bool> = truth.labels.iter().map(|&l| l == class).collect();
    let p: Vec<bool> = pred.labels.iter().map(|&l| l == class).collect();
    let missed = tally(&t, &p);
    let spurious = tally(&p, &t);
    let fn_frames = missed.untouched_frames + missed.gap_frames + missed.edge_frames;
    let fp_frames = spurious.untouched_frames + spurious.gap_frames + spurious.edge_frames;
    Ok(BlockMetrics {
        fnr: ratio(fn_frames, missed.frames),
        fdr: ratio(fp_frames, spurious.frames),
        f_b: ratio(missed.multi_touched_blocks, missed.blocks),
        m_b: ratio(spurious.multi_touched_blocks, spurious.blocks),
        d_b: ratio(missed.untouched_blocks, missed.blocks),
        i_b: ratio(spurious.untouched_blocks, spurious.blocks),
        u_f: ratio(missed.edge_frames, missed.frames),
        o_f: ratio(spurious.edge_frames, spurious.frames),
        f_f: ratio(missed.gap_frames, missed.frames),
        m_f: ratio(spurious.gap_frames, spurious.frames),
        d_f: ratio(missed.untouched_frames, missed.frames),
        i_f: ratio(spurious.untouched_frames, spurious.frames),
    })
}

/// Everything reported for one truth/prediction pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub frames: usize,
    pub f1: F1Scores,
    pub confusion: [[f64; 3]; 3],
    /// Per class, in [`Activity::ALL`] order.
    pub block_metrics: [BlockMetrics; 3],
}

impl EvalReport {
    /// Long-format `(metric, method, value)` rows for external plotting.
    pub fn metric_table(&self, method: &str) -> Vec<(String, String, f64)> {
        let mut rows = vec![("weighted_f1".to_string(), method.to_string(), self.f1.weighted)];
        for class in Activity::ALL {
            let m = &self.block_metrics[class.index()];
            for (name, value) in BlockMetrics::NAMES.iter().zip(m.values()) {
                rows.push((format!("{class}_{name}"), method.to_string(), value));
            }
        }
        rows
    }
}

pub fn evaluate_frames(
    truth: &FrameSequence,
    pred: &FrameSequence,
    include_other: bool,
) -> Result<EvalReport> {
    Ok(EvalReport {
        frames: truth.len(),
        f1: weighted_f1_with(truth, pred, include_other)?,
        confusion: confusion_matrix(truth, pred)?,
        block_metrics: [
            block_metrics(truth, pred, Activity::Grazing)?,
            block_metrics(truth, pred, Activity::Rumination)?,
            block_metrics(truth, pred, Activity::Other)?,
        ],
    })
}

/// Scores two block lists over `recording_len_s` seconds.
pub fn evaluate(
    truth: &[ActivityBlock],
    pred: &[ActivityBlock],
    recording_len_s: f64,
    include_other: bool,
) -> Result<EvalReport> {
    let t = blocks_to_frames(truth, recording_len_s)?;
    let p = blocks_to_frames(pred, recording_len_s)?;
    evaluate_frames(&t, &p, include_other)
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRow {
    start_s: f64,
    end_s: f64,
    label: String,
}

/// Reads `start_s,end_s,label` rows (header required, labels case-insensitive).
pub fn read_label_csv<R: Read>(reader: R) -> Result<Vec<ActivityBlock>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut blocks = Vec::new();
    for row in r.deserialize() {
        let row: LabelRow = row.map_err(|e| Error::Format(e.to_string()))?;
        blocks.push(ActivityBlock::new(row.start_s, row.end_s, row.label.parse()?)?);
    }
    validate_blocks(&blocks)?;
    Ok(blocks)
}

pub fn write_label_csv<W: Write>(writer: W, blocks: &[ActivityBlock]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for b in blocks {
        w.serialize(LabelRow {
            start_s: b.start_s,
            end_s: b.end_s,
            label: b.label.to_string(),
        })?;
    }
    if blocks.is_empty() {
        w.write_record(["start_s", "end_s", "label"])?;
    }
    w.flush()?;
    Ok(())
}
