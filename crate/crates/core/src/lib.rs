//! Foraging activity recognition from jaw-movement sounds.
//!
//! The pipeline turns a sound recording into an envelope, detects jaw-movement
//! events, summarizes each 5 minute segment with features f4..f24 and labels the
//! segment as grazing, rumination or other with a small MLP.

pub mod classifier;
pub mod cost;
pub mod error;
pub mod eval;
pub mod features;
pub mod frontend;
pub mod synth;

pub use error::{Error, Result};
