//! WAV input and output (16-bit PCM).

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use jmfar::frontend::RawAudio;
use jmfar::{Error, Result};

fn wav_error(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::Unsupported => Error::Unsupported("WAV encoding".into()),
        hound::Error::FormatError(msg) => Error::Format(msg.into()),
        other => Error::Format(other.to_string()),
    }
}

/// Loads a 16-bit PCM WAV file; multichannel input is averaged to mono.
pub fn ingest_wav(path: &Path) -> Result<RawAudio> {
    let reader = WavReader::open(path).map_err(wav_error)?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Unsupported(format!(
            "{}-bit {:?} samples, only 16-bit PCM is read",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let channels = usize::from(spec.channels.max(1));
    let expected = reader.len() as usize;
    let samples = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<i16>, _>>()
        .map_err(|e| match e {
            // hound reports a short read as a plain I/O error.
            hound::Error::IoError(_) => Error::Format("file ends inside the sample data".into()),
            other => wav_error(other),
        })?;
    if samples.len() != expected || samples.len() % channels != 0 {
        return Err(Error::Format("sample data is shorter than the header says".into()));
    }
    let mono = samples
        .chunks_exact(channels)
        .map(|frame| frame.iter().map(|&s| f64::from(s)).sum::<f64>() / channels as f64)
        .collect();
    RawAudio::new(mono, spec.sample_rate)
}

/// Writes mono 16-bit PCM, clipping to the sample range.
pub fn write_wav(path: &Path, audio: &RawAudio) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::create(path, spec).map_err(wav_error)?;
    for s in audio.to_pcm16() {
        w.write_sample(s).map_err(wav_error)?;
    }
    w.finalize().map_err(wav_error)
}
