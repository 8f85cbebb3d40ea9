use hound::{SampleFormat, WavSpec, WavWriter};
use jmfar::frontend::RawAudio;
use jmfar::Error;
use jmfar_cli::{ingest_wav, write_wav};

fn spec(channels: u16, bits: u16) -> WavSpec {
    WavSpec {
        channels,
        sample_rate: 44_100,
        bits_per_sample: bits,
        sample_format: SampleFormat::Int,
    }
}

#[test]
fn one_second_mono() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.wav");
    let mut w = WavWriter::create(&path, spec(1, 16)).unwrap();
    for i in 0..44_100 {
        w.write_sample((i % 2000 - 1000) as i16).unwrap();
    }
    w.finalize().unwrap();
    let audio = ingest_wav(&path).unwrap();
    assert_eq!(audio.len(), 44_100);
    assert_eq!(audio.sample_rate_hz(), 44_100);
    assert_eq!(audio.duration_s(), 1.0);
    assert_eq!(audio.samples()[1], -999.0);
}

#[test]
fn stereo_is_averaged() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.wav");
    let mut w = WavWriter::create(&path, spec(2, 16)).unwrap();
    for (l, r) in [(100i16, 300i16), (-5, 4), (0, 0)] {
        w.write_sample(l).unwrap();
        w.write_sample(r).unwrap();
    }
    w.finalize().unwrap();
    assert_eq!(ingest_wav(&path).unwrap().samples(), &[200.0, -0.5, 0.0]);
}

#[test]
fn truncated_file_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.wav");
    let audio = RawAudio::from_pcm16(&vec![7i16; 1000], 2000).unwrap();
    write_wav(&path, &audio).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 501]).unwrap();
    let r = ingest_wav(&path);
    assert!(matches!(r, Err(Error::Format(_))), "{r:?}");
}

#[test]
fn other_sample_widths_unsupported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.wav");
    let mut w = WavWriter::create(&path, spec(1, 24)).unwrap();
    for _ in 0..10 {
        w.write_sample(1i32).unwrap();
    }
    w.finalize().unwrap();
    assert!(matches!(ingest_wav(&path), Err(Error::Unsupported(_))));
}

#[test]
fn garbage_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.wav");
    std::fs::write(&path, b"definitely not a wav file").unwrap();
    assert!(matches!(ingest_wav(&path), Err(Error::Format(_))));
    assert!(ingest_wav(&dir.path().join("missing.wav")).is_err());
}

#[test]
fn write_then_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.wav");
    let pcm: Vec<i16> = (0..500).map(|i| (i * 37 % 20_000 - 10_000) as i16).collect();
    write_wav(&path, &RawAudio::from_pcm16(&pcm, 2000).unwrap()).unwrap();
    assert_eq!(ingest_wav(&path).unwrap().to_pcm16(), pcm);
}
