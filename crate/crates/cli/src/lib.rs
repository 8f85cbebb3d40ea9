//! Recording-level plumbing behind the `jmfar` command: WAV input, TOML
//! configuration and the segment-by-segment recognition pipeline.

pub mod config;
pub mod pipeline;
pub mod wav;

pub use config::Config;
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
pub use wav::{ingest_wav, write_wav};

/// Process exit status of a failed command.
pub fn exit_code(err: &jmfar::Error) -> i32 {
    match err {
        jmfar::Error::Config(_) => 1,
        _ => 2,
    }
}
