//! Encode/decode backends behind one abstraction: an external-process codec
//! (aomenc/dav1d by default) and a deterministic parametric mock for tests
//! and search-dynamics studies.
//!
//! A backend is blocking per call. Within one rate search the calls are
//! strictly sequential — each request depends on the previously achieved
//! rate — but attempts for different clips may run concurrently as long as
//! their workspace paths are disjoint.

mod external;
mod mock;
mod template;

pub use external::{ExternalCodec, DEFAULT_DECODE_TEMPLATE, DEFAULT_ENCODE_TEMPLATE};
pub use mock::{MockCodec, MockModel};
pub use template::{render_command, validate_template, TemplateError};

pub(crate) use external::run_with_timeout as run_command_logged;

use crate::video::VideoClip;
use crate::y4m::Y4mError;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("rate request must be at least 1 kb/s, got {0}")]
    RateTooLow(f64),
    #[error("duration must be positive, got {0} s")]
    NonPositiveDuration(f64),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("command `{command}` exited with {status}: {stderr}")]
    CommandFailed {
        command: String,
        status: String,
        stderr: String,
    },
    #[error("command `{command}` timed out after {seconds} s")]
    Timeout { command: String, seconds: u64 },
    #[error("decoder output mismatch: encoder saw {expected}, decoder produced {actual}")]
    DecodedMismatch { expected: String, actual: String },
    #[error("invalid mock model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Y4m(#[from] Y4mError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where an attempt's decoded clip lives. The external backend leaves its
/// output on disk and loads it on demand; the mock keeps it in memory.
#[derive(Debug, Clone)]
pub enum DecodedClip {
    Memory(Arc<VideoClip>),
    File(PathBuf),
}

impl DecodedClip {
    pub fn load(&self) -> Result<Arc<VideoClip>, CodecError> {
        match self {
            DecodedClip::Memory(clip) => Ok(clip.clone()),
            DecodedClip::File(path) => Ok(Arc::new(crate::y4m::read_y4m_file(path)?)),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        match self {
            DecodedClip::Memory(_) => None,
            DecodedClip::File(path) => Some(path),
        }
    }
}

/// Everything a backend may need to place and label one encode attempt.
#[derive(Debug, Clone)]
pub struct AttemptContext<'a> {
    pub spatial_factor: u32,
    pub temporal_factor: u32,
    pub step: u32,
    /// Private directory for this attempt's intermediate files.
    pub workspace: &'a Path,
}

impl<'a> AttemptContext<'a> {
    pub fn standalone(workspace: &'a Path) -> Self {
        AttemptContext {
            spatial_factor: 1,
            temporal_factor: 1,
            step: 0,
            workspace,
        }
    }
}

/// Result of one encode-then-decode round trip.
#[derive(Debug, Clone)]
pub struct EncodeOutput {
    pub bitstream_bytes: u64,
    /// Achieved rate in kb/s over the clip's wall-clock duration.
    pub achieved_kbps: f64,
    pub decoded: DecodedClip,
    /// External command lines that were executed, verbatim, for audit.
    pub command_lines: Vec<String>,
}

/// Uniform encode/decode abstraction over the mock and external backends.
pub trait Codec: Send + Sync {
    /// Encodes `clip` with a rate request of `kbps`, decodes the result and
    /// reports the achieved rate. The decoded clip must match the input's
    /// geometry and frame count.
    fn encode_decode(
        &self,
        clip: &VideoClip,
        kbps: f64,
        ctx: &AttemptContext<'_>,
    ) -> Result<EncodeOutput, CodecError>;

    /// One-line description for reports.
    fn describe(&self) -> String;
}

/// Achieved bitrate in kb/s from a bitstream size and a duration.
pub fn rate_of(bitstream_bytes: u64, duration_seconds: f64) -> Result<f64, CodecError> {
    if duration_seconds <= 0.0 {
        return Err(CodecError::NonPositiveDuration(duration_seconds));
    }
    Ok(bitstream_bytes as f64 * 8.0 / duration_seconds / 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_of_arithmetic() {
        assert_eq!(rate_of(62_500, 10.0).unwrap(), 50.0);
        assert_eq!(rate_of(0, 10.0).unwrap(), 0.0);
        assert!(matches!(
            rate_of(100, 0.0),
            Err(CodecError::NonPositiveDuration(_))
        ));
        assert!(matches!(
            rate_of(100, -1.0),
            Err(CodecError::NonPositiveDuration(_))
        ));
    }

    #[test]
    fn duration_is_preserved_by_temporal_decimation() {
        // 300 frames at 30 fps last 10 s; after dropping alternate frames the
        // clip still lasts 10 s, so rate bookkeeping is unchanged.
        let clip = crate::synthetic::numbered_clip(8, 8, 300, (30, 1));
        let halved = crate::resample::drop_alternate_frames(&clip).unwrap();
        assert_eq!(clip.duration_seconds(), 10.0);
        assert_eq!(halved.duration_seconds(), 10.0);
        assert_eq!(
            rate_of(62_500, halved.duration_seconds()).unwrap(),
            rate_of(62_500, clip.duration_seconds()).unwrap()
        );
    }
}
