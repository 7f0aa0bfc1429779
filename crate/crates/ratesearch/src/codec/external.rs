//! External-process backend: templated encoder and decoder command lines
//! with per-attempt workspace isolation.
//!
//! The backend never parses encoder logs; the achieved rate comes from the
//! output file size and the source clip's wall-clock duration. Stdout and
//! stderr are redirected to log files inside the attempt workspace so a
//! failing tool's output is preserved verbatim.

use super::template::{render_command, validate_template, TemplateError};
use super::{AttemptContext, Codec, CodecError, DecodedClip, EncodeOutput};
use crate::video::VideoClip;
use crate::y4m::write_y4m_file;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

/// Single-pass CBR invocation of an aomenc-compatible encoder. Only the rate
/// request varies between attempts; everything else stays at the encoder's
/// defaults.
pub const DEFAULT_ENCODE_TEMPLATE: &str =
    "aomenc --passes=1 --end-usage=cbr --target-bitrate={kbps} --ivf -o {output} {input}";

/// dav1d-compatible decoder producing Y4M.
pub const DEFAULT_DECODE_TEMPLATE: &str = "dav1d -i {input} -o {output}";

const ENCODE_REQUIRED: [&str; 3] = ["input", "output", "kbps"];
const DECODE_REQUIRED: [&str; 2] = ["input", "output"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalCodec {
    pub encode_template: String,
    pub decode_template: String,
    pub timeout_seconds: u64,
}

impl Default for ExternalCodec {
    fn default() -> Self {
        ExternalCodec {
            encode_template: DEFAULT_ENCODE_TEMPLATE.to_string(),
            decode_template: DEFAULT_DECODE_TEMPLATE.to_string(),
            timeout_seconds: 600,
        }
    }
}

impl ExternalCodec {
    pub fn new(encode_template: impl Into<String>, decode_template: impl Into<String>) -> Self {
        ExternalCodec {
            encode_template: encode_template.into(),
            decode_template: decode_template.into(),
            ..ExternalCodec::default()
        }
    }

    /// Checks both templates: required placeholders exactly once each.
    pub fn validate(&self) -> Result<(), TemplateError> {
        validate_template(&self.encode_template, &ENCODE_REQUIRED)?;
        validate_template(&self.decode_template, &DECODE_REQUIRED)?;
        Ok(())
    }

    fn tokens(clip: &VideoClip, kbps: f64, input: &Path, output: &Path) -> BTreeMap<&'static str, String> {
        BTreeMap::from([
            ("input", input.display().to_string()),
            ("output", output.display().to_string()),
            // real encoders take integral kb/s; fractional bisection
            // requests are rounded at the boundary
            ("kbps", format!("{}", (kbps.round() as u64).max(1))),
            ("width", clip.width.to_string()),
            ("height", clip.height.to_string()),
            ("fps_num", clip.fps_num.to_string()),
            ("fps_den", clip.fps_den.to_string()),
        ])
    }
}

impl Codec for ExternalCodec {
    fn encode_decode(
        &self,
        clip: &VideoClip,
        kbps: f64,
        ctx: &AttemptContext<'_>,
    ) -> Result<EncodeOutput, CodecError> {
        if kbps < 1.0 {
            return Err(CodecError::RateTooLow(kbps));
        }
        self.validate()?;
        let duration = clip.duration_seconds();
        if duration <= 0.0 {
            return Err(CodecError::NonPositiveDuration(duration));
        }

        let ws = ctx.workspace;
        std::fs::create_dir_all(ws)?;
        let input_path = ws.join("input.y4m");
        let bitstream_path = ws.join("bitstream.bin");
        let decoded_path = ws.join("decoded.y4m");
        write_y4m_file(clip, &input_path)?;

        let mut command_lines = Vec::new();

        let enc_tokens = Self::tokens(clip, kbps, &input_path, &bitstream_path);
        let enc_argv = render_command(&self.encode_template, &enc_tokens)?;
        command_lines.push(enc_argv.join(" "));
        run_with_timeout(&enc_argv, ws, "encode", self.timeout_seconds)?;
        let bitstream_bytes = std::fs::metadata(&bitstream_path)?.len();

        let dec_tokens = Self::tokens(clip, kbps, &bitstream_path, &decoded_path);
        let dec_argv = render_command(&self.decode_template, &dec_tokens)?;
        command_lines.push(dec_argv.join(" "));
        run_with_timeout(&dec_argv, ws, "decode", self.timeout_seconds)?;

        let decoded = crate::y4m::read_y4m_file(&decoded_path)?;
        if !decoded.same_geometry(clip) {
            return Err(CodecError::DecodedMismatch {
                expected: clip.geometry_string(),
                actual: decoded.geometry_string(),
            });
        }
        drop(decoded); // keep only the on-disk handle; callers load on demand

        Ok(EncodeOutput {
            bitstream_bytes,
            achieved_kbps: super::rate_of(bitstream_bytes, duration)?,
            decoded: DecodedClip::File(decoded_path),
            command_lines,
        })
    }

    fn describe(&self) -> String {
        format!(
            "external(encode=`{}`, decode=`{}`)",
            self.encode_template, self.decode_template
        )
    }
}

/// Runs an argv list with stdout/stderr tee'd to `<stage>.log` files in the
/// workspace, polling for completion up to the timeout.
pub(crate) fn run_with_timeout(
    argv: &[String],
    workspace: &Path,
    stage: &str,
    timeout_seconds: u64,
) -> Result<(), CodecError> {
    let display = argv.join(" ");
    let stdout_path = workspace.join(format!("{stage}.stdout.log"));
    let stderr_path = workspace.join(format!("{stage}.stderr.log"));
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(File::create(&stdout_path)?)
        .stderr(File::create(&stderr_path)?)
        .spawn()
        .map_err(|e| CodecError::CommandFailed {
            command: display.clone(),
            status: "spawn failed".into(),
            stderr: e.to_string(),
        })?;

    let deadline = Instant::now() + Duration::from_secs(timeout_seconds);
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Err(CodecError::Timeout {
                command: display,
                seconds: timeout_seconds,
            });
        }
        std::thread::sleep(Duration::from_millis(20));
    };

    if !status.success() {
        let stderr = std::fs::read_to_string(&stderr_path).unwrap_or_default();
        let tail: String = stderr
            .lines()
            .rev()
            .take(10)
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect::<Vec<_>>()
            .join("\n");
        return Err(CodecError::CommandFailed {
            command: display,
            status: status.to_string(),
            stderr: tail,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;
    use std::io::Write;
    use std::os::unix::fs::PermissionsExt;

    /// Writes an executable stub script into `dir` and returns its path.
    fn stub_tool(dir: &Path, name: &str, body: &str) -> String {
        let path = dir.join(name);
        let mut file = File::create(&path).unwrap();
        writeln!(file, "#!/bin/sh\n{body}").unwrap();
        let mut perms = file.metadata().unwrap().permissions();
        perms.set_mode(0o755);
        std::fs::set_permissions(&path, perms).unwrap();
        path.display().to_string()
    }

    #[test]
    fn default_templates_are_valid() {
        assert!(ExternalCodec::default().validate().is_ok());
    }

    #[test]
    fn invalid_templates_are_rejected_up_front() {
        let codec = ExternalCodec::new("enc {input} {output}", "dec {input} {output}");
        assert!(matches!(
            codec.validate(),
            Err(TemplateError::PlaceholderCount { .. })
        ));
    }

    #[test]
    fn round_trips_through_stub_tools() {
        let dir = tempfile::tempdir().unwrap();
        // "encoder" copies the y4m as the bitstream; "decoder" copies it back
        let enc = stub_tool(dir.path(), "stub-enc", "cp \"$1\" \"$2\"");
        let dec = stub_tool(dir.path(), "stub-dec", "cp \"$1\" \"$2\"");
        let codec = ExternalCodec::new(
            format!("{enc} {{input}} {{output}} {{kbps}}"),
            format!("{dec} {{input}} {{output}}"),
        );

        let clip = synthetic::gradient_clip(16, 16, 30, (30, 1));
        let ws = dir.path().join("attempt");
        let out = codec
            .encode_decode(&clip, 50.0, &AttemptContext::standalone(&ws))
            .unwrap();
        assert_eq!(*out.decoded.load().unwrap(), clip);
        // 1 s clip; rate derives from the copied file's size
        let bitstream = std::fs::metadata(ws.join("bitstream.bin")).unwrap().len();
        assert_eq!(out.bitstream_bytes, bitstream);
        assert_eq!(out.achieved_kbps, bitstream as f64 * 8.0 / 1000.0);
        assert_eq!(out.command_lines.len(), 2);
        assert!(out.command_lines[0].contains("50"));
    }

    #[test]
    fn nonzero_exit_captures_stderr() {
        let dir = tempfile::tempdir().unwrap();
        let enc = stub_tool(dir.path(), "stub-fail", "echo boom >&2; exit 3");
        let codec = ExternalCodec::new(
            format!("{enc} {{input}} {{output}} {{kbps}}"),
            "dec {input} {output}".to_string(),
        );
        let clip = synthetic::gradient_clip(16, 16, 2, (30, 1));
        let ws = dir.path().join("attempt");
        let err = codec
            .encode_decode(&clip, 50.0, &AttemptContext::standalone(&ws))
            .unwrap_err();
        match err {
            CodecError::CommandFailed { stderr, .. } => assert!(stderr.contains("boom")),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn frame_count_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let enc = stub_tool(dir.path(), "stub-enc", "cp \"$1\" \"$2\"");
        // decoder keeps only header (29 bytes) + one frame (6 + 384 bytes)
        let dec = stub_tool(dir.path(), "stub-dec", "head -c 419 \"$1\" > \"$2\"");
        let codec = ExternalCodec::new(
            format!("{enc} {{input}} {{output}} {{kbps}}"),
            format!("{dec} {{input}} {{output}}"),
        );
        let clip = synthetic::gradient_clip(16, 16, 4, (30, 1));
        let ws = dir.path().join("attempt");
        let err = codec
            .encode_decode(&clip, 50.0, &AttemptContext::standalone(&ws))
            .unwrap_err();
        assert!(
            matches!(err, CodecError::DecodedMismatch { .. }),
            "unexpected error {err}"
        );
    }

    #[test]
    fn timeout_kills_the_child() {
        let dir = tempfile::tempdir().unwrap();
        let enc = stub_tool(dir.path(), "stub-sleep", "sleep 30");
        let codec = ExternalCodec {
            encode_template: format!("{enc} {{input}} {{output}} {{kbps}}"),
            decode_template: "dec {input} {output}".to_string(),
            timeout_seconds: 1,
        };
        let clip = synthetic::gradient_clip(16, 16, 2, (30, 1));
        let ws = dir.path().join("attempt");
        let start = Instant::now();
        let err = codec
            .encode_decode(&clip, 50.0, &AttemptContext::standalone(&ws))
            .unwrap_err();
        assert!(matches!(err, CodecError::Timeout { .. }), "{err}");
        assert!(start.elapsed() < Duration::from_secs(10));
    }
}
