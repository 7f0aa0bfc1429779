//! YUV4MPEG2 (Y4M) reading and writing.
//!
//! The parser accepts progressive 8-bit 4:2:0 streams only. Interlaced
//! streams, other colorspaces and extended (`X`) parameters are rejected with
//! a specific error instead of being converted or ignored. The writer emits a
//! canonical header (`YUV4MPEG2 W H F C420`) and `FRAME\n`-delimited planar
//! payloads, so `read(write(clip))` is sample-exact.

use crate::video::{ClipViolation, Frame, VideoClip};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

const SIGNATURE: &str = "YUV4MPEG2";

/// Header lines longer than this are treated as malformed rather than read
/// to the end of the stream.
const MAX_HEADER_LEN: usize = 2048;

#[derive(Debug, Error)]
pub enum Y4mError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported colorspace {0:?}: only 8-bit 4:2:0 is supported")]
    UnsupportedColorspace(String),
    #[error("interlaced streams are not supported (header token I{0})")]
    Interlaced(String),
    #[error("extended Y4M parameter {0:?} is not supported")]
    ExtendedParameter(String),
    #[error("missing FRAME marker before frame {0}")]
    MissingFrameMarker(usize),
    #[error("truncated frame {frame}: {plane} plane expected {expected} bytes, got {actual}")]
    TruncatedFrame {
        frame: usize,
        plane: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid clip geometry: {0}")]
    Geometry(#[from] ClipViolation),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parses a Y4M stream into a fully materialized clip.
///
/// The parser never reads past a declared frame payload; trailing bytes in
/// the stream after the last complete frame cause a
/// [`Y4mError::MissingFrameMarker`].
pub fn read_y4m<R: Read>(reader: R) -> Result<VideoClip, Y4mError> {
    let mut reader = BufReader::new(reader);

    let header = read_line(&mut reader)?
        .ok_or_else(|| Y4mError::MalformedHeader("empty stream".into()))?;
    let mut tokens = header.split(' ').filter(|t| !t.is_empty());
    match tokens.next() {
        Some(SIGNATURE) => {}
        _ => {
            return Err(Y4mError::MalformedHeader(format!(
                "missing {SIGNATURE} signature"
            )))
        }
    }

    let mut width: Option<u32> = None;
    let mut height: Option<u32> = None;
    let mut fps: Option<(u32, u32)> = None;
    let mut colorspace_seen = false;
    for token in tokens {
        let (tag, value) = token.split_at(1);
        match tag {
            "W" => width = Some(parse_dim(value, "width")?),
            "H" => height = Some(parse_dim(value, "height")?),
            "F" => fps = Some(parse_fps(value)?),
            "I" => {
                if value != "p" {
                    return Err(Y4mError::Interlaced(value.to_string()));
                }
            }
            // Pixel aspect ratio does not affect sample layout.
            "A" => {}
            "C" => {
                if !matches!(value, "420" | "420jpeg" | "420mpeg2" | "420paldv") {
                    return Err(Y4mError::UnsupportedColorspace(value.to_string()));
                }
                colorspace_seen = true;
            }
            "X" => return Err(Y4mError::ExtendedParameter(token.to_string())),
            _ => {
                return Err(Y4mError::MalformedHeader(format!(
                    "unrecognized token {token:?}"
                )))
            }
        }
    }
    let _ = colorspace_seen; // absent C defaults to 4:2:0
    let width = width.ok_or_else(|| Y4mError::MalformedHeader("missing W token".into()))?;
    let height = height.ok_or_else(|| Y4mError::MalformedHeader("missing H token".into()))?;
    let (fps_num, fps_den) =
        fps.ok_or_else(|| Y4mError::MalformedHeader("missing F token".into()))?;

    // Validate geometry before sizing any buffers.
    let probe = VideoClip::new(width, height, fps_num, fps_den, Vec::new())?;
    let luma_len = probe.luma_len();
    let chroma_len = probe.chroma_len();

    let mut frames = Vec::new();
    // clean EOF at a frame boundary ends the stream
    while let Some(line) = read_line(&mut reader)? {
        if line != "FRAME" {
            if let Some(rest) = line.strip_prefix("FRAME ") {
                return Err(Y4mError::ExtendedParameter(format!("FRAME {rest}")));
            }
            return Err(Y4mError::MissingFrameMarker(frames.len()));
        }
        let index = frames.len();
        let y = read_plane(&mut reader, luma_len, index, "Y")?;
        let cb = read_plane(&mut reader, chroma_len, index, "Cb")?;
        let cr = read_plane(&mut reader, chroma_len, index, "Cr")?;
        frames.push(Frame { y, cb, cr });
    }

    Ok(VideoClip::new(width, height, fps_num, fps_den, frames)?)
}

/// Reads a clip from a Y4M file on disk.
pub fn read_y4m_file<P: AsRef<Path>>(path: P) -> Result<VideoClip, Y4mError> {
    read_y4m(File::open(path)?)
}

/// Writes the canonical Y4M form of a clip.
pub fn write_y4m<W: Write>(clip: &VideoClip, writer: W) -> Result<(), Y4mError> {
    let mut writer = BufWriter::new(writer);
    writeln!(
        writer,
        "{SIGNATURE} W{} H{} F{}:{} C420",
        clip.width, clip.height, clip.fps_num, clip.fps_den
    )?;
    for frame in &clip.frames {
        writer.write_all(b"FRAME\n")?;
        writer.write_all(&frame.y)?;
        writer.write_all(&frame.cb)?;
        writer.write_all(&frame.cr)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes a clip to a Y4M file on disk.
pub fn write_y4m_file<P: AsRef<Path>>(clip: &VideoClip, path: P) -> Result<(), Y4mError> {
    write_y4m(clip, File::create(path)?)
}

/// Reads a `\n`-terminated ASCII line. `Ok(None)` means EOF before any byte.
fn read_line<R: Read>(reader: &mut R) -> Result<Option<String>, Y4mError> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        match reader.read(&mut byte)? {
            0 => {
                if line.is_empty() {
                    return Ok(None);
                }
                return Err(Y4mError::MalformedHeader(
                    "stream ended inside a header line".into(),
                ));
            }
            _ => {
                if byte[0] == b'\n' {
                    break;
                }
                if line.len() >= MAX_HEADER_LEN {
                    return Err(Y4mError::MalformedHeader("header line too long".into()));
                }
                line.push(byte[0]);
            }
        }
    }
    String::from_utf8(line)
        .map(Some)
        .map_err(|_| Y4mError::MalformedHeader("header is not valid ASCII".into()))
}

fn read_plane<R: Read>(
    reader: &mut R,
    expected: usize,
    frame: usize,
    plane: &'static str,
) -> Result<Vec<u8>, Y4mError> {
    let mut buf = vec![0u8; expected];
    let mut filled = 0;
    while filled < expected {
        let n = reader.read(&mut buf[filled..])?;
        if n == 0 {
            return Err(Y4mError::TruncatedFrame {
                frame,
                plane,
                expected,
                actual: filled,
            });
        }
        filled += n;
    }
    Ok(buf)
}

fn parse_dim(value: &str, what: &str) -> Result<u32, Y4mError> {
    value
        .parse::<u32>()
        .map_err(|_| Y4mError::MalformedHeader(format!("invalid {what} {value:?}")))
}

fn parse_fps(value: &str) -> Result<(u32, u32), Y4mError> {
    let (num, den) = value
        .split_once(':')
        .ok_or_else(|| Y4mError::MalformedHeader(format!("invalid frame rate {value:?}")))?;
    let num = num
        .parse::<u32>()
        .map_err(|_| Y4mError::MalformedHeader(format!("invalid frame rate {value:?}")))?;
    let den = den
        .parse::<u32>()
        .map_err(|_| Y4mError::MalformedHeader(format!("invalid frame rate {value:?}")))?;
    Ok((num, den))
}
