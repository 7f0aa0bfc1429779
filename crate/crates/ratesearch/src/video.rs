//! Raw video clip representation: planar 8-bit 4:2:0 frames with a rational
//! frame rate.
//!
//! `VideoClip` is immutable after construction and cheap to share across
//! metric and resampling workers. Only 8-bit 4:2:0 content is representable;
//! other formats are rejected at the I/O boundary rather than converted.

use std::fmt;

/// Chroma layout of a clip. Only 4:2:0 is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorFormat {
    C420,
}

impl fmt::Display for ColorFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColorFormat::C420 => write!(f, "C420"),
        }
    }
}

/// One planar frame: full-resolution luma and quarter-resolution chroma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub y: Vec<u8>,
    pub cb: Vec<u8>,
    pub cr: Vec<u8>,
}

impl Frame {
    /// Frame with every sample of each plane set to the given values.
    pub fn filled(width: u32, height: u32, y: u8, cb: u8, cr: u8) -> Frame {
        let luma = (width as usize) * (height as usize);
        let chroma = (width as usize / 2) * (height as usize / 2);
        Frame {
            y: vec![y; luma],
            cb: vec![cb; chroma],
            cr: vec![cr; chroma],
        }
    }
}

/// Identifies a plane in violation and error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneId {
    Y,
    Cb,
    Cr,
}

impl fmt::Display for PlaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlaneId::Y => write!(f, "Y"),
            PlaneId::Cb => write!(f, "Cb"),
            PlaneId::Cr => write!(f, "Cr"),
        }
    }
}

/// A single invariant violation found by [`VideoClip::validate`].
///
/// Violations are data, not errors: validation reports all of them at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClipViolation {
    ZeroWidth,
    ZeroHeight,
    OddWidth(u32),
    OddHeight(u32),
    ZeroFpsNum,
    ZeroFpsDen,
    PlaneSize {
        frame: usize,
        plane: PlaneId,
        expected: usize,
        actual: usize,
    },
}

impl fmt::Display for ClipViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClipViolation::ZeroWidth => write!(f, "width is zero"),
            ClipViolation::ZeroHeight => write!(f, "height is zero"),
            ClipViolation::OddWidth(w) => write!(f, "width {w} not even"),
            ClipViolation::OddHeight(h) => write!(f, "height {h} not even"),
            ClipViolation::ZeroFpsNum => write!(f, "fps numerator is zero"),
            ClipViolation::ZeroFpsDen => write!(f, "fps denominator is zero"),
            ClipViolation::PlaneSize {
                frame,
                plane,
                expected,
                actual,
            } => write!(
                f,
                "frame {frame} plane {plane}: expected {expected} bytes, got {actual}"
            ),
        }
    }
}

impl std::error::Error for ClipViolation {}

/// Planar 4:2:0 raw video with validated geometry.
///
/// Fields are public so that callers (and tests) can build arbitrary clips;
/// use [`VideoClip::new`] to construct with invariants enforced, or
/// [`VideoClip::validate`] to audit an existing value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoClip {
    pub width: u32,
    pub height: u32,
    pub fps_num: u32,
    pub fps_den: u32,
    pub color_format: ColorFormat,
    pub bit_depth: u8,
    pub frames: Vec<Frame>,
}

impl VideoClip {
    /// Builds a clip and checks every invariant, returning the first
    /// violation if any.
    pub fn new(
        width: u32,
        height: u32,
        fps_num: u32,
        fps_den: u32,
        frames: Vec<Frame>,
    ) -> Result<VideoClip, ClipViolation> {
        let clip = VideoClip {
            width,
            height,
            fps_num,
            fps_den,
            color_format: ColorFormat::C420,
            bit_depth: 8,
            frames,
        };
        match clip.validate().into_iter().next() {
            Some(v) => Err(v),
            None => Ok(clip),
        }
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Wall-clock duration in seconds: `frames * fps_den / fps_num`.
    pub fn duration_seconds(&self) -> f64 {
        self.frames.len() as f64 * self.fps_den as f64 / self.fps_num as f64
    }

    pub fn luma_len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn chroma_width(&self) -> u32 {
        self.width / 2
    }

    pub fn chroma_height(&self) -> u32 {
        self.height / 2
    }

    pub fn chroma_len(&self) -> usize {
        (self.width as usize / 2) * (self.height as usize / 2)
    }

    /// True when both clips have the same dimensions and frame count.
    pub fn same_geometry(&self, other: &VideoClip) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.frames.len() == other.frames.len()
    }

    pub fn geometry_string(&self) -> String {
        format!(
            "{}x{} {} frames @{}:{}",
            self.width,
            self.height,
            self.frames.len(),
            self.fps_num,
            self.fps_den
        )
    }

    /// Reports every invariant violation; an empty list means the clip is
    /// valid.
    pub fn validate(&self) -> Vec<ClipViolation> {
        let mut violations = Vec::new();
        if self.width == 0 {
            violations.push(ClipViolation::ZeroWidth);
        } else if !self.width.is_multiple_of(2) {
            violations.push(ClipViolation::OddWidth(self.width));
        }
        if self.height == 0 {
            violations.push(ClipViolation::ZeroHeight);
        } else if !self.height.is_multiple_of(2) {
            violations.push(ClipViolation::OddHeight(self.height));
        }
        if self.fps_num == 0 {
            violations.push(ClipViolation::ZeroFpsNum);
        }
        if self.fps_den == 0 {
            violations.push(ClipViolation::ZeroFpsDen);
        }
        let luma = self.luma_len();
        let chroma = self.chroma_len();
        for (i, frame) in self.frames.iter().enumerate() {
            for (plane, data, expected) in [
                (PlaneId::Y, &frame.y, luma),
                (PlaneId::Cb, &frame.cb, chroma),
                (PlaneId::Cr, &frame.cr, chroma),
            ] {
                if data.len() != expected {
                    violations.push(ClipViolation::PlaneSize {
                        frame: i,
                        plane,
                        expected,
                        actual: data.len(),
                    });
                }
            }
        }
        violations
    }
}

/// Free-function form of [`VideoClip::validate`].
pub fn validate_clip(clip: &VideoClip) -> Vec<ClipViolation> {
    clip.validate()
}
