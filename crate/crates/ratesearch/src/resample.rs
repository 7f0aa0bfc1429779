//! Spatial dyadic resampling with a Lanczos kernel, plus temporal decimation
//! and zero-order-hold expansion.
//!
//! Downsampling stretches the kernel by the factor so it anti-aliases;
//! upsampling interpolates with a 2-lobe kernel, which yields at most five
//! nonzero taps per output sample at dyadic phases. Intermediate arithmetic
//! is `f64`; the final store rounds half away from zero and clamps to
//! `[0, 255]`. Boundaries replicate the edge sample. Per-output-sample weight
//! rows are normalized, so constant planes survive within one LSB.

use crate::video::{Frame, VideoClip};
use std::f64::consts::PI;
use thiserror::Error;

/// Dyadic spatial factors accepted by [`downsample_spatial`].
pub const SPATIAL_FACTORS: [u32; 4] = [1, 2, 4, 8];

/// Lobe count used for the spatial kernel.
pub const DEFAULT_KERNEL_LOBES: u32 = 2;

#[derive(Debug, Error)]
pub enum ResampleError {
    #[error("spatial factor {0} is not one of {{1, 2, 4, 8}}")]
    InvalidFactor(u32),
    #[error("clip {width}x{height} too small to downsample by {factor} (needs a nonzero multiple of {multiple})")]
    TooSmall {
        width: u32,
        height: u32,
        factor: u32,
        multiple: u32,
    },
    #[error("target {target_w}x{target_h} is not an integer multiple of source {src_w}x{src_h}")]
    NonIntegerRatio {
        src_w: u32,
        src_h: u32,
        target_w: u32,
        target_h: u32,
    },
    #[error("temporal decimation needs at least 2 frames, clip has {0}")]
    TooFewFrames(usize),
    #[error("expansion factor must be at least 1")]
    ZeroExpansion,
}

/// How a candidate representation is resized before encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResampleSpec {
    /// Dyadic spatial downsampling factor, one of {1, 2, 4, 8}.
    pub spatial_factor: u32,
    /// Temporal decimation factor; power of two, 1 means untouched.
    pub temporal_factor: u32,
    /// Kernel lobe parameter for the spatial filter.
    pub kernel_lobes: u32,
}

impl Default for ResampleSpec {
    fn default() -> Self {
        ResampleSpec {
            spatial_factor: 1,
            temporal_factor: 1,
            kernel_lobes: DEFAULT_KERNEL_LOBES,
        }
    }
}

impl ResampleSpec {
    pub fn validate(&self) -> Result<(), ResampleError> {
        if !SPATIAL_FACTORS.contains(&self.spatial_factor) {
            return Err(ResampleError::InvalidFactor(self.spatial_factor));
        }
        if self.temporal_factor == 0 || !self.temporal_factor.is_power_of_two() {
            return Err(ResampleError::ZeroExpansion);
        }
        Ok(())
    }
}

/// `sinc(x) * sinc(x / a)` for `|x| < a`, zero outside.
fn lanczos(lobes: f64, x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-12 {
        1.0
    } else if ax >= lobes {
        0.0
    } else {
        let px = PI * x;
        lobes * (px.sin() * (px / lobes).sin()) / (px * px)
    }
}

/// Precomputed, normalized taps for one axis of a resample.
struct FilterBank {
    /// For each output index: first source index and its weights.
    taps: Vec<(isize, Vec<f64>)>,
}

impl FilterBank {
    /// Anti-aliasing reduction by an integer factor: kernel stretched by the
    /// factor.
    fn downsample(in_len: usize, factor: u32, lobes: u32) -> FilterBank {
        let scale = factor as f64;
        let radius = lobes as f64 * scale;
        Self::build(in_len, in_len / factor as usize, |o| {
            let center = (o as f64 + 0.5) * scale - 0.5;
            (center, radius, scale)
        })
    }

    /// Interpolation up to an integer multiple of the source length.
    fn upsample(in_len: usize, out_len: usize, lobes: u32) -> FilterBank {
        let scale = out_len as f64 / in_len as f64;
        let radius = lobes as f64;
        Self::build(in_len, out_len, |o| {
            let center = (o as f64 + 0.5) / scale - 0.5;
            (center, radius, 1.0)
        })
    }

    fn build(
        in_len: usize,
        out_len: usize,
        geometry: impl Fn(usize) -> (f64, f64, f64),
    ) -> FilterBank {
        let lobes = DEFAULT_KERNEL_LOBES as f64;
        let taps = (0..out_len)
            .map(|o| {
                let (center, radius, stretch) = geometry(o);
                let first = (center - radius).ceil() as isize;
                let last = (center + radius).floor() as isize;
                let mut weights: Vec<f64> = (first..=last)
                    .map(|j| lanczos(lobes, (j as f64 - center) / stretch))
                    .collect();
                let sum: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= sum;
                }
                let _ = in_len;
                (first, weights)
            })
            .collect();
        FilterBank { taps }
    }

    fn out_len(&self) -> usize {
        self.taps.len()
    }

    /// Applies the bank along a strided 1-D slice, replicating edge samples.
    fn apply(&self, src: &[f64], in_len: usize, stride: usize, dst: &mut [f64], dst_stride: usize) {
        for (o, (first, weights)) in self.taps.iter().enumerate() {
            let mut acc = 0.0;
            for (k, w) in weights.iter().enumerate() {
                let j = (first + k as isize).clamp(0, in_len as isize - 1) as usize;
                acc += w * src[j * stride];
            }
            dst[o * dst_stride] = acc;
        }
    }
}

/// Two-pass separable resample of one plane.
fn resample_plane(
    src: &[u8],
    in_w: usize,
    in_h: usize,
    h_bank: &FilterBank,
    v_bank: &FilterBank,
) -> Vec<u8> {
    let out_w = h_bank.out_len();
    let out_h = v_bank.out_len();

    // Horizontal pass into a float buffer.
    let mut mid = vec![0.0f64; out_w * in_h];
    let src_f: Vec<f64> = src.iter().map(|&v| v as f64).collect();
    for row in 0..in_h {
        h_bank.apply(
            &src_f[row * in_w..(row + 1) * in_w],
            in_w,
            1,
            &mut mid[row * out_w..(row + 1) * out_w],
            1,
        );
    }

    // Vertical pass, then round half away from zero and clamp.
    let mut out_f = vec![0.0f64; out_w * out_h];
    for col in 0..out_w {
        v_bank.apply(&mid[col..], in_h, out_w, &mut out_f[col..], out_w);
    }
    out_f
        .iter()
        .map(|&v| v.round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Crops right/bottom samples so both dimensions are multiples of
/// `multiple`. Returns the clip unchanged when already aligned.
pub fn crop_to_multiple(clip: &VideoClip, multiple: u32) -> Result<VideoClip, ResampleError> {
    let cw = clip.width - clip.width % multiple;
    let ch = clip.height - clip.height % multiple;
    if cw == 0 || ch == 0 {
        return Err(ResampleError::TooSmall {
            width: clip.width,
            height: clip.height,
            factor: multiple / 2,
            multiple,
        });
    }
    if cw == clip.width && ch == clip.height {
        return Ok(clip.clone());
    }
    let crop_plane = |data: &[u8], from_w: usize, to_w: usize, to_h: usize| -> Vec<u8> {
        let mut out = Vec::with_capacity(to_w * to_h);
        for row in 0..to_h {
            out.extend_from_slice(&data[row * from_w..row * from_w + to_w]);
        }
        out
    };
    let frames = clip
        .frames
        .iter()
        .map(|f| Frame {
            y: crop_plane(&f.y, clip.width as usize, cw as usize, ch as usize),
            cb: crop_plane(
                &f.cb,
                clip.width as usize / 2,
                cw as usize / 2,
                ch as usize / 2,
            ),
            cr: crop_plane(
                &f.cr,
                clip.width as usize / 2,
                cw as usize / 2,
                ch as usize / 2,
            ),
        })
        .collect();
    Ok(VideoClip {
        width: cw,
        height: ch,
        frames,
        ..clip.clone()
    })
}

/// Downsamples every frame spatially by a dyadic factor.
///
/// Dimensions that are not multiples of `2 * factor` are cropped
/// right/bottom first so the chroma geometry of the output stays integral;
/// callers that need to know about the crop can compare geometries or crop
/// up front with [`crop_to_multiple`].
pub fn downsample_spatial(clip: &VideoClip, factor: u32) -> Result<VideoClip, ResampleError> {
    if !SPATIAL_FACTORS.contains(&factor) {
        return Err(ResampleError::InvalidFactor(factor));
    }
    if factor == 1 {
        return Ok(clip.clone());
    }
    let clip = crop_to_multiple(clip, 2 * factor)?;

    let (w, h) = (clip.width as usize, clip.height as usize);
    let (cw, ch) = (w / 2, h / 2);
    let luma_h = FilterBank::downsample(w, factor, DEFAULT_KERNEL_LOBES);
    let luma_v = FilterBank::downsample(h, factor, DEFAULT_KERNEL_LOBES);
    let chroma_h = FilterBank::downsample(cw, factor, DEFAULT_KERNEL_LOBES);
    let chroma_v = FilterBank::downsample(ch, factor, DEFAULT_KERNEL_LOBES);

    let frames = clip
        .frames
        .iter()
        .map(|f| Frame {
            y: resample_plane(&f.y, w, h, &luma_h, &luma_v),
            cb: resample_plane(&f.cb, cw, ch, &chroma_h, &chroma_v),
            cr: resample_plane(&f.cr, cw, ch, &chroma_h, &chroma_v),
        })
        .collect();
    Ok(VideoClip {
        width: clip.width / factor,
        height: clip.height / factor,
        frames,
        ..clip
    })
}

/// Upsamples every frame to the target dimensions, which must be integer
/// multiples of the source dimensions.
pub fn upsample_spatial(
    clip: &VideoClip,
    target_w: u32,
    target_h: u32,
) -> Result<VideoClip, ResampleError> {
    if target_w == 0
        || target_h == 0
        || !target_w.is_multiple_of(clip.width)
        || !target_h.is_multiple_of(clip.height)
    {
        return Err(ResampleError::NonIntegerRatio {
            src_w: clip.width,
            src_h: clip.height,
            target_w,
            target_h,
        });
    }
    if target_w == clip.width && target_h == clip.height {
        return Ok(clip.clone());
    }

    let (w, h) = (clip.width as usize, clip.height as usize);
    let (cw, ch) = (w / 2, h / 2);
    let (tw, th) = (target_w as usize, target_h as usize);
    let luma_h = FilterBank::upsample(w, tw, DEFAULT_KERNEL_LOBES);
    let luma_v = FilterBank::upsample(h, th, DEFAULT_KERNEL_LOBES);
    let chroma_h = FilterBank::upsample(cw, tw / 2, DEFAULT_KERNEL_LOBES);
    let chroma_v = FilterBank::upsample(ch, th / 2, DEFAULT_KERNEL_LOBES);

    let frames = clip
        .frames
        .iter()
        .map(|f| Frame {
            y: resample_plane(&f.y, w, h, &luma_h, &luma_v),
            cb: resample_plane(&f.cb, cw, ch, &chroma_h, &chroma_v),
            cr: resample_plane(&f.cr, cw, ch, &chroma_h, &chroma_v),
        })
        .collect();
    Ok(VideoClip {
        width: target_w,
        height: target_h,
        frames,
        ..clip.clone()
    })
}

/// Keeps frames 0, 2, 4, … and halves the frame rate, preserving duration.
///
/// The numerator is halved when even, otherwise the denominator is doubled,
/// so a later [`zoh_expand`] by 2 restores the original rational exactly.
pub fn drop_alternate_frames(clip: &VideoClip) -> Result<VideoClip, ResampleError> {
    if clip.frames.len() < 2 {
        return Err(ResampleError::TooFewFrames(clip.frames.len()));
    }
    let frames = clip.frames.iter().step_by(2).cloned().collect();
    let (fps_num, fps_den) = if clip.fps_num.is_multiple_of(2) {
        (clip.fps_num / 2, clip.fps_den)
    } else {
        (clip.fps_num, clip.fps_den * 2)
    };
    Ok(VideoClip {
        fps_num,
        fps_den,
        frames,
        ..clip.clone()
    })
}

/// Repeats each frame `factor` times and multiplies the frame rate by
/// `factor` (zero-order hold).
pub fn zoh_expand(clip: &VideoClip, factor: u32) -> Result<VideoClip, ResampleError> {
    if factor == 0 {
        return Err(ResampleError::ZeroExpansion);
    }
    if factor == 1 {
        return Ok(clip.clone());
    }
    let mut frames = Vec::with_capacity(clip.frames.len() * factor as usize);
    for frame in &clip.frames {
        for _ in 0..factor {
            frames.push(frame.clone());
        }
    }
    let (fps_num, fps_den) = if clip.fps_den.is_multiple_of(factor) {
        (clip.fps_num, clip.fps_den / factor)
    } else {
        (clip.fps_num * factor, clip.fps_den)
    };
    Ok(VideoClip {
        fps_num,
        fps_den,
        frames,
        ..clip.clone()
    })
}
