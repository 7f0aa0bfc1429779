//! Deterministic test-signal clips: constants, gradients, sinusoids and
//! seeded noise. Used by the runnable examples and throughout the test
//! suites; handy whenever a search or metric needs content without shipping
//! real footage.

use crate::video::{Frame, VideoClip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Clip where every sample of each plane holds one value.
pub fn constant_clip(
    width: u32,
    height: u32,
    frames: usize,
    fps: (u32, u32),
    (y, cb, cr): (u8, u8, u8),
) -> VideoClip {
    let frames = (0..frames)
        .map(|_| Frame::filled(width, height, y, cb, cr))
        .collect();
    VideoClip::new(width, height, fps.0, fps.1, frames).expect("constant clip geometry")
}

/// Diagonal luma gradient that drifts one sample per frame; chroma carries a
/// slower gradient. Deterministic and mildly compressible, which makes it a
/// reasonable stand-in for natural content in demos.
pub fn gradient_clip(width: u32, height: u32, frames: usize, fps: (u32, u32)) -> VideoClip {
    let build_plane = |w: u32, h: u32, t: usize, scale: u32| -> Vec<u8> {
        let mut data = Vec::with_capacity((w * h) as usize);
        for y in 0..h {
            for x in 0..w {
                data.push(((x * scale + y * scale + t as u32 * scale) % 256) as u8);
            }
        }
        data
    };
    let frames = (0..frames)
        .map(|t| Frame {
            y: build_plane(width, height, t, 3),
            cb: build_plane(width / 2, height / 2, t, 2),
            cr: build_plane(width / 2, height / 2, t, 1),
        })
        .collect();
    VideoClip::new(width, height, fps.0, fps.1, frames).expect("gradient clip geometry")
}

/// Clip whose frame index is readable from the first luma sample; chroma is
/// neutral. Useful for asserting frame ordering after temporal ops.
pub fn numbered_clip(width: u32, height: u32, frames: usize, fps: (u32, u32)) -> VideoClip {
    let frames = (0..frames)
        .map(|t| Frame::filled(width, height, (t % 256) as u8, 128, 128))
        .collect();
    VideoClip::new(width, height, fps.0, fps.1, frames).expect("numbered clip geometry")
}

/// Uniform random samples in all planes from a seeded generator.
pub fn noise_clip(width: u32, height: u32, frames: usize, fps: (u32, u32), seed: u64) -> VideoClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plane = |len: usize| -> Vec<u8> { (0..len).map(|_| rng.gen::<u8>()).collect() };
    let luma = (width * height) as usize;
    let chroma = luma / 4;
    let frames = (0..frames)
        .map(|_| Frame {
            y: plane(luma),
            cb: plane(chroma),
            cr: plane(chroma),
        })
        .collect();
    VideoClip::new(width, height, fps.0, fps.1, frames).expect("noise clip geometry")
}

/// Band-limited luma sinusoid (`cycles_x`/`cycles_y` periods across the
/// plane) around mid-gray with neutral chroma.
pub fn sinusoid_clip(
    width: u32,
    height: u32,
    frames: usize,
    fps: (u32, u32),
    cycles_x: f64,
    cycles_y: f64,
    amplitude: f64,
) -> VideoClip {
    let plane = |w: u32, h: u32| -> Vec<u8> {
        let mut data = Vec::with_capacity((w * h) as usize);
        for y in 0..h {
            for x in 0..w {
                let px = (2.0 * std::f64::consts::PI * cycles_x * x as f64 / w as f64).sin();
                let py = (2.0 * std::f64::consts::PI * cycles_y * y as f64 / h as f64).cos();
                let v = 128.0 + amplitude * px * py;
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
        data
    };
    let frames = (0..frames)
        .map(|_| Frame {
            y: plane(width, height),
            cb: vec![128; (width * height / 4) as usize],
            cr: vec![128; (width * height / 4) as usize],
        })
        .collect();
    VideoClip::new(width, height, fps.0, fps.1, frames).expect("sinusoid clip geometry")
}

/// Adds seeded Gaussian noise of the given standard deviation to every plane,
/// clamping to `[0, 255]`.
pub fn add_gaussian_noise(clip: &VideoClip, sigma: f64, seed: u64) -> VideoClip {
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perturb = |plane: &[u8]| -> Vec<u8> {
        plane
            .iter()
            .map(|&v| (v as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
            .collect()
    };
    let frames = clip
        .frames
        .iter()
        .map(|f| Frame {
            y: perturb(&f.y),
            cb: perturb(&f.cb),
            cr: perturb(&f.cr),
        })
        .collect();
    VideoClip {
        frames,
        ..clip.clone()
    }
}
