//! Deterministic parametric codec model.
//!
//! Real single-pass CBR encoders rarely hit the requested rate; the mock
//! reproduces that with `achieved = max(rate_gain * requested, floor(β))`
//! and couples quality to rate through additive seeded Gaussian noise of
//! variance `distortion_coeff / achieved`. Identical inputs always produce
//! bit-identical output, which makes search dynamics testable.

use super::{AttemptContext, Codec, CodecError, DecodedClip, EncodeOutput};
use crate::video::{Frame, VideoClip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Rate/distortion parameters of the mock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockModel {
    /// Achieved rate is `rate_gain` times the request, before the floor.
    pub rate_gain: f64,
    /// Minimum achievable rate per spatial factor, non-increasing in the
    /// factor. Lookup falls back to the nearest smaller factor.
    pub rate_floor_kbps: BTreeMap<u32, f64>,
    pub noise_seed: u64,
    /// Noise variance per achieved kb/s: `sigma^2 = distortion_coeff / rate`.
    pub distortion_coeff: f64,
}

impl Default for MockModel {
    fn default() -> Self {
        MockModel {
            rate_gain: 1.2,
            rate_floor_kbps: BTreeMap::from([(1, 30.0), (2, 12.0), (4, 5.0), (8, 2.0)]),
            noise_seed: 0,
            distortion_coeff: 2000.0,
        }
    }
}

impl MockModel {
    pub fn validate(&self) -> Result<(), CodecError> {
        if !self.rate_gain.is_finite() || self.rate_gain <= 0.0 {
            return Err(CodecError::InvalidModel(format!(
                "rate_gain must be positive, got {}",
                self.rate_gain
            )));
        }
        if self.distortion_coeff < 0.0 {
            return Err(CodecError::InvalidModel(format!(
                "distortion_coeff must be non-negative, got {}",
                self.distortion_coeff
            )));
        }
        let mut last: Option<f64> = None;
        for (&factor, &floor) in &self.rate_floor_kbps {
            if floor < 0.0 {
                return Err(CodecError::InvalidModel(format!(
                    "rate floor for factor {factor} is negative"
                )));
            }
            if let Some(prev) = last {
                if floor > prev {
                    return Err(CodecError::InvalidModel(
                        "rate floors must be non-increasing in the spatial factor".into(),
                    ));
                }
            }
            last = Some(floor);
        }
        Ok(())
    }

    /// Floor for a factor, falling back to the nearest smaller configured
    /// factor (floors are non-increasing, so that is the conservative bound).
    fn floor_for(&self, spatial_factor: u32) -> f64 {
        self.rate_floor_kbps
            .range(..=spatial_factor)
            .next_back()
            .map(|(_, &floor)| floor)
            .unwrap_or(0.0)
    }
}

/// [`Codec`] implementation backed by a [`MockModel`]. Writes no files.
#[derive(Debug, Clone, Default)]
pub struct MockCodec {
    pub model: MockModel,
}

impl MockCodec {
    pub fn new(model: MockModel) -> MockCodec {
        MockCodec { model }
    }

    pub fn with_seed(seed: u64) -> MockCodec {
        MockCodec {
            model: MockModel {
                noise_seed: seed,
                ..MockModel::default()
            },
        }
    }
}

/// Per-attempt noise stream derived from the model seed, the request and the
/// clip geometry, so the invariant "same (clip, kbps, model, seed) means
/// identical output" holds without coupling attempts at different scales.
fn derive_seed(base: u64, kbps: f64, clip: &VideoClip) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for v in [
        kbps.to_bits(),
        clip.width as u64,
        clip.height as u64,
        clip.frames.len() as u64,
    ] {
        h ^= v;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^= h >> 33;
    }
    h
}

impl Codec for MockCodec {
    fn encode_decode(
        &self,
        clip: &VideoClip,
        kbps: f64,
        ctx: &AttemptContext<'_>,
    ) -> Result<EncodeOutput, CodecError> {
        if kbps < 1.0 {
            return Err(CodecError::RateTooLow(kbps));
        }
        self.model.validate()?;
        let floor = self.model.floor_for(ctx.spatial_factor);
        let achieved = (self.model.rate_gain * kbps).max(floor);
        let duration = clip.duration_seconds();
        if duration <= 0.0 {
            return Err(CodecError::NonPositiveDuration(duration));
        }
        // The model's achieved rate is authoritative; the byte count is its
        // nearest integer realization (a half-byte quantization at most).
        let bitstream_bytes = (achieved * 1000.0 * duration / 8.0).round() as u64;

        let sigma = if self.model.distortion_coeff > 0.0 {
            (self.model.distortion_coeff / achieved).sqrt()
        } else {
            0.0
        };
        let decoded = if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(self.model.noise_seed, kbps, clip));
            let mut perturb = |plane: &[u8]| -> Vec<u8> {
                plane
                    .iter()
                    .map(|&v| {
                        (v as f64 + normal.sample(&mut rng))
                            .round()
                            .clamp(0.0, 255.0) as u8
                    })
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
        } else {
            clip.clone()
        };

        Ok(EncodeOutput {
            bitstream_bytes,
            achieved_kbps: achieved,
            decoded: DecodedClip::Memory(Arc::new(decoded)),
            command_lines: Vec::new(),
        })
    }

    fn describe(&self) -> String {
        format!(
            "mock(rate_gain={}, distortion_coeff={}, seed={})",
            self.model.rate_gain, self.model.distortion_coeff, self.model.noise_seed
        )
    }
}
