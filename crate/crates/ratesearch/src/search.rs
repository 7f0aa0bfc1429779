//! Target-bitrate search: per-scale bisection over the encoder's rate
//! request, a dyadic spatial ladder with a temporal fallback, full
//! reconstruction of every candidate, and PSNR-HVS-maximizing selection.
//!
//! Single-pass CBR encoders rarely achieve the rate they are asked for. The
//! search treats the rate request as a free parameter: starting from the
//! target itself, each step halves the remaining gap between the request and
//! the target (bisection) and moves the request down when the achieved rate
//! overshoots, up when it undershoots. Each spatial scale restarts its own
//! search; if no scale on the ladder realizes a feasible candidate, the
//! clip's frame rate is halved and the ladder runs again. Every attempt is
//! reconstructed to the original geometry and scored there, and the winner
//! is the feasible candidate with the highest PSNR-HVS.

use crate::codec::{AttemptContext, Codec, CodecError, DecodedClip};
use crate::metrics::{metric_set, MetricSet, MetricsError};
use crate::resample::{
    crop_to_multiple, downsample_spatial, drop_alternate_frames, upsample_spatial, zoh_expand,
    ResampleError,
};
use crate::video::VideoClip;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error(transparent)]
    Resample(#[from] ResampleError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("reconstruction geometry contract violated: expected {expected}, got {actual}")]
    GeometryContract { expected: String, actual: String },
}

/// Parameters of one search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Target rate in kb/s.
    pub target_kbps: f64,
    /// Bisection steps per spatial scale.
    pub max_steps: u32,
    /// Dyadic ladder, strictly increasing and starting at 1.
    pub spatial_factors: Vec<u32>,
    /// How many times the frame rate may be halved when the full spatial
    /// ladder fails to realize a candidate.
    pub max_temporal_halvings: u32,
    /// Feasibility is `achieved <= target * (1 + slack)`.
    pub feasibility_slack: f64,
    /// Stop the ladder after the first scale that yields a feasible
    /// candidate. Off by default: later scales still contribute candidates
    /// to the quality argmax.
    pub early_exit: bool,
}

impl SearchConfig {
    pub fn new(target_kbps: f64) -> SearchConfig {
        SearchConfig {
            target_kbps,
            max_steps: 8,
            spatial_factors: vec![1, 2, 4, 8],
            max_temporal_halvings: 2,
            feasibility_slack: 0.0,
            early_exit: false,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if !self.target_kbps.is_finite() || self.target_kbps < 1.0 {
            return Err(SearchError::InvalidConfig(format!(
                "target_kbps must be >= 1, got {}",
                self.target_kbps
            )));
        }
        if self.max_steps < 1 {
            return Err(SearchError::InvalidConfig("max_steps must be >= 1".into()));
        }
        if self.spatial_factors.first() != Some(&1) {
            return Err(SearchError::InvalidConfig(
                "spatial ladder must start at 1".into(),
            ));
        }
        for pair in self.spatial_factors.windows(2) {
            if pair[1] <= pair[0] {
                return Err(SearchError::InvalidConfig(
                    "spatial ladder must be strictly increasing".into(),
                ));
            }
        }
        for &f in &self.spatial_factors {
            if !crate::resample::SPATIAL_FACTORS.contains(&f) {
                return Err(SearchError::InvalidConfig(format!(
                    "spatial factor {f} is not one of 1, 2, 4, 8"
                )));
            }
        }
        if !self.feasibility_slack.is_finite() || self.feasibility_slack < 0.0 {
            return Err(SearchError::InvalidConfig(
                "feasibility_slack must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Largest ladder factor, i.e. the deepest downsampling the search may
    /// apply.
    pub fn max_factor(&self) -> u32 {
        self.spatial_factors.last().copied().unwrap_or(1)
    }
}

/// One encoder invocation and its fully scored candidate.
#[derive(Debug, Clone)]
pub struct EncodeAttempt {
    pub spatial_factor: u32,
    pub temporal_factor: u32,
    /// Bisection step index within this scale, starting at 0.
    pub step: u32,
    pub requested_kbps: f64,
    pub achieved_kbps: f64,
    pub bitstream_bytes: u64,
    pub decoded: DecodedClip,
    /// Metrics of the reconstruction against the original clip.
    pub metrics: MetricSet,
    pub command_lines: Vec<String>,
}

impl EncodeAttempt {
    pub fn is_feasible(&self, target_kbps: f64, slack: f64) -> bool {
        self.achieved_kbps <= target_kbps * (1.0 + slack)
    }
}

/// A scale the codec aborted: completed attempts are retained, the failure is
/// recorded here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleAbort {
    pub spatial_factor: u32,
    pub temporal_factor: u32,
    pub step: u32,
    pub error: String,
}

/// Right/bottom crop applied once before the ladder so every dyadic factor
/// divides the dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropInfo {
    pub from_width: u32,
    pub from_height: u32,
    pub to_width: u32,
    pub to_height: u32,
}

/// Complete log of a search run plus the selected representation.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub attempts: Vec<EncodeAttempt>,
    /// Index into `attempts` of the chosen representation.
    pub selected: Option<usize>,
    pub feasible: bool,
    /// Temporal factor of the selection, or the deepest level explored when
    /// nothing was feasible.
    pub temporal_factor_used: u32,
    pub total_encoder_invocations: usize,
    pub aborts: Vec<ScaleAbort>,
    pub crop: Option<CropInfo>,
}

/// Attempt-directory layout under one workspace root:
/// `<root>/<label>/<factor>x_t<temporal>/step<k>/`.
#[derive(Debug, Clone)]
pub struct SearchWorkspace {
    pub root: PathBuf,
    pub label: String,
}

impl SearchWorkspace {
    pub fn new(root: impl Into<PathBuf>, label: impl Into<String>) -> SearchWorkspace {
        SearchWorkspace {
            root: root.into(),
            label: label.into(),
        }
    }

    pub fn attempt_dir(&self, spatial_factor: u32, temporal_factor: u32, step: u32) -> PathBuf {
        self.root
            .join(&self.label)
            .join(format!("{spatial_factor}x_t{temporal_factor}"))
            .join(format!("step{step}"))
    }
}

/// Bisection update for the rate request.
///
/// The first step halves the request itself; later steps halve the distance
/// between the target and the current request. Overshoot (`achieved >=
/// target`) moves the request down, clamped to 1 kb/s; undershoot moves it
/// up.
pub fn next_request(target: f64, current: f64, achieved: f64, is_first_step: bool) -> f64 {
    let adjustment = if is_first_step {
        current / 2.0
    } else {
        (target - current).abs() / 2.0
    };
    if achieved >= target {
        (current - adjustment).max(1.0)
    } else {
        current + adjustment
    }
}

/// Picks the feasible attempt with the highest PSNR-HVS.
///
/// Ties break toward the smaller spatial factor, then the larger achieved
/// rate, then the earlier attempt. `None` when no attempt is feasible.
pub fn select_representation(
    attempts: &[EncodeAttempt],
    target_kbps: f64,
    slack: f64,
) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, attempt) in attempts.iter().enumerate() {
        if !attempt.is_feasible(target_kbps, slack) {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &attempts[b];
                (attempt.metrics.psnr_hvs, cur.spatial_factor, attempt.achieved_kbps)
                    > (cur.metrics.psnr_hvs, attempt.spatial_factor, cur.achieved_kbps)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Rebuilds a candidate at the original geometry: Lanczos upsample to the
/// original dimensions, then zero-order-hold expansion back to the original
/// frame count.
pub fn reconstruct_full(
    attempt: &EncodeAttempt,
    original: &VideoClip,
) -> Result<VideoClip, SearchError> {
    let decoded = attempt.decoded.load()?;
    let reconstructed = reconstruct(&decoded, attempt.temporal_factor, original)?;
    if !reconstructed.same_geometry(original) {
        return Err(SearchError::GeometryContract {
            expected: original.geometry_string(),
            actual: reconstructed.geometry_string(),
        });
    }
    Ok(reconstructed)
}

fn reconstruct(
    decoded: &VideoClip,
    temporal_factor: u32,
    original: &VideoClip,
) -> Result<VideoClip, SearchError> {
    let up = upsample_spatial(decoded, original.width, original.height)?;
    let mut expanded = zoh_expand(&up, temporal_factor)?;
    // An odd frame count decimates to ceil(n/2); drop the trailing repeats.
    expanded.frames.truncate(original.frame_count());
    expanded.fps_num = original.fps_num;
    expanded.fps_den = original.fps_den;
    Ok(expanded)
}

/// Runs the bisection at one spatial scale: exactly `max_steps` attempts
/// unless the codec fails, in which case completed attempts are retained and
/// the abort is reported.
///
/// `working` is the (possibly temporally decimated) source fed to the
/// encoder; `reference` is the original clip that every reconstruction is
/// scored against.
pub fn run_spatial_search(
    working: &VideoClip,
    reference: &VideoClip,
    spatial_factor: u32,
    temporal_factor: u32,
    config: &SearchConfig,
    codec: &dyn Codec,
    workspace: &SearchWorkspace,
) -> (Vec<EncodeAttempt>, Option<ScaleAbort>) {
    let mut attempts = Vec::new();
    let abort = |step: u32, error: String| ScaleAbort {
        spatial_factor,
        temporal_factor,
        step,
        error,
    };

    let downsampled = match downsample_spatial(working, spatial_factor) {
        Ok(clip) => clip,
        Err(e) => return (attempts, Some(abort(0, e.to_string()))),
    };

    let mut request = config.target_kbps;
    for step in 0..config.max_steps {
        let dir = workspace.attempt_dir(spatial_factor, temporal_factor, step);
        let ctx = AttemptContext {
            spatial_factor,
            temporal_factor,
            step,
            workspace: &dir,
        };
        let output = match codec.encode_decode(&downsampled, request, &ctx) {
            Ok(output) => output,
            Err(e) => return (attempts, Some(abort(step, e.to_string()))),
        };

        let scored = output
            .decoded
            .load()
            .map_err(SearchError::from)
            .and_then(|decoded| reconstruct(&decoded, temporal_factor, reference))
            .and_then(|recon| metric_set(reference, &recon).map_err(SearchError::from));
        let metrics = match scored {
            Ok(metrics) => metrics,
            Err(e) => return (attempts, Some(abort(step, e.to_string()))),
        };

        attempts.push(EncodeAttempt {
            spatial_factor,
            temporal_factor,
            step,
            requested_kbps: request,
            achieved_kbps: output.achieved_kbps,
            bitstream_bytes: output.bitstream_bytes,
            decoded: output.decoded,
            metrics,
            command_lines: output.command_lines,
        });
        request = next_request(config.target_kbps, request, output.achieved_kbps, step == 0);
    }
    (attempts, None)
}

/// The reference every candidate is scored against: the input cropped
/// right/bottom so that each ladder factor that can fit divides the
/// dimensions. Scales too deep for the clip are left to abort individually.
pub fn search_reference(
    clip: &VideoClip,
    config: &SearchConfig,
) -> Result<(VideoClip, Option<CropInfo>), SearchError> {
    let usable_max = config
        .spatial_factors
        .iter()
        .copied()
        .filter(|f| 2 * f <= clip.width.min(clip.height))
        .max()
        .unwrap_or(1);
    let reference = crop_to_multiple(clip, 2 * usable_max)?;
    let crop = (reference.width != clip.width || reference.height != clip.height).then_some(
        CropInfo {
            from_width: clip.width,
            from_height: clip.height,
            to_width: reference.width,
            to_height: reference.height,
        },
    );
    Ok((reference, crop))
}

/// Runs the full strategy: the spatial ladder, the temporal fallback when no
/// candidate is realized, and selection over the complete attempt log.
///
/// Never fails once the inputs validate; an all-failed run returns
/// `feasible == false` with its diagnostics in `aborts`.
pub fn run_search(
    clip: &VideoClip,
    config: &SearchConfig,
    codec: &dyn Codec,
    workspace_root: &Path,
    label: &str,
) -> Result<SearchOutcome, SearchError> {
    config.validate()?;
    if let Some(violation) = clip.validate().into_iter().next() {
        return Err(SearchError::InvalidClip(violation.to_string()));
    }

    let (reference, crop) = search_reference(clip, config)?;

    let workspace = SearchWorkspace::new(workspace_root, label);
    let mut attempts: Vec<EncodeAttempt> = Vec::new();
    let mut aborts = Vec::new();
    let mut deepest_temporal = 1u32;
    let mut working = reference.clone();

    'ladder: for halving in 0..=config.max_temporal_halvings {
        let temporal_factor = 1u32 << halving;
        if halving > 0 {
            working = match drop_alternate_frames(&working) {
                Ok(decimated) => decimated,
                Err(e) => {
                    aborts.push(ScaleAbort {
                        spatial_factor: 0,
                        temporal_factor,
                        step: 0,
                        error: e.to_string(),
                    });
                    break;
                }
            };
        }
        deepest_temporal = temporal_factor;

        for &factor in &config.spatial_factors {
            let (scale_attempts, abort) = run_spatial_search(
                &working,
                &reference,
                factor,
                temporal_factor,
                config,
                codec,
                &workspace,
            );
            attempts.extend(scale_attempts);
            if let Some(abort) = abort {
                aborts.push(abort);
            }
            if config.early_exit
                && attempts
                    .iter()
                    .any(|a| a.is_feasible(config.target_kbps, config.feasibility_slack))
            {
                break 'ladder;
            }
        }

        // The frame rate is only reduced when the whole ladder failed to
        // realize a candidate.
        if attempts
            .iter()
            .any(|a| a.is_feasible(config.target_kbps, config.feasibility_slack))
        {
            break;
        }
    }

    let selected = select_representation(&attempts, config.target_kbps, config.feasibility_slack);
    let temporal_factor_used = selected
        .map(|i| attempts[i].temporal_factor)
        .unwrap_or(deepest_temporal);
    Ok(SearchOutcome {
        feasible: selected.is_some(),
        total_encoder_invocations: attempts.len(),
        selected,
        temporal_factor_used,
        attempts,
        aborts,
        crop,
    })
}
