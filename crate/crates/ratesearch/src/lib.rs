//! Target-bitrate encode orchestration.
//!
//! Single-pass CBR encoders rarely produce the rate they are asked for. This
//! crate searches for an encoder configuration that does: a bisection over
//! the rate-request parameter, run per scale of a dyadic spatial
//! downsampling ladder (1, 2, 4, 8) with a frame-rate-halving fallback.
//! Every candidate is decoded, Lanczos-upsampled and zero-order-hold
//! expanded back to the original geometry, scored there with PSNR-HVS, and
//! the best feasible candidate becomes the selected representation.
//!
//! The crate is a library first; see the `examples/` directory for one
//! runnable program per capability:
//!
//! - `rate_search` — the full search on a synthetic clip, attempt by attempt
//! - `bisection_demo` — the request-update rule in isolation
//! - `quality_metrics` — PSNR and PSNR-HVS, including the CSF table
//! - `resampling` — the dyadic ladder and the temporal ops
//! - `mock_codec` — the deterministic rate/distortion model
//! - `batch_report` — a batch with JSON reports, CSV scatter data and
//!   achieved-rate statistics
//! - `postprocess_hook` — wiring an external tool into the pipeline
//! - `external_av1` — command templates for a real encoder/decoder pair
//!
//! A thin `ratesearch` binary exposes the same functionality as `search`,
//! `metrics` and `batch` subcommands.

pub mod cli;
pub mod codec;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod resample;
pub mod search;
pub mod synthetic;
pub mod video;
pub mod y4m;

pub use codec::{Codec, ExternalCodec, MockCodec, MockModel};
pub use metrics::{metric_set, psnr, psnr_hvs, MetricSet, PlaneSelection, PSNR_CAP_DB};
pub use report::Report;
pub use search::{
    next_request, run_search, run_spatial_search, select_representation, SearchConfig,
    SearchOutcome,
};
pub use video::{Frame, VideoClip};
pub use y4m::{read_y4m, read_y4m_file, write_y4m, write_y4m_file};
