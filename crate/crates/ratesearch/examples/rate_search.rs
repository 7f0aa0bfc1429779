//! Full target-bitrate search on a synthetic clip, printed attempt by
//! attempt: the bisection at each spatial scale, feasibility, and the
//! PSNR-HVS argmax that picks the representation.
//!
//! ```bash
//! cargo run -p ratesearch --example rate_search
//! ```

use ratesearch::codec::{Codec, MockCodec};
use ratesearch::search::{run_search, SearchConfig};
use ratesearch::synthetic;

fn main() -> anyhow::Result<()> {
    let clip = synthetic::gradient_clip(128, 128, 30, (30, 1));
    let codec = MockCodec::with_seed(7);
    let config = SearchConfig::new(50.0);
    let workspace = std::env::temp_dir().join("ratesearch-example");

    println!(
        "searching {}x{} {} frames for {} kb/s (backend: {})\n",
        clip.width,
        clip.height,
        clip.frame_count(),
        config.target_kbps,
        codec.describe()
    );

    let outcome = run_search(&clip, &config, &codec, &workspace, "rate_search_demo")?;

    println!("scale  temporal  step  request kb/s  achieved kb/s  feasible  psnr_hvs dB");
    for attempt in &outcome.attempts {
        println!(
            "{:>4}x  1/{:<7} {:>4}  {:>12.4}  {:>13.4}  {:>8}  {:>11.3}",
            attempt.spatial_factor,
            attempt.temporal_factor,
            attempt.step,
            attempt.requested_kbps,
            attempt.achieved_kbps,
            attempt.is_feasible(config.target_kbps, config.feasibility_slack),
            attempt.metrics.psnr_hvs,
        );
    }

    match outcome.selected {
        Some(index) => {
            let winner = &outcome.attempts[index];
            println!(
                "\nselected attempt #{index}: {}x downsampled, request {:.4} kb/s -> {:.4} kb/s, psnr_hvs {:.3} dB",
                winner.spatial_factor,
                winner.requested_kbps,
                winner.achieved_kbps,
                winner.metrics.psnr_hvs,
            );
        }
        None => println!("\nno feasible representation found"),
    }
    println!(
        "{} encoder invocations, temporal factor used: 1/{}",
        outcome.total_encoder_invocations, outcome.temporal_factor_used
    );
    Ok(())
}
