//! The dyadic spatial ladder and the temporal operations: what each rung
//! costs in fidelity once the clip is brought back to its original geometry.
//!
//! ```bash
//! cargo run -p ratesearch --example resampling
//! ```

use ratesearch::metrics::{psnr, PlaneSelection};
use ratesearch::resample::{
    downsample_spatial, drop_alternate_frames, upsample_spatial, zoh_expand,
};
use ratesearch::synthetic;

fn main() -> anyhow::Result<()> {
    let clip = synthetic::sinusoid_clip(128, 128, 12, (30, 1), 3.0, 2.0, 90.0);

    println!("spatial ladder on a {}x{} band-limited sinusoid:", clip.width, clip.height);
    println!("  factor  downsampled  reconstructed psnr_y dB");
    for factor in [1u32, 2, 4, 8] {
        let down = downsample_spatial(&clip, factor)?;
        let up = upsample_spatial(&down, clip.width, clip.height)?;
        let db = psnr(&clip, &up, PlaneSelection::Luma)?;
        println!(
            "  {factor:>6}  {:>4}x{:<6}  {db:>23.3}",
            down.width, down.height
        );
    }

    println!("\ntemporal decimation and zero-order hold:");
    let halved = drop_alternate_frames(&clip)?;
    println!(
        "  drop alternate: {} frames @{}:{} -> {} frames @{}:{} (duration {} s both)",
        clip.frame_count(),
        clip.fps_num,
        clip.fps_den,
        halved.frame_count(),
        halved.fps_num,
        halved.fps_den,
        clip.duration_seconds(),
    );
    let restored = zoh_expand(&halved, 2)?;
    println!(
        "  zoh x2:         {} frames @{}:{} (frame count and rate restored: {})",
        restored.frame_count(),
        restored.fps_num,
        restored.fps_den,
        restored.frame_count() == clip.frame_count()
            && restored.fps_num == clip.fps_num
            && restored.fps_den == clip.fps_den,
    );
    Ok(())
}
