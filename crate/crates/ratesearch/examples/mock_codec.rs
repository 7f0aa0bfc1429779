//! The deterministic mock codec's rate/distortion behavior: achieved rate
//! versus request (gain and per-scale floors) and the quality it hands back.
//!
//! ```bash
//! cargo run -p ratesearch --example mock_codec
//! ```

use ratesearch::codec::{AttemptContext, Codec, MockCodec};
use ratesearch::metrics::{psnr, PlaneSelection};
use ratesearch::synthetic;

fn main() -> anyhow::Result<()> {
    let codec = MockCodec::with_seed(1);
    let clip = synthetic::gradient_clip(64, 64, 10, (30, 1));
    let workspace = std::env::temp_dir().join("ratesearch-mock-demo");

    println!("model: {}", codec.describe());
    println!("floors per spatial factor: {:?}\n", codec.model.rate_floor_kbps);

    println!("request kb/s  achieved kb/s  decoded psnr_y dB");
    for request in [1.0, 5.0, 10.0, 25.0, 50.0, 100.0, 200.0, 400.0] {
        let ctx = AttemptContext::standalone(&workspace);
        let output = codec.encode_decode(&clip, request, &ctx)?;
        let decoded = output.decoded.load()?;
        let db = psnr(&clip, &decoded, PlaneSelection::Luma)?;
        println!("{request:>12}  {:>13.2}  {db:>17.3}", output.achieved_kbps);
    }

    println!("\nsame request at a deeper scale hits a lower floor:");
    for spatial_factor in [1u32, 2, 4, 8] {
        let ctx = AttemptContext {
            spatial_factor,
            temporal_factor: 1,
            step: 0,
            workspace: &workspace,
        };
        let output = codec.encode_decode(&clip, 1.0, &ctx)?;
        println!(
            "  factor {spatial_factor}: request 1 kb/s -> achieved {:.1} kb/s",
            output.achieved_kbps
        );
    }
    Ok(())
}
