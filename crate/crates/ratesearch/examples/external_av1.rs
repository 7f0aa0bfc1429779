//! The external-process backend with a real AV1 tool pair. If aomenc and
//! dav1d are on PATH this runs a short search against them; otherwise it
//! shows the rendered command lines that would be executed.
//!
//! ```bash
//! cargo run -p ratesearch --example external_av1
//! ```

use ratesearch::codec::{render_command, ExternalCodec};
use ratesearch::search::{run_search, SearchConfig};
use ratesearch::synthetic;
use std::collections::BTreeMap;

fn on_path(tool: &str) -> bool {
    std::env::var_os("PATH")
        .map(|paths| std::env::split_paths(&paths).any(|dir| dir.join(tool).is_file()))
        .unwrap_or(false)
}

fn main() -> anyhow::Result<()> {
    let codec = ExternalCodec::default();
    codec.validate()?;
    println!("encode template: {}", codec.encode_template);
    println!("decode template: {}", codec.decode_template);

    let tokens = BTreeMap::from([
        ("input", "clip_2x/step0/input.y4m".to_string()),
        ("output", "clip_2x/step0/bitstream.bin".to_string()),
        ("kbps", "50".to_string()),
        ("width", "960".to_string()),
        ("height", "540".to_string()),
        ("fps_num", "30".to_string()),
        ("fps_den", "1".to_string()),
    ]);
    println!("\nrendered encode argv: {:?}", render_command(&codec.encode_template, &tokens)?);

    if !(on_path("aomenc") && on_path("dav1d")) {
        println!("\naomenc/dav1d not found on PATH; skipping the live run.");
        println!("Any encoder/decoder pair works through --encode-cmd/--decode-cmd,");
        println!("e.g. an SVT-AV1 + ffmpeg pair:");
        println!("  --encode-cmd \"SvtAv1EncApp --rc 2 --tbr {{kbps}} -i {{input}} -b {{output}}\"");
        println!("  --decode-cmd \"ffmpeg -y -i {{input}} {{output}}\"");
        return Ok(());
    }

    let clip = synthetic::gradient_clip(128, 128, 30, (30, 1));
    let mut config = SearchConfig::new(50.0);
    config.max_steps = 4; // keep the live demo short
    let workspace = std::env::temp_dir().join("ratesearch-av1-demo");
    let outcome = run_search(&clip, &config, &codec, &workspace, "av1_demo")?;
    for attempt in &outcome.attempts {
        println!(
            "{}x step {}: request {:.2} kb/s -> achieved {:.2} kb/s",
            attempt.spatial_factor, attempt.step, attempt.requested_kbps, attempt.achieved_kbps
        );
    }
    match outcome.selected {
        Some(i) => println!(
            "selected: {}x @ {:.2} kb/s",
            outcome.attempts[i].spatial_factor, outcome.attempts[i].achieved_kbps
        ),
        None => println!("no feasible representation"),
    }
    Ok(())
}
