//! Wiring an external post-processor into the pipeline. The hook receives
//! the selected reconstruction as Y4M via `{input}` and must write a clip of
//! identical geometry to `{output}`; here a tiny shell stub stands in for a
//! real enhancement tool, and the report carries metrics before and after.
//!
//! ```bash
//! cargo run -p ratesearch --example postprocess_hook
//! ```

use ratesearch::codec::{Codec, MockCodec};
use ratesearch::pipeline::{run_clip, RunOptions};
use ratesearch::search::SearchConfig;
use ratesearch::synthetic;
use ratesearch::write_y4m_file;
use std::io::Write;
use std::os::unix::fs::PermissionsExt;

fn main() -> anyhow::Result<()> {
    let root = std::env::temp_dir().join("ratesearch-hook-demo");
    std::fs::create_dir_all(&root)?;
    let input = root.join("clip.y4m");
    write_y4m_file(&synthetic::gradient_clip(64, 64, 10, (30, 1)), &input)?;

    // identity "enhancer": copies input to output
    let hook = root.join("enhance.sh");
    let mut file = std::fs::File::create(&hook)?;
    writeln!(file, "#!/bin/sh\ncp \"$1\" \"$2\"")?;
    let mut perms = file.metadata()?.permissions();
    perms.set_mode(0o755);
    std::fs::set_permissions(&hook, perms)?;
    drop(file);

    let codec = MockCodec::with_seed(2);
    let template = format!("{} {{input}} {{output}}", hook.display());
    let options = RunOptions {
        config: SearchConfig::new(50.0),
        codec: &codec,
        codec_description: codec.describe(),
        seed: Some(2),
        postprocess_command: Some(&template),
        external_metric_commands: &[],
        workspace_root: root.join("ws"),
        hook_timeout_seconds: 60,
    };
    let report = run_clip(&input, &options)?;

    let selected = report.selected_summary.as_ref().expect("feasible");
    let post = report.postprocessed.as_ref().expect("hook ran");
    println!("selected representation: {}x @ {:.3} kb/s", selected.spatial_factor, selected.achieved_kbps);
    println!("psnr_hvs before hook: {:.3} dB", selected.metrics.psnr_hvs);
    println!("psnr_hvs after hook:  {:.3} dB (identity hook, unchanged)", post.metrics.psnr_hvs);
    println!("hook command recorded in the report: {}", post.command_line);
    Ok(())
}
