//! Batch orchestration end to end: synthetic clips written as Y4M, searched
//! at two targets in parallel, with JSON reports, a scatter CSV and
//! achieved-rate statistics.
//!
//! ```bash
//! cargo run -p ratesearch --example batch_report
//! ```

use ratesearch::pipeline::{run_batch, BatchConfig};
use ratesearch::synthetic;
use ratesearch::write_y4m_file;

fn main() -> anyhow::Result<()> {
    let root = std::env::temp_dir().join("ratesearch-batch-demo");
    let clip_dir = root.join("clips");
    std::fs::create_dir_all(&clip_dir)?;

    let mut clips = Vec::new();
    for i in 0..5u64 {
        let path = clip_dir.join(format!("clip{i}.y4m"));
        write_y4m_file(&synthetic::noise_clip(64, 64, 12, (30, 1), i), &path)?;
        clips.push(path);
    }

    let config = BatchConfig {
        clips,
        targets_kbps: vec![50.0, 500.0],
        output_dir: root.join("out"),
        seed: 3,
        workers: Some(2),
        ..BatchConfig::default()
    };
    let outcome = run_batch(&config)?;

    println!("clip                      target  achieved  feasible");
    for row in &outcome.rows {
        let name = std::path::Path::new(&row.clip)
            .file_name()
            .unwrap()
            .to_string_lossy()
            .into_owned();
        println!(
            "{name:<25} {:>6}  {:>8}  {}",
            row.target_kbps,
            row.achieved_kbps
                .map(|z| format!("{z:.2}"))
                .unwrap_or_else(|| "-".into()),
            row.feasible,
        );
    }

    println!();
    for aggregate in &outcome.report.aggregates {
        println!(
            "target {} kb/s: mean achieved {:.2} kb/s, stddev {:.2} kb/s ({}/{} feasible)",
            aggregate.target_kbps,
            aggregate.mean_achieved_kbps.unwrap_or(f64::NAN),
            aggregate.stddev_achieved_kbps.unwrap_or(f64::NAN),
            aggregate.feasible_count,
            aggregate.clip_count,
        );
    }
    println!("\nbatch report: {}", outcome.report_path.display());
    if let Some(csv) = &outcome.csv_path {
        println!("scatter csv:  {}", csv.display());
    }
    Ok(())
}
