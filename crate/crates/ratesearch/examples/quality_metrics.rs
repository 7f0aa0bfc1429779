//! PSNR_Y, PSNR_CBCR and PSNR-HVS on progressively noisier clips, plus a
//! look at the CSF table that weights the DCT coefficients.
//!
//! ```bash
//! cargo run -p ratesearch --example quality_metrics
//! ```

use ratesearch::metrics::{csf_table, metric_set};
use ratesearch::synthetic;

fn main() -> anyhow::Result<()> {
    let reference = synthetic::gradient_clip(64, 64, 10, (30, 1));

    println!("noise sigma  psnr_y dB  psnr_cbcr dB  psnr_hvs dB");
    for sigma in [0.0, 1.0, 2.0, 5.0, 10.0, 20.0] {
        let distorted = if sigma == 0.0 {
            reference.clone()
        } else {
            synthetic::add_gaussian_noise(&reference, sigma, 42)
        };
        let metrics = metric_set(&reference, &distorted)?;
        println!(
            "{sigma:>11}  {:>9.3}  {:>12.3}  {:>11.3}",
            metrics.psnr_y, metrics.psnr_cbcr, metrics.psnr_hvs
        );
    }

    println!("\nCSF weights (8x8, row-major): low-frequency DCT error weighs most");
    let csf = csf_table();
    for row in 0..8 {
        let cells: Vec<String> = (0..8).map(|col| format!("{:.4}", csf[row * 8 + col])).collect();
        println!("  {}", cells.join("  "));
    }
    Ok(())
}
