//! Independent oracles shared by the integration suites.
//!
//! Everything here recomputes results from first principles — straight
//! loops, textbook formulas — and deliberately avoids the library's
//! optimized paths, so agreement is meaningful.

use ratesearch::metrics::csf_table;
use ratesearch::video::VideoClip;

/// Plain PSNR over luma via a scalar loop.
pub fn psnr_y_oracle(reference: &VideoClip, distorted: &VideoClip) -> f64 {
    let mut sse = 0.0f64;
    let mut count = 0u64;
    for (rf, df) in reference.frames.iter().zip(&distorted.frames) {
        for (&a, &b) in rf.y.iter().zip(&df.y) {
            let diff = a as f64 - b as f64;
            sse += diff * diff;
            count += 1;
        }
    }
    let mse = sse / count as f64;
    if mse <= 0.0 {
        100.0
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// Chroma PSNR pooled over both planes via a scalar loop.
pub fn psnr_cbcr_oracle(reference: &VideoClip, distorted: &VideoClip) -> f64 {
    let mut sse = 0.0f64;
    let mut count = 0u64;
    for (rf, df) in reference.frames.iter().zip(&distorted.frames) {
        for (r, d) in [(&rf.cb, &df.cb), (&rf.cr, &df.cr)] {
            for (&a, &b) in r.iter().zip(d.iter()) {
                let diff = a as f64 - b as f64;
                sse += diff * diff;
                count += 1;
            }
        }
    }
    let mse = sse / count as f64;
    if mse <= 0.0 {
        100.0
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// Textbook orthonormal 2-D DCT-II of one 8x8 tile: quadruple loop, no
/// separability.
#[allow(clippy::needless_range_loop)]
fn dct8x8_oracle(tile: &[[f64; 8]; 8]) -> [[f64; 8]; 8] {
    let mut out = [[0.0f64; 8]; 8];
    let alpha = |u: usize| -> f64 {
        if u == 0 {
            (1.0f64 / 8.0).sqrt()
        } else {
            (2.0f64 / 8.0).sqrt()
        }
    };
    for u in 0..8 {
        for v in 0..8 {
            let mut acc = 0.0;
            for i in 0..8 {
                for j in 0..8 {
                    acc += tile[i][j]
                        * ((2 * i + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos()
                        * ((2 * j + 1) as f64 * v as f64 * std::f64::consts::PI / 16.0).cos();
                }
            }
            out[u][v] = alpha(u) * alpha(v) * acc;
        }
    }
    out
}

/// PSNR-HVS via per-tile DCT of reference and distorted separately, then
/// CSF-weighted coefficient differences.
pub fn psnr_hvs_oracle(reference: &VideoClip, distorted: &VideoClip) -> f64 {
    let csf = csf_table();
    let width = reference.width as usize;
    let tiles_x = width / 8;
    let tiles_y = reference.height as usize / 8;
    let mut weighted_sse = 0.0f64;
    let mut count = 0u64;
    for (rf, df) in reference.frames.iter().zip(&distorted.frames) {
        for ty in 0..tiles_y {
            for tx in 0..tiles_x {
                let mut ref_tile = [[0.0f64; 8]; 8];
                let mut dist_tile = [[0.0f64; 8]; 8];
                for i in 0..8 {
                    for j in 0..8 {
                        let idx = (ty * 8 + i) * width + tx * 8 + j;
                        ref_tile[i][j] = rf.y[idx] as f64;
                        dist_tile[i][j] = df.y[idx] as f64;
                    }
                }
                let ref_dct = dct8x8_oracle(&ref_tile);
                let dist_dct = dct8x8_oracle(&dist_tile);
                for u in 0..8 {
                    for v in 0..8 {
                        let weighted = (ref_dct[u][v] - dist_dct[u][v]) * csf[u * 8 + v];
                        weighted_sse += weighted * weighted;
                        count += 1;
                    }
                }
            }
        }
    }
    let mse = weighted_sse / count as f64;
    if mse <= 0.0 {
        100.0
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// Hand simulation of the per-scale request recurrence: the first step
/// halves the request, later steps halve the gap to the target; overshoot
/// moves down (never below 1), undershoot moves up. Returns the request and
/// achieved sequences for a proportional-response codec.
pub fn simulate_requests(target: f64, steps: u32, response_gain: f64) -> (Vec<f64>, Vec<f64>) {
    let mut requests = Vec::new();
    let mut achieved = Vec::new();
    let mut request = target;
    for step in 0..steps {
        let response = response_gain * request;
        requests.push(request);
        achieved.push(response);
        let adjustment = if step == 0 {
            request / 2.0
        } else {
            (target - request).abs() / 2.0
        };
        request = if response >= target {
            (request - adjustment).max(1.0)
        } else {
            request + adjustment
        };
    }
    (requests, achieved)
}
