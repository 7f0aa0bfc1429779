//! Full-reference quality metrics used for candidate selection and
//! reporting: plane PSNR and a CSF-weighted DCT-domain PSNR (PSNR-HVS).
//!
//! PSNR-HVS follows Egiazarian et al., "New full-reference quality metrics
//! based on HVS" (VPQM 2006): squared differences of 8x8 DCT coefficients,
//! weighted by a contrast sensitivity table, pooled into one MSE. This is
//! the plain variant — no between-coefficient contrast masking — so both
//! metrics here are symmetric in their arguments. Pooling is a single MSE
//! across all frames followed by one log transform, and lossless pairs
//! report the [`PSNR_CAP_DB`] sentinel instead of infinity so metric sets
//! stay totally ordered.

use crate::video::VideoClip;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

/// dB value reported for a lossless (zero-MSE) comparison.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Peak sample value for 8-bit content.
const PEAK: f64 = 255.0;

/// Side length of the DCT tiles used by PSNR-HVS.
const TILE: usize = 8;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("geometry mismatch: reference is {reference}, distorted is {distorted}")]
    GeometryMismatch {
        reference: String,
        distorted: String,
    },
    #[error("luma plane {width}x{height} is smaller than one 8x8 tile")]
    PlaneTooSmall { width: u32, height: u32 },
    #[error("CSF table: {0}")]
    CsfTable(String),
}

/// The three metrics recorded for every reconstructed candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub psnr_y: f64,
    pub psnr_cbcr: f64,
    pub psnr_hvs: f64,
}

/// Which planes a plain PSNR pools over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneSelection {
    /// Luma only.
    Luma,
    /// Both chroma planes pooled jointly into one number.
    Chroma,
}

fn check_geometry(reference: &VideoClip, distorted: &VideoClip) -> Result<(), MetricsError> {
    if !reference.same_geometry(distorted) {
        return Err(MetricsError::GeometryMismatch {
            reference: reference.geometry_string(),
            distorted: distorted.geometry_string(),
        });
    }
    Ok(())
}

fn mse_to_db(sse: f64, count: u64) -> f64 {
    let mse = sse / count as f64;
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

/// Pooled-MSE PSNR over the selected planes of all frames.
pub fn psnr(
    reference: &VideoClip,
    distorted: &VideoClip,
    planes: PlaneSelection,
) -> Result<f64, MetricsError> {
    check_geometry(reference, distorted)?;
    let mut sse = 0.0f64;
    let mut count = 0u64;
    for (rf, df) in reference.frames.iter().zip(&distorted.frames) {
        let pairs: &[(&[u8], &[u8])] = match planes {
            PlaneSelection::Luma => &[(&rf.y, &df.y)],
            PlaneSelection::Chroma => &[(&rf.cb, &df.cb), (&rf.cr, &df.cr)],
        };
        for (r, d) in pairs {
            for (&a, &b) in r.iter().zip(d.iter()) {
                let diff = a as f64 - b as f64;
                sse += diff * diff;
            }
            count += r.len() as u64;
        }
    }
    Ok(mse_to_db(sse, count))
}

/// CSF-weighted DCT-domain PSNR over non-overlapping 8x8 luma tiles.
///
/// Trailing rows and columns that do not fill a tile are cropped from both
/// clips identically. Errors if the luma plane is smaller than one tile.
pub fn psnr_hvs(reference: &VideoClip, distorted: &VideoClip) -> Result<f64, MetricsError> {
    check_geometry(reference, distorted)?;
    let tiles_x = reference.width as usize / TILE;
    let tiles_y = reference.height as usize / TILE;
    if tiles_x == 0 || tiles_y == 0 {
        return Err(MetricsError::PlaneTooSmall {
            width: reference.width,
            height: reference.height,
        });
    }
    let csf = csf_table();
    let width = reference.width as usize;

    let mut weighted_sse = 0.0f64;
    let mut count = 0u64;
    let mut diff = [0.0f64; TILE * TILE];
    for (rf, df) in reference.frames.iter().zip(&distorted.frames) {
        for ty in 0..tiles_y {
            for tx in 0..tiles_x {
                for row in 0..TILE {
                    let offset = (ty * TILE + row) * width + tx * TILE;
                    for col in 0..TILE {
                        diff[row * TILE + col] =
                            rf.y[offset + col] as f64 - df.y[offset + col] as f64;
                    }
                }
                // DCT is linear, so transforming the difference equals the
                // difference of the transforms.
                let coeffs = dct8x8(&diff);
                for (i, &c) in coeffs.iter().enumerate() {
                    let weighted = c * csf[i];
                    weighted_sse += weighted * weighted;
                }
                count += (TILE * TILE) as u64;
            }
        }
    }
    Ok(mse_to_db(weighted_sse, count))
}

/// All three metrics computed on the same pair.
pub fn metric_set(reference: &VideoClip, distorted: &VideoClip) -> Result<MetricSet, MetricsError> {
    Ok(MetricSet {
        psnr_y: psnr(reference, distorted, PlaneSelection::Luma)?,
        psnr_cbcr: psnr(reference, distorted, PlaneSelection::Chroma)?,
        psnr_hvs: psnr_hvs(reference, distorted)?,
    })
}

// --- orthonormal 8x8 DCT-II -------------------------------------------------

fn dct_basis() -> &'static [[f64; TILE]; TILE] {
    static BASIS: OnceLock<[[f64; TILE]; TILE]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut basis = [[0.0; TILE]; TILE];
        for (u, row) in basis.iter_mut().enumerate() {
            let alpha = if u == 0 {
                (1.0 / TILE as f64).sqrt()
            } else {
                (2.0 / TILE as f64).sqrt()
            };
            for (i, v) in row.iter_mut().enumerate() {
                *v = alpha
                    * ((2 * i + 1) as f64 * u as f64 * std::f64::consts::PI
                        / (2.0 * TILE as f64))
                        .cos();
            }
        }
        basis
    })
}

/// Separable orthonormal 2-D DCT-II of one 8x8 tile (row-major in and out).
fn dct8x8(tile: &[f64; TILE * TILE]) -> [f64; TILE * TILE] {
    let basis = dct_basis();
    // Transform rows.
    let mut rows = [0.0f64; TILE * TILE];
    for r in 0..TILE {
        for u in 0..TILE {
            let mut acc = 0.0;
            for i in 0..TILE {
                acc += basis[u][i] * tile[r * TILE + i];
            }
            rows[r * TILE + u] = acc;
        }
    }
    // Transform columns.
    let mut out = [0.0f64; TILE * TILE];
    for u in 0..TILE {
        for c in 0..TILE {
            let mut acc = 0.0;
            for r in 0..TILE {
                acc += basis[u][r] * rows[r * TILE + c];
            }
            out[u * TILE + c] = acc;
        }
    }
    out
}

// --- CSF table ---------------------------------------------------------------

const CSF_TABLE_TEXT: &str = include_str!("../data/csf_8x8.txt");

/// Parses a CSF weight file: `#`-prefixed comment lines followed by 64
/// decimal floats in row-major order, whitespace separated.
pub fn parse_csf_table(text: &str) -> Result<[f64; 64], MetricsError> {
    let mut values = [0.0f64; 64];
    let mut n = 0usize;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for token in line.split_whitespace() {
            if n >= 64 {
                return Err(MetricsError::CsfTable("more than 64 values".into()));
            }
            values[n] = token
                .parse::<f64>()
                .map_err(|_| MetricsError::CsfTable(format!("invalid value {token:?}")))?;
            n += 1;
        }
    }
    if n != 64 {
        return Err(MetricsError::CsfTable(format!("expected 64 values, found {n}")));
    }
    Ok(values)
}

/// The built-in CSF table shipped in `data/csf_8x8.txt`.
pub fn csf_table() -> &'static [f64; 64] {
    static TABLE: OnceLock<[f64; 64]> = OnceLock::new();
    TABLE.get_or_init(|| parse_csf_table(CSF_TABLE_TEXT).expect("bundled CSF table is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn identical_clips_hit_the_cap() {
        let clip = synthetic::gradient_clip(16, 16, 3, (30, 1));
        let m = metric_set(&clip, &clip).unwrap();
        assert_eq!(m.psnr_y, PSNR_CAP_DB);
        assert_eq!(m.psnr_cbcr, PSNR_CAP_DB);
        assert_eq!(m.psnr_hvs, PSNR_CAP_DB);
    }

    #[test]
    fn uniform_difference_of_one_matches_closed_form() {
        let a = synthetic::constant_clip(16, 16, 2, (30, 1), (100, 128, 128));
        let b = synthetic::constant_clip(16, 16, 2, (30, 1), (101, 128, 128));
        let db = psnr(&a, &b, PlaneSelection::Luma).unwrap();
        assert_close(db, 48.1308, 1e-3);
    }

    #[test]
    fn psnr_matches_scalar_loop_oracle() {
        // Straight-loop MSE over every sample, independent of the pooled
        // implementation above.
        let a = synthetic::noise_clip(8, 8, 2, (30, 1), 11);
        let b = synthetic::noise_clip(8, 8, 2, (30, 1), 12);
        let mut sse = 0.0;
        let mut n = 0u64;
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for (&x, &y) in fa.y.iter().zip(&fb.y) {
                sse += (x as f64 - y as f64).powi(2);
                n += 1;
            }
        }
        let expected = 10.0 * (255.0f64 * 255.0 / (sse / n as f64)).log10();
        assert_close(psnr(&a, &b, PlaneSelection::Luma).unwrap(), expected, 1e-9);
    }

    #[test]
    fn geometry_mismatch_rejected() {
        let a = synthetic::gradient_clip(16, 16, 2, (30, 1));
        let b = synthetic::gradient_clip(8, 8, 2, (30, 1));
        assert!(matches!(
            psnr(&a, &b, PlaneSelection::Luma),
            Err(MetricsError::GeometryMismatch { .. })
        ));
        let c = synthetic::gradient_clip(16, 16, 3, (30, 1));
        assert!(matches!(
            psnr_hvs(&a, &c),
            Err(MetricsError::GeometryMismatch { .. })
        ));
    }

    #[test]
    fn metrics_are_symmetric() {
        let a = synthetic::noise_clip(16, 16, 2, (30, 1), 5);
        let b = synthetic::add_gaussian_noise(&a, 4.0, 99);
        let m_ab = metric_set(&a, &b).unwrap();
        let m_ba = metric_set(&b, &a).unwrap();
        assert_eq!(m_ab, m_ba);
    }

    #[test]
    fn constant_tile_offset_depends_only_on_dc_weight() {
        // One 8x8 clip; distorted is reference + 3 everywhere. The DCT of a
        // constant-3 difference tile is DC = 8*3 with zero AC, so the
        // weighted MSE is (24 * CSF_00)^2 / 64.
        let a = synthetic::constant_clip(8, 8, 1, (30, 1), (100, 128, 128));
        let b = synthetic::constant_clip(8, 8, 1, (30, 1), (103, 128, 128));
        let csf00 = csf_table()[0];
        let mse = (24.0 * csf00).powi(2) / 64.0;
        let expected = 10.0 * (255.0f64 * 255.0 / mse).log10();
        assert_close(psnr_hvs(&a, &b).unwrap(), expected, 1e-9);
    }

    #[test]
    fn psnr_hvs_rejects_tiles_smaller_than_8x8() {
        let a = synthetic::constant_clip(4, 4, 1, (30, 1), (100, 128, 128));
        assert!(matches!(
            psnr_hvs(&a, &a),
            Err(MetricsError::PlaneTooSmall { .. })
        ));
    }

    #[test]
    fn noise_monotonicity_in_psnr_y() {
        let reference = synthetic::gradient_clip(32, 32, 4, (30, 1));
        let mild = synthetic::add_gaussian_noise(&reference, 2.0, 7);
        let strong = synthetic::add_gaussian_noise(&reference, 5.0, 7);
        let db_mild = psnr(&reference, &mild, PlaneSelection::Luma).unwrap();
        let db_strong = psnr(&reference, &strong, PlaneSelection::Luma).unwrap();
        assert!(db_mild > db_strong, "{db_mild} vs {db_strong}");
    }

    #[test]
    fn frame_relabeling_preserves_pooled_metrics() {
        let a = synthetic::noise_clip(16, 16, 4, (30, 1), 21);
        let b = synthetic::add_gaussian_noise(&a, 3.0, 22);
        let m = metric_set(&a, &b).unwrap();
        let mut a2 = a.clone();
        let mut b2 = b.clone();
        a2.frames.reverse();
        b2.frames.reverse();
        let m2 = metric_set(&a2, &b2).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn csf_parser_round_trips_bundled_table() {
        let table = csf_table();
        assert_close(table[0], 1.608443, 1e-12);
        assert_close(table[63], 0.259950, 1e-12);
        assert!(table.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn csf_parser_rejects_bad_input() {
        assert!(matches!(
            parse_csf_table("# comment\n1.0 2.0"),
            Err(MetricsError::CsfTable(_))
        ));
        assert!(matches!(
            parse_csf_table(&"1.0 ".repeat(65)),
            Err(MetricsError::CsfTable(_))
        ));
        assert!(matches!(
            parse_csf_table(&("x ".repeat(64))),
            Err(MetricsError::CsfTable(_))
        ));
    }

    #[test]
    fn dct_dc_of_constant_tile() {
        let tile = [3.0f64; 64];
        let coeffs = dct8x8(&tile);
        assert_close(coeffs[0], 24.0, 1e-12);
        for &c in &coeffs[1..] {
            assert_close(c, 0.0, 1e-12);
        }
    }
}
