//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `cargo test --test acceptance -- --nocapture`).

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratesearch::codec::{AttemptContext, Codec, MockCodec, MockModel};
use ratesearch::metrics::{metric_set, psnr, psnr_hvs, PlaneSelection};
use ratesearch::resample::{
    downsample_spatial, drop_alternate_frames, upsample_spatial, zoh_expand,
};
use ratesearch::search::{run_search, run_spatial_search, SearchConfig, SearchWorkspace};
use ratesearch::synthetic;
use ratesearch::video::VideoClip;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

fn criterion<F>(number: u32, name: &str, body: F)
where
    F: FnOnce() + std::panic::UnwindSafe,
{
    let result = std::panic::catch_unwind(body);
    match &result {
        Ok(()) => println!("criterion {number} ({name}): PASS"),
        Err(_) => println!("criterion {number} ({name}): FAIL"),
    }
    if let Err(panic) = result {
        std::panic::resume_unwind(panic);
    }
}

fn zero_floor_model(rate_gain: f64, noise_seed: u64) -> MockModel {
    MockModel {
        rate_gain,
        rate_floor_kbps: BTreeMap::new(),
        noise_seed,
        distortion_coeff: 2000.0,
    }
}

fn workspace(label: &str) -> SearchWorkspace {
    SearchWorkspace::new(
        std::env::temp_dir().join("ratesearch-acceptance"),
        label,
    )
}

/// Six deterministic clips with varied content for the batch criteria.
fn batch_clips() -> Vec<VideoClip> {
    vec![
        synthetic::gradient_clip(64, 64, 8, (30, 1)),
        synthetic::gradient_clip(64, 32, 8, (25, 1)),
        synthetic::noise_clip(64, 64, 8, (30, 1), 100),
        synthetic::sinusoid_clip(64, 64, 8, (30, 1), 2.0, 3.0, 80.0),
        synthetic::gradient_clip(32, 64, 8, (30000, 1001)),
        synthetic::noise_clip(64, 64, 8, (24, 1), 200),
    ]
}

#[test]
fn criterion_1_recurrence_oracle() {
    criterion(1, "algorithm recurrence oracle", || {
        let start = Instant::now();
        let codec = MockCodec::new(zero_floor_model(1.2, 1));
        let clip = synthetic::gradient_clip(32, 32, 4, (30, 1));
        let config = SearchConfig::new(50.0);
        let (attempts, abort) =
            run_spatial_search(&clip, &clip, 1, 1, &config, &codec, &workspace("c1"));
        assert!(abort.is_none());
        assert_eq!(attempts.len(), 8);

        let expected_requests =
            [50.0, 25.0, 37.5, 43.75, 40.625, 45.3125, 42.96875, 39.453125];
        let expected_achieved =
            [60.0, 30.0, 45.0, 52.5, 48.75, 54.375, 51.5625, 47.34375];
        // agreement with the independent hand simulation of the recurrence
        let (sim_requests, sim_achieved) = common::simulate_requests(50.0, 8, 1.2);
        for i in 0..8 {
            assert!((attempts[i].requested_kbps - expected_requests[i]).abs() <= 1e-9);
            assert!((attempts[i].achieved_kbps - expected_achieved[i]).abs() <= 1e-9);
            assert!((sim_requests[i] - expected_requests[i]).abs() <= 1e-9);
            assert!((sim_achieved[i] - expected_achieved[i]).abs() <= 1e-9);
        }

        let best_feasible = attempts
            .iter()
            .filter(|a| a.achieved_kbps <= 50.0)
            .map(|a| a.achieved_kbps)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best_feasible - 48.75).abs() <= 1e-9);
        assert!(start.elapsed().as_secs_f64() < 1.0, "took {:?}", start.elapsed());
    });
}

#[test]
fn criterion_2_identity_response_convergence() {
    criterion(2, "identity-response convergence", || {
        let clip = synthetic::gradient_clip(16, 16, 2, (30, 1));
        let check = |target: f64| {
            let codec = MockCodec::new(zero_floor_model(1.0, 2));
            let config = SearchConfig {
                target_kbps: target,
                ..SearchConfig::new(target)
            };
            let (attempts, abort) =
                run_spatial_search(&clip, &clip, 1, 1, &config, &codec, &workspace("c2"));
            assert!(abort.is_none());
            let best_feasible = attempts
                .iter()
                .filter(|a| a.achieved_kbps <= target)
                .map(|a| a.achieved_kbps)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(
                best_feasible >= target * (1.0 - 2.0f64.powi(-7)),
                "target {target}: best feasible {best_feasible}"
            );
            // the k-th request closes the gap to target/2^(k-1); below a
            // target of 2 kb/s the 1 kb/s request floor clips the first
            // halving, so the pure shape only holds from 2 up
            if target >= 2.0 {
                for (k, attempt) in attempts.iter().enumerate().skip(1) {
                    let expected_gap = target / 2.0f64.powi(k as i32);
                    assert!(
                        ((target - attempt.requested_kbps) - expected_gap).abs() <= 1e-9 * target,
                        "target {target} step {k}"
                    );
                }
            }
        };
        check(50.0);
        check(500.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            check(rng.gen_range(1.0..=1000.0));
        }
    });
}

#[test]
fn criterion_3_batch_rate_compliance() {
    criterion(3, "batch rate compliance", || {
        let clips = batch_clips();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for target in [50.0, 500.0] {
            let mut selected_rates = Vec::new();
            for (i, clip) in clips.iter().enumerate() {
                let gain = rng.gen_range(0.8..=2.0);
                let codec = MockCodec::new(MockModel {
                    rate_gain: gain,
                    noise_seed: i as u64,
                    ..MockModel::default()
                });
                let config = SearchConfig::new(target);
                let outcome = run_search(
                    clip,
                    &config,
                    &codec,
                    &workspace("c3").root,
                    &format!("c3_{i}_t{target}"),
                )
                .unwrap();
                let selected = outcome.selected.expect("feasible representation");
                let achieved = outcome.attempts[selected].achieved_kbps;
                assert!(
                    achieved <= target,
                    "clip {i} target {target}: selected {achieved}"
                );
                selected_rates.push(achieved);
            }
            let mean = selected_rates.iter().sum::<f64>() / selected_rates.len() as f64;
            assert!(
                mean >= 0.9 * target,
                "target {target}: mean selected rate {mean}"
            );
        }

        // optional desk check with a real AV1 tool pair
        if which("aomenc") && which("dav1d") {
            let clip = synthetic::gradient_clip(64, 64, 24, (30, 1));
            let codec = ratesearch::ExternalCodec::default();
            let config = SearchConfig::new(50.0);
            let outcome = run_search(
                &clip,
                &config,
                &codec,
                &workspace("c3-av1").root,
                "c3_av1",
            )
            .unwrap();
            if let Some(selected) = outcome.selected {
                let achieved = outcome.attempts[selected].achieved_kbps;
                assert!((0.8 * 50.0..=50.0).contains(&achieved));
            }
        } else {
            println!("criterion 3 note: aomenc/dav1d not present, desk check skipped");
        }
    });
}

fn which(tool: &str) -> bool {
    std::env::var_os("PATH")
        .map(|paths| {
            std::env::split_paths(&paths).any(|dir| dir.join(tool).is_file())
        })
        .unwrap_or(false)
}

#[test]
fn criterion_4_naive_cbr_overshoot_contrast() {
    criterion(4, "naive CBR overshoot contrast", || {
        let clips = batch_clips();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let target = 50.0;
        let mut naive_overshoots = 0;
        for (i, clip) in clips.iter().enumerate() {
            let gain = rng.gen_range(1.05..=2.0);
            let codec = MockCodec::new(MockModel {
                rate_gain: gain,
                noise_seed: i as u64,
                ..MockModel::default()
            });

            // naive CBR: one plain encode with the target as the request
            let ws = workspace("c4").root.join(format!("naive_{i}"));
            let naive = codec
                .encode_decode(clip, target, &AttemptContext::standalone(&ws))
                .unwrap();
            if naive.achieved_kbps > target {
                naive_overshoots += 1;
            }

            let outcome = run_search(
                clip,
                &SearchConfig::new(target),
                &codec,
                &workspace("c4").root,
                &format!("c4_{i}"),
            )
            .unwrap();
            let selected = outcome.selected.expect("feasible representation");
            assert!(outcome.attempts[selected].achieved_kbps <= target);
        }
        assert_eq!(naive_overshoots, clips.len(), "every naive encode overshoots");
    });
}

#[test]
fn criterion_5_metric_oracles() {
    criterion(5, "metric oracles", || {
        // closed form: every luma sample differs by exactly one
        let a = synthetic::constant_clip(16, 16, 2, (30, 1), (90, 128, 128));
        let b = synthetic::constant_clip(16, 16, 2, (30, 1), (91, 128, 128));
        let db = psnr(&a, &b, PlaneSelection::Luma).unwrap();
        assert!((db - 48.1308).abs() <= 1e-3, "uniform difference: {db}");

        for seed in 0..50u64 {
            let a = synthetic::noise_clip(8, 8, 2, (30, 1), seed);
            let b = synthetic::noise_clip(8, 8, 2, (30, 1), seed + 1000);
            let implementation = psnr(&a, &b, PlaneSelection::Luma).unwrap();
            let oracle = common::psnr_y_oracle(&a, &b);
            assert!(
                (implementation - oracle).abs() <= 1e-6,
                "psnr seed {seed}: {implementation} vs {oracle}"
            );
            assert_eq!(
                implementation,
                psnr(&b, &a, PlaneSelection::Luma).unwrap(),
                "psnr symmetry seed {seed}"
            );
            let chroma = psnr(&a, &b, PlaneSelection::Chroma).unwrap();
            let chroma_oracle = common::psnr_cbcr_oracle(&a, &b);
            assert!(
                (chroma - chroma_oracle).abs() <= 1e-6,
                "psnr_cbcr seed {seed}: {chroma} vs {chroma_oracle}"
            );
        }

        for seed in 0..50u64 {
            let a = synthetic::noise_clip(16, 16, 1, (30, 1), seed);
            let b = synthetic::noise_clip(16, 16, 1, (30, 1), seed + 2000);
            let implementation = psnr_hvs(&a, &b).unwrap();
            let oracle = common::psnr_hvs_oracle(&a, &b);
            let scale = implementation.abs().max(oracle.abs()).max(1.0);
            assert!(
                (implementation - oracle).abs() <= 1e-6 * scale,
                "psnr_hvs seed {seed}: {implementation} vs {oracle}"
            );
            assert_eq!(
                implementation,
                psnr_hvs(&b, &a).unwrap(),
                "psnr_hvs symmetry seed {seed}"
            );
        }
    });
}

#[test]
fn criterion_6_resampler_fidelity() {
    criterion(6, "resampler fidelity", || {
        // constant planes survive every ladder factor within one LSB
        let constant = synthetic::constant_clip(64, 64, 2, (30, 1), (128, 90, 170));
        for factor in [1u32, 2, 4, 8] {
            let down = downsample_spatial(&constant, factor).unwrap();
            for frame in &down.frames {
                assert!(frame.y.iter().all(|&v| (v as i32 - 128).abs() <= 1));
                assert!(frame.cb.iter().all(|&v| (v as i32 - 90).abs() <= 1));
                assert!(frame.cr.iter().all(|&v| (v as i32 - 170).abs() <= 1));
            }
        }

        // band-limited sinusoid down x2 then up x2 stays above 40 dB
        let sinusoid = synthetic::sinusoid_clip(64, 64, 2, (30, 1), 2.0, 2.0, 100.0);
        let down = downsample_spatial(&sinusoid, 2).unwrap();
        let up = upsample_spatial(&down, 64, 64).unwrap();
        let db = psnr(&sinusoid, &up, PlaneSelection::Luma).unwrap();
        assert!(db >= 40.0, "sinusoid round trip: {db} dB");

        // temporal decimation and zero-order hold restore count and rate
        for fps in [(30u32, 1u32), (25, 1), (30000, 1001)] {
            let clip = synthetic::numbered_clip(16, 16, 6, fps);
            let restored = zoh_expand(&drop_alternate_frames(&clip).unwrap(), 2).unwrap();
            assert_eq!(restored.frame_count(), clip.frame_count());
            assert_eq!((restored.fps_num, restored.fps_den), fps);
        }
    });
}

#[test]
fn criterion_7_report_determinism() {
    criterion(7, "report determinism", || {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("clip.y4m");
        ratesearch::write_y4m_file(&synthetic::gradient_clip(64, 64, 6, (30, 1)), &input)
            .unwrap();

        let run = |report_path: &Path, workspace: &Path| {
            let status = std::process::Command::new(env!("CARGO_BIN_EXE_ratesearch"))
                .args([
                    "search",
                    "--input",
                    input.to_str().unwrap(),
                    "--target-kbps",
                    "50",
                    "--seed",
                    "11",
                    "--report",
                    report_path.to_str().unwrap(),
                ])
                .env("RATESEARCH_WORKSPACE", workspace)
                .output()
                .unwrap();
            assert!(status.status.success(), "{status:?}");
        };
        let report_a = dir.path().join("a.json");
        let report_b = dir.path().join("b.json");
        run(&report_a, &dir.path().join("ws"));
        run(&report_b, &dir.path().join("ws"));

        let strip_timestamp = |path: &Path| -> String {
            std::fs::read_to_string(path)
                .unwrap()
                .lines()
                .filter(|line| !line.contains("created_unix"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip_timestamp(&report_a), strip_timestamp(&report_b));
    });
}

#[test]
fn criterion_8_learned_metrics_only_via_hooks() {
    criterion(8, "learned metrics reachable only through hooks", || {
        // Learned metrics and neural post-processing stay out of process;
        // what this tool guarantees is the hook surface. A stub external
        // metric must flow into the report under its own name,
        // uninterpreted.
        use std::io::Write;
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let stub = dir.path().join("fake-metric");
        let mut file = std::fs::File::create(&stub).unwrap();
        writeln!(file, "#!/bin/sh\ntest -f \"$1\" && test -f \"$2\" && echo 42.5").unwrap();
        let mut perms = file.metadata().unwrap().permissions();
        perms.set_mode(0o755);
        std::fs::set_permissions(&stub, perms).unwrap();
        drop(file);

        let input = dir.path().join("clip.y4m");
        ratesearch::write_y4m_file(&synthetic::gradient_clip(32, 32, 4, (30, 1)), &input)
            .unwrap();
        let codec = MockCodec::with_seed(5);
        let hooks = vec![ratesearch::pipeline::MetricHook {
            name: "stub_dists".to_string(),
            template: format!("{} {{ref}} {{dist}}", stub.display()),
        }];
        let options = ratesearch::pipeline::RunOptions {
            config: SearchConfig::new(50.0),
            codec: &codec,
            codec_description: codec.describe(),
            seed: Some(5),
            postprocess_command: None,
            external_metric_commands: &hooks,
            workspace_root: dir.path().join("ws"),
            hook_timeout_seconds: 30,
        };
        let report = ratesearch::pipeline::run_clip(&input, &options).unwrap();
        assert_eq!(report.external_metrics.get("stub_dists"), Some(&42.5));
        // the hook command line is auditable in the report
        assert!(report
            .command_lines
            .iter()
            .any(|line| line.contains("fake-metric")));
        // native metrics remain exactly the three the library computes
        let clip = ratesearch::read_y4m_file(&input).unwrap();
        let set = metric_set(&clip, &clip).unwrap();
        let json = serde_json::to_value(set).unwrap();
        let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["psnr_cbcr", "psnr_hvs", "psnr_y"]);
    });
}
