//! Command-line front end: `search` for one clip and target, `metrics` for a
//! clip pair, `batch` for a configured set of jobs.
//!
//! Exit codes: 0 when everything selected a feasible representation, 3 when
//! something stayed infeasible, 1 on operational errors, 2 on usage errors
//! (unknown flags, missing values).

use crate::codec::{Codec, ExternalCodec, MockCodec, MockModel};
use crate::metrics::metric_set;
use crate::pipeline::{
    self, format_kbps, run_clip, BatchConfig, MetricHook, PipelineError, RunOptions,
};
use crate::report::{write_scatter_csv, ScatterRow};
use crate::search::SearchConfig;
use crate::y4m::read_y4m_file;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_OPERATIONAL: u8 = 1;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ratesearch", version, about = "Target-bitrate encode search with a dyadic resolution ladder and PSNR-HVS selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Search one clip for one target bitrate and report the selection.
    Search(SearchArgs),
    /// Compute PSNR_Y, PSNR_CBCR and PSNR-HVS between two Y4M clips.
    Metrics(MetricsArgs),
    /// Run a batch of clips and targets from a JSON config.
    Batch(BatchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodecKind {
    Mock,
    External,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Input clip (YUV4MPEG2, 8-bit 4:2:0).
    #[arg(long)]
    pub input: PathBuf,
    /// Target bitrate in kb/s.
    #[arg(long = "target-kbps")]
    pub target_kbps: f64,
    /// Bisection steps per spatial scale.
    #[arg(long = "max-steps", default_value_t = 8)]
    pub max_steps: u32,
    /// Dyadic spatial ladder.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub ladder: Vec<u32>,
    /// Frame-rate halvings allowed when the spatial ladder fails.
    #[arg(long = "temporal-halvings", default_value_t = 2)]
    pub temporal_halvings: u32,
    #[arg(long, value_enum, default_value_t = CodecKind::Mock)]
    pub codec: CodecKind,
    /// Encoder command template ({input}, {output}, {kbps}, ...).
    #[arg(long = "encode-cmd")]
    pub encode_cmd: Option<String>,
    /// Decoder command template ({input}, {output}).
    #[arg(long = "decode-cmd")]
    pub decode_cmd: Option<String>,
    /// Post-processor hook template ({input}, {output}).
    #[arg(long = "postproc-cmd")]
    pub postproc_cmd: Option<String>,
    /// External metric hook as name=template ({ref}, {dist}); repeatable.
    #[arg(long = "metric-cmd")]
    pub metric_cmd: Vec<String>,
    /// Write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write a one-row scatter CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Seed for the mock codec's noise stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop the ladder after the first feasible scale.
    #[arg(long = "early-exit")]
    pub early_exit: bool,
    /// Feasibility slack: accept achieved <= target * (1 + slack).
    #[arg(long, default_value_t = 0.0)]
    pub slack: f64,
    /// Timeout for external commands, in seconds.
    #[arg(long = "timeout-seconds", default_value_t = 600)]
    pub timeout_seconds: u64,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Reference clip.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Distorted clip, same geometry as the reference.
    #[arg(long = "dist")]
    pub distorted: PathBuf,
}

#[derive(Args, Debug)]
pub struct BatchArgs {
    /// Batch configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long = "output-dir")]
    pub output_dir: Option<PathBuf>,
    /// Override the config's scatter CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Override the worker-pool size (default: logical cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Parses argv and runs the requested command. Usage errors exit(2) via
/// clap.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Search(args) => run_search_command(&args),
        Command::Metrics(args) => run_metrics_command(&args),
        Command::Batch(args) => run_batch_command(&args),
    };
    match code {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_OPERATIONAL)
        }
    }
}

fn parse_metric_hooks(entries: &[String]) -> Result<Vec<MetricHook>, PipelineError> {
    entries
        .iter()
        .map(|entry| {
            entry
                .split_once('=')
                .map(|(name, template)| MetricHook {
                    name: name.to_string(),
                    template: template.to_string(),
                })
                .ok_or_else(|| {
                    PipelineError::Config(format!(
                        "--metric-cmd expects name=template, got {entry:?}"
                    ))
                })
        })
        .collect()
}

fn run_search_command(args: &SearchArgs) -> Result<u8, PipelineError> {
    let config = SearchConfig {
        target_kbps: args.target_kbps,
        max_steps: args.max_steps,
        spatial_factors: args.ladder.clone(),
        max_temporal_halvings: args.temporal_halvings,
        feasibility_slack: args.slack,
        early_exit: args.early_exit,
    };
    config.validate()?;

    let codec: Box<dyn Codec> = match args.codec {
        CodecKind::Mock => Box::new(MockCodec::new(MockModel {
            noise_seed: args.seed,
            ..MockModel::default()
        })),
        CodecKind::External => {
            let mut external = ExternalCodec::default();
            if let Some(cmd) = &args.encode_cmd {
                external.encode_template = cmd.clone();
            }
            if let Some(cmd) = &args.decode_cmd {
                external.decode_template = cmd.clone();
            }
            external.timeout_seconds = args.timeout_seconds;
            external
                .validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
            Box::new(external)
        }
    };

    let hooks = parse_metric_hooks(&args.metric_cmd)?;
    if let Some(template) = &args.postproc_cmd {
        crate::codec::validate_template(template, &["input", "output"])
            .map_err(|e| PipelineError::Config(format!("postprocess command: {e}")))?;
    }
    for hook in &hooks {
        crate::codec::validate_template(&hook.template, &["ref", "dist"])
            .map_err(|e| PipelineError::Config(format!("metric hook {}: {e}", hook.name)))?;
    }

    let options = RunOptions {
        config,
        codec: codec.as_ref(),
        codec_description: codec.describe(),
        seed: Some(args.seed),
        postprocess_command: args.postproc_cmd.as_deref(),
        external_metric_commands: &hooks,
        workspace_root: pipeline::workspace_root(),
        hook_timeout_seconds: args.timeout_seconds,
    };
    let report = run_clip(&args.input, &options)?;

    match &report.selected_summary {
        Some(s) => println!(
            "{}: target {} kb/s -> selected {}x downsampled, temporal 1/{}, request {:.3} kb/s, achieved {:.3} kb/s, psnr_hvs {:.3} dB ({} attempts)",
            args.input.display(),
            format_kbps(args.target_kbps),
            s.spatial_factor,
            s.temporal_factor,
            s.requested_kbps,
            s.achieved_kbps,
            s.metrics.psnr_hvs,
            report.total_encoder_invocations,
        ),
        None => println!(
            "{}: target {} kb/s -> no feasible representation after {} attempts",
            args.input.display(),
            format_kbps(args.target_kbps),
            report.total_encoder_invocations,
        ),
    }
    for (name, value) in &report.external_metrics {
        println!("  external {name}: {value}");
    }

    if let Some(path) = &args.report {
        report.write_file(path)?;
        println!("report: {}", path.display());
    }
    if let Some(path) = &args.csv {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = std::fs::File::create(path)?;
        write_scatter_csv(&[ScatterRow::from_report(&report)], file)?;
        println!("csv: {}", path.display());
    }

    Ok(if report.feasible {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}

fn run_metrics_command(args: &MetricsArgs) -> Result<u8, PipelineError> {
    let reference = read_y4m_file(&args.reference)?;
    let distorted = read_y4m_file(&args.distorted)?;
    let metrics = metric_set(&reference, &distorted)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&metrics)
            .map_err(|e| PipelineError::Config(e.to_string()))?
    );
    Ok(EXIT_OK)
}

fn run_batch_command(args: &BatchArgs) -> Result<u8, PipelineError> {
    let mut config = BatchConfig::from_json_file(&args.config)?;
    // flags win over the config file
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(dir) = &args.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(csv) = &args.csv {
        config.csv = Some(csv.clone());
    }
    if let Some(workers) = args.workers {
        config.workers = Some(workers);
    }

    let outcome = pipeline::run_batch(&config)?;
    for aggregate in &outcome.report.aggregates {
        match (aggregate.mean_achieved_kbps, aggregate.stddev_achieved_kbps) {
            (Some(mean), Some(stddev)) => println!(
                "target {} kb/s: {}/{} feasible, achieved mean {:.2} kb/s, stddev {:.2} kb/s",
                format_kbps(aggregate.target_kbps),
                aggregate.feasible_count,
                aggregate.clip_count,
                mean,
                stddev,
            ),
            _ => println!(
                "target {} kb/s: 0/{} feasible",
                format_kbps(aggregate.target_kbps),
                aggregate.clip_count,
            ),
        }
    }
    for entry in outcome.report.entries.iter().filter(|e| e.error.is_some()) {
        eprintln!(
            "failed: {} @ {} kb/s: {}",
            entry.clip,
            format_kbps(entry.target_kbps),
            entry.error.as_deref().unwrap_or("unknown")
        );
    }
    println!("batch report: {}", outcome.report_path.display());
    if let Some(csv) = &outcome.csv_path {
        println!("csv: {}", csv.display());
    }

    Ok(if outcome.all_feasible() {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}
