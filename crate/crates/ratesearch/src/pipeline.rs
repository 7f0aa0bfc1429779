//! Batch orchestration: per-clip searches, the external post-processor and
//! metric hooks, report/CSV emission and aggregate statistics.
//!
//! Hooks keep learned processing out of process: the post-processor hook
//! receives the selected reconstruction as Y4M and must return a clip of
//! identical geometry; metric hooks receive a reference/distorted pair and
//! print a single float. Results are stored under the hook's name, never
//! interpreted.

use crate::codec::{self, Codec, CodecError, ExternalCodec, MockCodec, MockModel};
use crate::metrics::{metric_set, MetricsError};
use crate::report::{
    aggregate_rows, write_scatter_csv, BatchEntry, BatchReport, PostprocessRecord, Report,
    ReportError, ScatterRow,
};
use crate::resample::ResampleError;
use crate::search::{reconstruct_full, run_search, search_reference, SearchConfig, SearchError};
use crate::video::VideoClip;
use crate::y4m::{read_y4m_file, write_y4m_file, Y4mError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable that overrides the workspace root for intermediate
/// files.
pub const WORKSPACE_ENV: &str = "RATESEARCH_WORKSPACE";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Y4m(#[from] Y4mError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Resample(#[from] ResampleError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("hook geometry violation: expected {expected}, got {actual}")]
    HookGeometry { expected: String, actual: String },
    #[error("metric hook {name:?} wrote {output:?}, expected a single float on stdout")]
    HookOutput { name: String, output: String },
}

/// Which backend performs the encodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodecChoice {
    Mock(MockModel),
    External(ExternalCodec),
}

impl Default for CodecChoice {
    fn default() -> Self {
        CodecChoice::Mock(MockModel::default())
    }
}

impl CodecChoice {
    pub fn build(&self) -> Box<dyn Codec> {
        match self {
            CodecChoice::Mock(model) => Box::new(MockCodec::new(model.clone())),
            CodecChoice::External(codec) => Box::new(codec.clone()),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        match self {
            CodecChoice::Mock(model) => model.validate().map_err(PipelineError::from),
            CodecChoice::External(codec) => codec
                .validate()
                .map_err(|e| PipelineError::Config(e.to_string())),
        }
    }

    /// Same model but with a per-run noise seed, for deterministic yet
    /// decorrelated batch entries.
    pub fn with_seed(&self, seed: u64) -> CodecChoice {
        match self {
            CodecChoice::Mock(model) => CodecChoice::Mock(MockModel {
                noise_seed: seed,
                ..model.clone()
            }),
            external => external.clone(),
        }
    }
}

/// An external metric tool: `{ref}`/`{dist}` placeholders, one float on
/// stdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricHook {
    pub name: String,
    pub template: String,
}

/// One unit of work: a clip searched at a list of targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub input: PathBuf,
    pub targets_kbps: Vec<f64>,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub postprocess_command: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub external_metric_commands: Vec<MetricHook>,
}

impl Job {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.targets_kbps.is_empty() {
            return Err(PipelineError::Config("job has no targets".into()));
        }
        for &t in &self.targets_kbps {
            if !t.is_finite() || t < 1.0 {
                return Err(PipelineError::Config(format!(
                    "target {t} kb/s is below 1"
                )));
            }
        }
        if !self.input.exists() {
            return Err(PipelineError::Config(format!(
                "input {} not found",
                self.input.display()
            )));
        }
        if let Some(template) = &self.postprocess_command {
            codec::validate_template(template, &["input", "output"])
                .map_err(|e| PipelineError::Config(format!("postprocess command: {e}")))?;
        }
        for hook in &self.external_metric_commands {
            codec::validate_template(&hook.template, &["ref", "dist"])
                .map_err(|e| PipelineError::Config(format!("metric hook {}: {e}", hook.name)))?;
        }
        Ok(())
    }
}

/// Batch configuration, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchConfig {
    pub clips: Vec<PathBuf>,
    pub targets_kbps: Vec<f64>,
    pub output_dir: PathBuf,
    pub codec: CodecChoice,
    pub max_steps: u32,
    pub spatial_factors: Vec<u32>,
    pub max_temporal_halvings: u32,
    pub feasibility_slack: f64,
    pub early_exit: bool,
    pub seed: u64,
    /// Worker threads for clip-level parallelism; `None` uses the logical
    /// core count.
    pub workers: Option<usize>,
    pub postprocess_command: Option<String>,
    pub external_metric_commands: Vec<MetricHook>,
    pub csv: Option<PathBuf>,
    pub hook_timeout_seconds: u64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            clips: Vec::new(),
            targets_kbps: vec![50.0, 500.0],
            output_dir: PathBuf::from("ratesearch-out"),
            codec: CodecChoice::default(),
            max_steps: 8,
            spatial_factors: vec![1, 2, 4, 8],
            max_temporal_halvings: 2,
            feasibility_slack: 0.0,
            early_exit: false,
            seed: 0,
            workers: None,
            postprocess_command: None,
            external_metric_commands: Vec::new(),
            csv: None,
            hook_timeout_seconds: 600,
        }
    }
}

impl BatchConfig {
    pub fn from_json_file(path: &Path) -> Result<BatchConfig, PipelineError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    /// One [`Job`] per clip, sharing the batch's targets and hooks.
    pub fn jobs(&self) -> Vec<Job> {
        self.clips
            .iter()
            .map(|clip| Job {
                input: clip.clone(),
                targets_kbps: self.targets_kbps.clone(),
                output_dir: self.output_dir.clone(),
                postprocess_command: self.postprocess_command.clone(),
                external_metric_commands: self.external_metric_commands.clone(),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.clips.is_empty() {
            return Err(PipelineError::Config("batch has no clips".into()));
        }
        self.codec.validate()?;
        for target in &self.targets_kbps {
            self.search_config(*target).validate()?;
        }
        for job in self.jobs() {
            job.validate()?;
        }
        Ok(())
    }

    pub fn search_config(&self, target_kbps: f64) -> SearchConfig {
        SearchConfig {
            target_kbps,
            max_steps: self.max_steps,
            spatial_factors: self.spatial_factors.clone(),
            max_temporal_halvings: self.max_temporal_halvings,
            feasibility_slack: self.feasibility_slack,
            early_exit: self.early_exit,
        }
    }
}

/// Resolves the root for intermediate files: the `RATESEARCH_WORKSPACE`
/// environment variable when set, otherwise `ratesearch` under the system
/// temp directory.
pub fn workspace_root() -> PathBuf {
    std::env::var_os(WORKSPACE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ratesearch"))
}

/// Stable per-(clip, target) label: also the attempt-directory namespace.
pub fn run_label(input: &Path, target_kbps: f64) -> String {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "clip".to_string());
    format!("{stem}_t{}", format_kbps(target_kbps))
}

/// `50` for integral rates, `37.5` otherwise.
pub fn format_kbps(kbps: f64) -> String {
    if kbps.fract() == 0.0 {
        format!("{}", kbps as u64)
    } else {
        format!("{kbps}")
    }
}

fn fnv1a(text: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in text.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Seed for one batch entry: decorrelated across clips and targets, stable
/// under reordering.
pub fn derive_entry_seed(base: u64, input: &Path, target_kbps: f64) -> u64 {
    base ^ fnv1a(&input.display().to_string()) ^ target_kbps.to_bits()
}

/// Options for a single clip/target run.
pub struct RunOptions<'a> {
    pub config: SearchConfig,
    pub codec: &'a dyn Codec,
    pub codec_description: String,
    pub seed: Option<u64>,
    pub postprocess_command: Option<&'a str>,
    pub external_metric_commands: &'a [MetricHook],
    pub workspace_root: PathBuf,
    pub hook_timeout_seconds: u64,
}

/// Reads a clip, runs the search, applies the hooks to the selected
/// representation and assembles the report.
pub fn run_clip(input: &Path, options: &RunOptions<'_>) -> Result<Report, PipelineError> {
    let clip = read_y4m_file(input)?;
    let label = run_label(input, options.config.target_kbps);
    let outcome = run_search(
        &clip,
        &options.config,
        options.codec,
        &options.workspace_root,
        &label,
    )?;
    let mut report = Report::from_outcome(
        &input.display().to_string(),
        &options.config,
        options.codec_description.clone(),
        options.seed,
        &outcome,
    );

    if let Some(selected) = outcome.selected {
        // Hooks compare against the same reference the search scored with.
        let (reference, _) = search_reference(&clip, &options.config)?;
        let attempt = &outcome.attempts[selected];
        let hook_root = options.workspace_root.join(&label).join("hooks");

        let mut final_clip = None;
        if let Some(template) = options.postprocess_command {
            let reconstruction = reconstruct_full(attempt, &reference)?;
            let (processed, command_line) = run_postprocess_hook(
                &reconstruction,
                template,
                &hook_root.join("postprocess"),
                options.hook_timeout_seconds,
            )?;
            report.command_lines.push(command_line.clone());
            report.postprocessed = Some(PostprocessRecord {
                command_line,
                metrics: metric_set(&reference, &processed)?,
            });
            final_clip = Some(processed);
        }

        if !options.external_metric_commands.is_empty() {
            // External metrics score the pipeline's final output: the
            // post-processed clip when a hook ran, the reconstruction
            // otherwise.
            let scored = match final_clip {
                Some(clip) => clip,
                None => reconstruct_full(attempt, &reference)?,
            };
            let ref_path = hook_root.join("reference.y4m");
            let dist_path = hook_root.join("distorted.y4m");
            std::fs::create_dir_all(&hook_root)?;
            write_y4m_file(&reference, &ref_path)?;
            write_y4m_file(&scored, &dist_path)?;
            for hook in options.external_metric_commands {
                let (value, command_line) = run_metric_hook(
                    hook,
                    &ref_path,
                    &dist_path,
                    &hook_root.join(&hook.name),
                    options.hook_timeout_seconds,
                )?;
                report.command_lines.push(command_line);
                report.external_metrics.insert(hook.name.clone(), value);
            }
        }
    }

    Ok(report)
}

/// Writes the clip as Y4M, invokes the hook command and reads back a clip of
/// identical geometry.
pub fn run_postprocess_hook(
    clip: &VideoClip,
    template: &str,
    workspace: &Path,
    timeout_seconds: u64,
) -> Result<(VideoClip, String), PipelineError> {
    codec::validate_template(template, &["input", "output"])
        .map_err(|e| PipelineError::Config(format!("postprocess command: {e}")))?;
    std::fs::create_dir_all(workspace)?;
    let input_path = workspace.join("hook_in.y4m");
    let output_path = workspace.join("hook_out.y4m");
    write_y4m_file(clip, &input_path)?;
    let tokens = BTreeMap::from([
        ("input", input_path.display().to_string()),
        ("output", output_path.display().to_string()),
    ]);
    let argv = codec::render_command(template, &tokens)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let command_line = argv.join(" ");
    crate::codec::run_command_logged(&argv, workspace, "hook", timeout_seconds)?;
    let processed = read_y4m_file(&output_path)?;
    if !processed.same_geometry(clip) {
        return Err(PipelineError::HookGeometry {
            expected: clip.geometry_string(),
            actual: processed.geometry_string(),
        });
    }
    Ok((processed, command_line))
}

/// Runs one metric hook over a reference/distorted pair already on disk.
fn run_metric_hook(
    hook: &MetricHook,
    ref_path: &Path,
    dist_path: &Path,
    workspace: &Path,
    timeout_seconds: u64,
) -> Result<(f64, String), PipelineError> {
    std::fs::create_dir_all(workspace)?;
    let tokens = BTreeMap::from([
        ("ref", ref_path.display().to_string()),
        ("dist", dist_path.display().to_string()),
    ]);
    let argv = codec::render_command(&hook.template, &tokens)
        .map_err(|e| PipelineError::Config(format!("metric hook {}: {e}", hook.name)))?;
    let command_line = argv.join(" ");
    crate::codec::run_command_logged(&argv, workspace, "metric", timeout_seconds)?;
    let stdout = std::fs::read_to_string(workspace.join("metric.stdout.log"))?;
    let value = stdout
        .trim()
        .parse::<f64>()
        .map_err(|_| PipelineError::HookOutput {
            name: hook.name.clone(),
            output: stdout.trim().to_string(),
        })?;
    Ok((value, command_line))
}

/// Outcome of a whole batch: the report, scatter rows and where files went.
pub struct BatchOutcome {
    pub report: BatchReport,
    pub rows: Vec<ScatterRow>,
    pub report_path: PathBuf,
    pub csv_path: Option<PathBuf>,
}

impl BatchOutcome {
    pub fn all_feasible(&self) -> bool {
        self.report
            .entries
            .iter()
            .all(|e| e.feasible && e.error.is_none())
    }
}

/// Runs every (clip, target) pair, isolating per-clip failures, then writes
/// per-run reports, the batch report and the scatter CSV.
pub fn run_batch(config: &BatchConfig) -> Result<BatchOutcome, PipelineError> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;
    let workspace = workspace_root();

    let pairs: Vec<(PathBuf, f64)> = config
        .clips
        .iter()
        .flat_map(|clip| config.targets_kbps.iter().map(move |&t| (clip.clone(), t)))
        .collect();

    let workers = config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;

    let results: Vec<(ScatterRow, BatchEntry)> = pool.install(|| {
        pairs
            .par_iter()
            .map(|(input, target)| run_batch_entry(config, &workspace, input, *target))
            .collect()
    });

    let (rows, entries): (Vec<ScatterRow>, Vec<BatchEntry>) = results.into_iter().unzip();
    let aggregates = aggregate_rows(&rows);
    let report = BatchReport::new(entries, aggregates);

    let report_path = config.output_dir.join("batch_report.json");
    std::fs::write(&report_path, report.to_json()? + "\n")?;
    let csv_path = match &config.csv {
        Some(path) => Some(path.clone()),
        None => Some(config.output_dir.join("scatter.csv")),
    };
    if let Some(path) = &csv_path {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = std::fs::File::create(path)?;
        write_scatter_csv(&rows, file)?;
    }

    Ok(BatchOutcome {
        report,
        rows,
        report_path,
        csv_path,
    })
}

fn run_batch_entry(
    config: &BatchConfig,
    workspace: &Path,
    input: &Path,
    target: f64,
) -> (ScatterRow, BatchEntry) {
    let seed = derive_entry_seed(config.seed, input, target);
    let choice = config.codec.with_seed(seed);
    let codec = choice.build();
    let options = RunOptions {
        config: config.search_config(target),
        codec: codec.as_ref(),
        codec_description: codec.describe(),
        seed: Some(seed),
        postprocess_command: config.postprocess_command.as_deref(),
        external_metric_commands: &config.external_metric_commands,
        workspace_root: workspace.to_path_buf(),
        hook_timeout_seconds: config.hook_timeout_seconds,
    };
    match run_clip(input, &options) {
        Ok(report) => {
            let report_path = config
                .output_dir
                .join(format!("{}.report.json", run_label(input, target)));
            let write_result = report.write_file(&report_path);
            let mut entry = BatchEntry {
                clip: input.display().to_string(),
                target_kbps: target,
                feasible: report.feasible,
                achieved_kbps: report.selected_summary.as_ref().map(|s| s.achieved_kbps),
                report_path: Some(report_path.display().to_string()),
                error: None,
            };
            if let Err(e) = write_result {
                entry.error = Some(e.to_string());
            }
            (ScatterRow::from_report(&report), entry)
        }
        Err(e) => (
            ScatterRow {
                clip: input.display().to_string(),
                target_kbps: target,
                achieved_kbps: None,
                psnr_y: None,
                psnr_hvs: None,
                feasible: false,
            },
            BatchEntry {
                clip: input.display().to_string(),
                target_kbps: target,
                feasible: false,
                achieved_kbps: None,
                report_path: None,
                error: Some(e.to_string()),
            },
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn labels_and_seeds_are_stable() {
        assert_eq!(run_label(Path::new("/tmp/city.y4m"), 50.0), "city_t50");
        assert_eq!(run_label(Path::new("clip.y4m"), 37.5), "clip_t37.5");
        let a = derive_entry_seed(1, Path::new("a.y4m"), 50.0);
        let b = derive_entry_seed(1, Path::new("b.y4m"), 50.0);
        let a2 = derive_entry_seed(1, Path::new("a.y4m"), 50.0);
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }

    #[test]
    fn job_validation_catches_bad_hooks_at_load_time() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.y4m");
        crate::y4m::write_y4m_file(
            &synthetic::gradient_clip(16, 16, 2, (30, 1)),
            &input,
        )
        .unwrap();
        let mut job = Job {
            input,
            targets_kbps: vec![50.0],
            output_dir: dir.path().to_path_buf(),
            postprocess_command: Some("tool {input}".into()),
            external_metric_commands: vec![],
        };
        // missing {output} placeholder is a configuration error
        let err = job.validate().unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)), "{err}");
        job.postprocess_command = Some("tool {input} {output}".into());
        job.validate().unwrap();
    }

    #[test]
    fn identity_postprocess_hook_preserves_metrics() {
        let dir = tempfile::tempdir().unwrap();
        let clip = synthetic::gradient_clip(32, 32, 3, (30, 1));
        let (processed, command_line) =
            run_postprocess_hook(&clip, "cp {input} {output}", dir.path(), 30).unwrap();
        assert_eq!(processed, clip);
        assert!(command_line.starts_with("cp "));
    }

    #[test]
    fn hook_geometry_violation_is_reported() {
        use std::io::Write;
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        // hook ignores its input and emits a structurally valid stream with
        // the wrong frame count
        let small = synthetic::gradient_clip(32, 32, 1, (30, 1));
        let small_path = dir.path().join("small.y4m");
        crate::y4m::write_y4m_file(&small, &small_path).unwrap();
        let stub = dir.path().join("bad-hook");
        let mut file = std::fs::File::create(&stub).unwrap();
        writeln!(file, "#!/bin/sh\ncp {} \"$2\"", small_path.display()).unwrap();
        let mut perms = file.metadata().unwrap().permissions();
        perms.set_mode(0o755);
        std::fs::set_permissions(&stub, perms).unwrap();
        drop(file);

        let clip = synthetic::gradient_clip(32, 32, 3, (30, 1));
        let template = format!("{} {{input}} {{output}}", stub.display());
        let err = run_postprocess_hook(&clip, &template, dir.path(), 30).unwrap_err();
        match err {
            PipelineError::HookGeometry { expected, actual } => {
                assert!(expected.contains("3 frames"), "{expected}");
                assert!(actual.contains("1 frames"), "{actual}");
            }
            other => panic!("unexpected error {other}"),
        }
    }
}
