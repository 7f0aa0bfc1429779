//! Machine-readable reporting: one JSON report per clip/target pair, a batch
//! summary with achieved-rate statistics, and a flat CSV of scatter rows for
//! plotting.
//!
//! Reports round-trip losslessly through their JSON serialization. The
//! `created_unix` stamp is the only field expected to differ between
//! identical runs; comparisons for reproducibility should exclude it.

use crate::metrics::MetricSet;
use crate::search::{CropInfo, ScaleAbort, SearchConfig, SearchOutcome};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Echo of the inputs a report was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobEcho {
    pub input: String,
    pub target_kbps: f64,
    pub codec: String,
    pub max_steps: u32,
    pub spatial_factors: Vec<u32>,
    pub max_temporal_halvings: u32,
    pub feasibility_slack: f64,
    pub early_exit: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

/// Serialized form of one [`crate::search::EncodeAttempt`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub spatial_factor: u32,
    pub temporal_factor: u32,
    pub step: u32,
    pub requested_kbps: f64,
    pub achieved_kbps: f64,
    pub bitstream_bytes: u64,
    pub metrics: MetricSet,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decoded_path: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub command_lines: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedSummary {
    pub spatial_factor: u32,
    pub temporal_factor: u32,
    pub requested_kbps: f64,
    pub achieved_kbps: f64,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostprocessRecord {
    pub command_line: String,
    pub metrics: MetricSet,
}

/// Full per-clip, per-target report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_name: String,
    pub tool_version: String,
    /// Wall-clock stamp; excluded from reproducibility comparisons.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub created_unix: Option<u64>,
    pub job: JobEcho,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub crop: Option<CropInfo>,
    pub attempts: Vec<AttemptRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub selected: Option<usize>,
    pub feasible: bool,
    pub temporal_factor_used: u32,
    pub total_encoder_invocations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub aborts: Vec<ScaleAbort>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub selected_summary: Option<SelectedSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub postprocessed: Option<PostprocessRecord>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub external_metrics: BTreeMap<String, f64>,
    /// Every external command line executed during the run, verbatim.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub command_lines: Vec<String>,
}

impl Report {
    /// Builds the report skeleton from a finished search; hook results are
    /// attached by the pipeline afterwards.
    pub fn from_outcome(
        input: &str,
        config: &SearchConfig,
        codec_description: String,
        seed: Option<u64>,
        outcome: &SearchOutcome,
    ) -> Report {
        let attempts: Vec<AttemptRecord> = outcome
            .attempts
            .iter()
            .map(|a| AttemptRecord {
                spatial_factor: a.spatial_factor,
                temporal_factor: a.temporal_factor,
                step: a.step,
                requested_kbps: a.requested_kbps,
                achieved_kbps: a.achieved_kbps,
                bitstream_bytes: a.bitstream_bytes,
                metrics: a.metrics,
                decoded_path: a.decoded.path().map(|p| p.display().to_string()),
                command_lines: a.command_lines.clone(),
            })
            .collect();
        let selected_summary = outcome.selected.map(|i| {
            let a = &outcome.attempts[i];
            SelectedSummary {
                spatial_factor: a.spatial_factor,
                temporal_factor: a.temporal_factor,
                requested_kbps: a.requested_kbps,
                achieved_kbps: a.achieved_kbps,
                metrics: a.metrics,
            }
        });
        let command_lines = attempts
            .iter()
            .flat_map(|a| a.command_lines.iter().cloned())
            .collect();
        Report {
            schema_version: SCHEMA_VERSION,
            tool_name: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: now_unix(),
            job: JobEcho {
                input: input.to_string(),
                target_kbps: config.target_kbps,
                codec: codec_description,
                max_steps: config.max_steps,
                spatial_factors: config.spatial_factors.clone(),
                max_temporal_halvings: config.max_temporal_halvings,
                feasibility_slack: config.feasibility_slack,
                early_exit: config.early_exit,
                seed,
            },
            crop: outcome.crop,
            attempts,
            selected: outcome.selected,
            feasible: outcome.feasible,
            temporal_factor_used: outcome.temporal_factor_used,
            total_encoder_invocations: outcome.total_encoder_invocations,
            aborts: outcome.aborts.clone(),
            selected_summary,
            postprocessed: None,
            external_metrics: BTreeMap::new(),
            command_lines,
        }
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Report, ReportError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<(), ReportError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_json()?.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

fn now_unix() -> Option<u64> {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

/// One scatter row: the selected representation of a clip at one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub clip: String,
    pub target_kbps: f64,
    /// Achieved rate of the selection; absent when infeasible.
    pub achieved_kbps: Option<f64>,
    pub psnr_y: Option<f64>,
    pub psnr_hvs: Option<f64>,
    pub feasible: bool,
}

impl ScatterRow {
    pub fn from_report(report: &Report) -> ScatterRow {
        ScatterRow {
            clip: report.job.input.clone(),
            target_kbps: report.job.target_kbps,
            achieved_kbps: report.selected_summary.as_ref().map(|s| s.achieved_kbps),
            psnr_y: report.selected_summary.as_ref().map(|s| s.metrics.psnr_y),
            psnr_hvs: report.selected_summary.as_ref().map(|s| s.metrics.psnr_hvs),
            feasible: report.feasible,
        }
    }
}

/// Writes scatter rows as CSV with a header line.
pub fn write_scatter_csv<W: std::io::Write>(
    rows: &[ScatterRow],
    writer: W,
) -> Result<(), ReportError> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Mean and population standard deviation of selected achieved rates for one
/// target across a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub target_kbps: f64,
    pub clip_count: usize,
    pub feasible_count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_achieved_kbps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stddev_achieved_kbps: Option<f64>,
}

/// Aggregates scatter rows by target.
pub fn aggregate_rows(rows: &[ScatterRow]) -> Vec<AggregateRecord> {
    let mut targets: Vec<f64> = rows.iter().map(|r| r.target_kbps).collect();
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup();
    targets
        .into_iter()
        .map(|target| {
            let group: Vec<&ScatterRow> =
                rows.iter().filter(|r| r.target_kbps == target).collect();
            let rates: Vec<f64> = group.iter().filter_map(|r| r.achieved_kbps).collect();
            let (mean, stddev) = if rates.is_empty() {
                (None, None)
            } else {
                let mean = rates.iter().sum::<f64>() / rates.len() as f64;
                let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
                    / rates.len() as f64;
                (Some(mean), Some(var.sqrt()))
            };
            AggregateRecord {
                target_kbps: target,
                clip_count: group.len(),
                feasible_count: group.iter().filter(|r| r.feasible).count(),
                mean_achieved_kbps: mean,
                stddev_achieved_kbps: stddev,
            }
        })
        .collect()
}

/// Batch-level report: per-entry outcomes plus per-target aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub schema_version: u32,
    pub tool_name: String,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub created_unix: Option<u64>,
    pub entries: Vec<BatchEntry>,
    pub aggregates: Vec<AggregateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub clip: String,
    pub target_kbps: f64,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub achieved_kbps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report_path: Option<String>,
    /// Per-clip failures are isolated here; the batch continues.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl BatchReport {
    pub fn new(entries: Vec<BatchEntry>, aggregates: Vec<AggregateRecord>) -> BatchReport {
        BatchReport {
            schema_version: SCHEMA_VERSION,
            tool_name: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: now_unix(),
            entries,
            aggregates,
        }
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
