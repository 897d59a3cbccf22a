//! The persisted result of evaluating one dataset under one protocol.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{dataset_means, g_score, DatasetMeans, GScore, MaskletScore, MetricMode, ObjectEntry, Split};
use crate::protocols::{EvalConfig, Protocol};

pub const REPORT_FORMAT: &str = "pvs-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectReport {
    pub video: String,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    /// First frame where the object is visible; the run starts there.
    pub start_frame: usize,
    pub prompted_frames: Vec<usize>,
    pub clicks: usize,
    pub occluded_frames: Vec<usize>,
    /// Primary score after each interaction round.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation_seconds: Option<f64>,
    pub score: MaskletScore,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectFailure {
    pub video: String,
    pub object: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSummary {
    pub mode: MetricMode,
    pub objects: usize,
    pub failed: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<DatasetMeans>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<GScore>,
    /// Mean IoU over instances (image protocol).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub miou: Option<f64>,
    /// Per-round mean over objects.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rounds: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetReport {
    pub format: String,
    pub tool_version: String,
    pub dataset: String,
    pub protocol: Protocol,
    pub segmenter: String,
    pub segmenter_config: serde_json::Value,
    pub seed: u64,
    pub config: EvalConfig,
    pub summary: ReportSummary,
    pub objects: Vec<ObjectReport>,
    pub failures: Vec<ObjectFailure>,
}

impl DatasetReport {
    /// Sorts objects and failures by `(video, object)` and recomputes the summary.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        dataset: &str,
        protocol: Protocol,
        segmenter: &str,
        segmenter_config: serde_json::Value,
        config: &EvalConfig,
        mut objects: Vec<ObjectReport>,
        mut failures: Vec<ObjectFailure>,
    ) -> Self {
        objects.sort_by(|a, b| (&a.video, &a.object).cmp(&(&b.video, &b.object)));
        failures.sort_by(|a, b| (&a.video, &a.object).cmp(&(&b.video, &b.object)));
        let summary = summarize(protocol, config, &objects, failures.len());
        Self {
            format: REPORT_FORMAT.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset: dataset.to_string(),
            protocol,
            segmenter: segmenter.to_string(),
            segmenter_config,
            seed: config.seed,
            config: config.clone(),
            summary,
            objects,
            failures,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: DatasetReport = serde_json::from_str(text)?;
        if r.format != REPORT_FORMAT {
            return Err(Error::Report(format!("format `{}`, expected `{REPORT_FORMAT}`", r.format)));
        }
        if r.objects.iter().any(|o| o.score.mode != r.config.score.mode) {
            return Err(Error::Report("object scored in a different metric mode than the config".into()));
        }
        Ok(r)
    }

    pub fn primary(&self) -> Option<f64> {
        let m = self.summary.means.as_ref()?;
        Some(m.jf_mean.unwrap_or(m.j_mean))
    }
}

fn summarize(protocol: Protocol, config: &EvalConfig, objects: &[ObjectReport], failed: usize) -> ReportSummary {
    let scores: Vec<&MaskletScore> = objects.iter().map(|o| &o.score).collect();
    let entries: Vec<ObjectEntry<'_>> = objects
        .iter()
        .map(|o| ObjectEntry {
            score: &o.score,
            split: o.split,
            category: o.category.as_deref(),
        })
        .collect();
    let miou = (protocol == Protocol::Image && !objects.is_empty())
        .then(|| objects.iter().map(|o| o.score.j_mean).sum::<f64>() / objects.len() as f64);
    let n_rounds = objects.iter().map(|o| o.rounds.len()).min().unwrap_or(0);
    let rounds = (0..n_rounds)
        .map(|r| objects.iter().map(|o| o.rounds[r]).sum::<f64>() / objects.len() as f64)
        .collect();
    ReportSummary {
        mode: config.score.mode,
        objects: objects.len(),
        failed,
        means: dataset_means(&scores),
        g: g_score(&entries, config.g_averaging),
        miou,
        rounds,
    }
}

/// Dataset means pooled across reports, kept apart by metric mode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    /// Mean of dataset-level J&F over J&F datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jf: Option<SuiteGroup>,
    /// Mean of dataset-level J over J-only datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_only: Option<SuiteGroup>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteGroup {
    pub datasets: Vec<String>,
    pub mean: f64,
}

pub fn suite_summary(reports: &[DatasetReport]) -> SuiteSummary {
    let mut groups: BTreeMap<bool, Vec<(String, f64)>> = BTreeMap::new();
    for r in reports {
        if let Some(p) = r.primary() {
            groups
                .entry(r.config.score.mode == MetricMode::JOnly)
                .or_default()
                .push((r.dataset.clone(), p));
        }
    }
    let group = |members: Option<&Vec<(String, f64)>>| {
        members.map(|m| SuiteGroup {
            datasets: m.iter().map(|(d, _)| d.clone()).collect(),
            mean: m.iter().map(|(_, p)| p).sum::<f64>() / m.len() as f64,
        })
    };
    SuiteSummary {
        jf: group(groups.get(&false)),
        j_only: group(groups.get(&true)),
    }
}
