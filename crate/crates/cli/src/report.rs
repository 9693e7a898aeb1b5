//! Report schema and its JSON / CSV encodings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sqhn_core::{ForgettingCurve, MetricSeries};

use crate::config::{ExperimentConfig, Task};
use crate::error::Result;

/// One trained model (or baseline) and its evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub series: MetricSeries,
    pub cumulative_mse: f64,
    pub cumulative_accuracy: f64,
    /// Mean grown neurons per node, by layer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub growth_per_layer: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u64>,
}

impl RunReport {
    pub fn new(label: impl Into<String>, series: MetricSeries) -> Self {
        Self {
            label: label.into(),
            cumulative_mse: series.cumulative_mse(),
            cumulative_accuracy: series.cumulative_accuracy(),
            series,
            growth_per_layer: Vec::new(),
            extra: BTreeMap::new(),
            wall_clock_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: Option<String>,
    pub task: Task,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunReport>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub summary: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forgetting: Option<ForgettingCurve>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u64>,
}

impl ExperimentReport {
    pub fn run(&self, label: &str) -> Option<&RunReport> {
        self.runs.iter().find(|r| r.label == label)
    }

    /// Drop every wall-clock field so repeated runs compare byte for byte.
    pub fn strip_timing(&mut self) {
        self.wall_clock_ms = None;
        for r in &mut self.runs {
            r.wall_clock_ms = None;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per run per evaluation point.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "run",
            "iteration",
            "recall_mse",
            "recall_accuracy",
            "cumulative_mse",
            "cumulative_accuracy",
            "recognition_accuracy",
        ])?;
        for run in &self.runs {
            let s = &run.series;
            let cm = s.running_mse();
            let ca = s.running_accuracy();
            for i in 0..s.len() {
                let rec = s
                    .recognition_accuracy
                    .get(i)
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                w.write_record([
                    run.label.clone(),
                    s.iterations[i].to_string(),
                    s.recall_mse[i].to_string(),
                    s.recall_accuracy[i].to_string(),
                    cm[i].to_string(),
                    ca[i].to_string(),
                    rec,
                ])?;
            }
        }
        let bytes = w
            .into_inner()
            .map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
