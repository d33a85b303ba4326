//! Machine-readable run reports (one JSON document per run).

use std::time::Duration;

use quickshift_core::{ModeSet, StageTimings};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LshEcho {
    pub tables: usize,
    pub concat: usize,
    pub bucket_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub bandwidth: f64,
    pub c: f64,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub estimator: String,
    pub exact: bool,
    pub seed: u64,
    /// Absent for `--exact` runs, which use no index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsh: Option<LshEcho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub id: usize,
    pub density: f64,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub build_ms: f64,
    pub kde_ms: f64,
    pub graph_ms: f64,
    pub label_ms: f64,
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl From<&StageTimings> for Timings {
    fn from(t: &StageTimings) -> Self {
        Self {
            build_ms: millis(t.build),
            kde_ms: millis(t.kde),
            graph_ms: millis(t.graph),
            label_ms: millis(t.label),
        }
    }
}

impl Timings {
    pub fn total_ms(&self) -> f64 {
        self.build_ms + self.kde_ms + self.graph_ms + self.label_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub bandwidth: f64,
    pub num_clusters: usize,
    pub ari: f64,
    pub ami: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub points: Vec<SweepPoint>,
    pub best_ari: SweepPoint,
    pub best_ami: SweepPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub params: ParamsEcho,
    pub n: usize,
    pub d: usize,
    pub num_clusters: usize,
    /// Roots by descending density.
    pub modes: Vec<ModeEntry>,
    pub timings: Timings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ari: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ami: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSummary>,
}

pub fn mode_entries(modes: &ModeSet) -> Vec<ModeEntry> {
    modes
        .order_by_density()
        .into_iter()
        .map(|m| ModeEntry {
            id: modes.ids[m],
            density: modes.densities[m],
            coords: modes.coords[m].clone(),
        })
        .collect()
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report fields are always serialisable");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Input {
            path: "report".into(),
            message: e.to_string(),
        })
    }

    /// Copy with every timing zeroed, for run-to-run comparison.
    pub fn masked(&self) -> Self {
        Self {
            timings: Timings::default(),
            ..self.clone()
        }
    }
}
