//! The audit report: one JSON document holding every per-study statistic,
//! the shape verdict, the outlier flags, the pooled estimate, and the
//! configuration needed to reproduce them.

use serde::{Deserialize, Serialize};

use pvaudit::counting::{SearchSpaceEntry, SpaceSummary};
use pvaudit::diagnostics::{OutlierReport, ShapeRules, ShapeVerdict};
use pvaudit::stats::{PoolResult, Scale};

use crate::numfmt;

pub const TOOL: &str = "pvaudit";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub profile: String,
    pub confidence_level: f64,
    pub critical_value: f64,
    pub scale: Scale,
    pub p_threshold: f64,
    /// `None` disables the influence rule.
    pub influence_threshold: Option<f64>,
    pub manual_rows: Vec<usize>,
    pub shape_rules: ShapeRules,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub row: usize,
    pub author: String,
    pub year: i32,
    pub comment: Option<String>,
    #[serde(rename = "ref")]
    pub ref_id: u32,
    pub rr: f64,
    pub cl_low: f64,
    pub cl_high: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
    pub rank: usize,
    pub p_floored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpaceSection {
    pub entries: Vec<SearchSpaceEntry>,
    pub summary: SpaceSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub tool: String,
    pub version: String,
    pub label: String,
    pub config: AuditConfig,
    pub studies: Vec<StudyRow>,
    pub shape: ShapeVerdict,
    pub outliers: OutlierReport,
    /// Absent with fewer than two studies.
    pub pool: Option<PoolResult>,
    pub search_space: Option<SearchSpaceSection>,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        numfmt::to_json(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
