//! Study records, datasets, and their CSV/JSON interchange forms.
//!
//! CSV layout (UTF-8, comma separated, header row):
//!
//! ```text
//! author,year,comment,ref,rr,cl_low,cl_high
//! Bakhit,1994,cotyledon,15,1.0098,0.9497,1.0699
//! ```
//!
//! `comment` may be omitted from the header or left empty. Row indices used
//! throughout the crate are zero-based positions among the data rows.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Confidence level assumed when a source does not state one.
pub const DEFAULT_CONFIDENCE_LEVEL: f64 = 0.95;

pub const CSV_COLUMNS: [&str; 7] = ["author", "year", "comment", "ref", "rr", "cl_low", "cl_high"];
const REQUIRED_COLUMNS: [&str; 6] = ["author", "year", "ref", "rr", "cl_low", "cl_high"];

/// One study arm: identity plus a ratio estimate with its confidence limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub author: String,
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    #[serde(rename = "ref")]
    pub ref_id: u32,
    pub rr: f64,
    pub cl_low: f64,
    pub cl_high: f64,
}

/// Per-study statistics derived from a [`StudyRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedStats {
    pub se: f64,
    pub z: f64,
    pub p: f64,
    /// 1-based ascending rank of `p` within its dataset; `None` until ranked.
    #[serde(default)]
    pub rank: Option<usize>,
    /// Set when the true tail probability underflowed and `p` was raised to
    /// the smallest positive `f64`.
    #[serde(default)]
    pub p_floored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub label: String,
    #[serde(default = "default_confidence_level")]
    pub confidence_level: f64,
    pub records: Vec<StudyRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<Vec<DerivedStats>>,
}

fn default_confidence_level() -> f64 {
    DEFAULT_CONFIDENCE_LEVEL
}

/// A broken record invariant. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub row: usize,
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}: {}", self.row, self.field, self.rule)
    }
}

impl StudyRecord {
    /// Checks the record invariants `0 < cl_low <= rr <= cl_high` and
    /// `cl_low < cl_high`, returning `(field, rule)` pairs.
    pub fn check(&self) -> Vec<(&'static str, &'static str)> {
        let mut out = Vec::new();
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rr) {
            out.push(("rr", "rr must be positive"));
        }
        if !positive(self.cl_low) {
            out.push(("cl_low", "cl_low must be positive"));
        }
        if !positive(self.cl_high) {
            out.push(("cl_high", "cl_high must be positive"));
        }
        if !out.is_empty() {
            return out;
        }
        if self.cl_low > self.rr {
            out.push(("cl_low", "cl_low exceeds rr"));
        }
        if self.rr > self.cl_high {
            out.push(("cl_high", "rr exceeds cl_high"));
        }
        if self.cl_low == self.cl_high {
            out.push(("cl_high", "zero-width confidence interval"));
        }
        out
    }

    /// Short human-readable label such as `Bakhit 1994 (cotyledon)`.
    pub fn display_label(&self) -> String {
        match &self.comment {
            Some(c) => format!("{} {} ({})", self.author, self.year, c),
            None => format!("{} {}", self.author, self.year),
        }
    }
}

impl Dataset {
    pub fn new(label: impl Into<String>, records: Vec<StudyRecord>) -> Self {
        Dataset {
            label: label.into(),
            confidence_level: DEFAULT_CONFIDENCE_LEVEL,
            records,
            derived: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Derived statistics, or a state error if they have not been computed.
    pub fn derived(&self) -> Result<&[DerivedStats]> {
        match &self.derived {
            Some(d) if d.len() == self.records.len() => Ok(d),
            Some(_) => Err(Error::State(
                "derived statistics do not match the record count".into(),
            )),
            None => Err(Error::State("derived statistics have not been computed".into())),
        }
    }

    /// Derived statistics with ranks, or a state error.
    pub fn ranked(&self) -> Result<&[DerivedStats]> {
        let d = self.derived()?;
        if d.iter().any(|s| s.rank.is_none()) {
            return Err(Error::State("p-values have not been ranked".into()));
        }
        Ok(d)
    }

    /// Record indices in ascending rank order.
    pub fn rank_order(&self) -> Result<Vec<usize>> {
        let d = self.ranked()?;
        let mut idx: Vec<usize> = (0..d.len()).collect();
        idx.sort_by_key(|&i| d[i].rank);
        Ok(idx)
    }

    /// Indices of records whose `ref` id is in `refs`, in row order.
    pub fn rows_with_refs(&self, refs: &[u32]) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| refs.contains(&r.ref_id))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ds: Dataset = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if !(ds.confidence_level > 0.0 && ds.confidence_level < 1.0) {
            return Err(Error::Domain(format!(
                "confidence_level {} outside (0, 1)",
                ds.confidence_level
            )));
        }
        if let Some(v) = validate_dataset(&ds).into_iter().next() {
            return Err(Error::Parse {
                row: v.row,
                line: 0,
                field: v.field,
                message: v.rule,
            });
        }
        Ok(ds)
    }

    /// Writes the records in the canonical CSV layout.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.records {
            w.write_record(record_fields(r)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }
}

/// The CSV cells of one record, in [`CSV_COLUMNS`] order.
pub fn record_fields(r: &StudyRecord) -> [String; 7] {
    [
        r.author.clone(),
        r.year.to_string(),
        r.comment.clone().unwrap_or_default(),
        r.ref_id.to_string(),
        r.rr.to_string(),
        r.cl_low.to_string(),
        r.cl_high.to_string(),
    ]
}

/// Parses the canonical CSV layout. Column order is free; `comment` is optional.
pub fn parse_dataset(csv_text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(csv_text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    for name in REQUIRED_COLUMNS {
        if column(name).is_none() {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let col = |name: &str| column(name).expect("required column checked");
    let (c_author, c_year, c_ref) = (col("author"), col("year"), col("ref"));
    let (c_rr, c_low, c_high) = (col("rr"), col("cl_low"), col("cl_high"));
    let c_comment = column("comment");

    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let rec = result.map_err(|e| Error::Format(e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let err = |field: &str, message: String| Error::Parse {
            row,
            line,
            field: field.to_string(),
            message,
        };
        let cell = |c: usize| rec.get(c).unwrap_or("");

        let num = |c: usize, field: &str| -> Result<f64> {
            let text = cell(c).trim();
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(field, format!("malformed number `{text}`")))
        };
        let year = cell(c_year)
            .trim()
            .parse::<i32>()
            .map_err(|_| err("year", format!("malformed integer `{}`", cell(c_year))))?;
        let ref_id = cell(c_ref)
            .trim()
            .parse::<u32>()
            .map_err(|_| err("ref", format!("malformed integer `{}`", cell(c_ref))))?;

        let comment = c_comment
            .map(cell)
            .filter(|c| !c.is_empty())
            .map(str::to_string);

        let record = StudyRecord {
            author: cell(c_author).to_string(),
            year,
            comment,
            ref_id,
            rr: num(c_rr, "rr")?,
            cl_low: num(c_low, "cl_low")?,
            cl_high: num(c_high, "cl_high")?,
        };
        if let Some((field, rule)) = record.check().into_iter().next() {
            return Err(err(field, rule.to_string()));
        }
        records.push(record);
    }

    Ok(Dataset::new("dataset", records))
}

/// Lists every broken record invariant; empty iff the dataset is valid.
pub fn validate_dataset(ds: &Dataset) -> Vec<Violation> {
    ds.records
        .iter()
        .enumerate()
        .flat_map(|(row, r)| {
            r.check().into_iter().map(move |(field, rule)| Violation {
                row,
                field: field.to_string(),
                rule: rule.to_string(),
            })
        })
        .collect()
}
