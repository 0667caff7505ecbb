//! Analysis search-space counting: `questions = causes * outcomes * 2^covariates`.
//!
//! CSV input layout: `ref,author,year,outcomes,causes,covariates`. Output
//! appends `tests,models,space`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest covariate count whose model count `2^covariates` fits comfortably in a `u64`.
pub const MAX_COVARIATES: u32 = 62;

const INPUT_COLUMNS: [&str; 6] = ["ref", "author", "year", "outcomes", "causes", "covariates"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpaceEntry {
    #[serde(rename = "ref")]
    pub ref_id: Option<u32>,
    pub author: Option<String>,
    pub year: Option<i32>,
    pub outcomes: u64,
    pub causes: u64,
    pub covariates: u32,
    pub tests: u64,
    pub models: u64,
    pub space: u64,
}

/// Search space for one study; identity fields are left unset.
pub fn search_space(outcomes: u64, causes: u64, covariates: u32) -> Result<SearchSpaceEntry> {
    if covariates > MAX_COVARIATES {
        return Err(Error::Overflow(format!(
            "{covariates} covariates exceeds the limit of {MAX_COVARIATES}"
        )));
    }
    let tests = outcomes
        .checked_mul(causes)
        .ok_or_else(|| Error::Overflow(format!("{outcomes} outcomes x {causes} causes")))?;
    let models = 1u64 << covariates;
    let space = tests
        .checked_mul(models)
        .ok_or_else(|| Error::Overflow(format!("{tests} tests x {models} models")))?;
    Ok(SearchSpaceEntry {
        ref_id: None,
        author: None,
        year: None,
        outcomes,
        causes,
        covariates,
        tests,
        models,
        space,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub count: usize,
    pub median: f64,
    pub min: u64,
    pub max: u64,
}

/// Median (midpoint of the middle pair for even counts), minimum and maximum.
pub fn summarize_spaces(entries: &[SearchSpaceEntry]) -> Result<SpaceSummary> {
    if entries.is_empty() {
        return Err(Error::Domain("cannot summarize an empty list of search spaces".into()));
    }
    let mut spaces: Vec<u64> = entries.iter().map(|e| e.space).collect();
    spaces.sort_unstable();
    let mid = spaces.len() / 2;
    let median = if spaces.len() % 2 == 1 {
        spaces[mid] as f64
    } else {
        // halve before adding so the sum cannot overflow
        let (a, b) = (spaces[mid - 1], spaces[mid]);
        (a / 2 + b / 2) as f64 + ((a % 2 + b % 2) as f64) / 2.0
    };
    Ok(SpaceSummary {
        count: spaces.len(),
        median,
        min: spaces[0],
        max: spaces[spaces.len() - 1],
    })
}

/// Parses the counting CSV and computes each row's search space.
pub fn parse_counts(csv_text: &str) -> Result<Vec<SearchSpaceEntry>> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .clone();
    let mut cols = [0usize; 6];
    for (slot, name) in cols.iter_mut().zip(INPUT_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let mut out = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| rec.get(cols[i]).unwrap_or("").trim();
        let parse_err = |i: usize| Error::Parse {
            row,
            line,
            field: INPUT_COLUMNS[i].to_string(),
            message: format!("malformed nonnegative integer `{}`", field(i)),
        };
        let ref_id: u32 = field(0).parse().map_err(|_| parse_err(0))?;
        let year: i32 = field(2).parse().map_err(|_| parse_err(2))?;
        let outcomes: u64 = field(3).parse().map_err(|_| parse_err(3))?;
        let causes: u64 = field(4).parse().map_err(|_| parse_err(4))?;
        let covariates: u32 = field(5).parse().map_err(|_| parse_err(5))?;
        let mut entry = search_space(outcomes, causes, covariates).map_err(|e| Error::Parse {
            row,
            line,
            field: "covariates".into(),
            message: e.to_string(),
        })?;
        entry.ref_id = Some(ref_id);
        entry.author = Some(rec.get(cols[1]).unwrap_or("").to_string());
        entry.year = Some(year);
        out.push(entry);
    }
    Ok(out)
}

/// Writes entries with the computed `tests,models,space` columns appended.
pub fn counts_to_csv(entries: &[SearchSpaceEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(INPUT_COLUMNS.iter().chain(&["tests", "models", "space"]))
        .expect("in-memory write");
    for e in entries {
        w.write_record([
            e.ref_id.map(|v| v.to_string()).unwrap_or_default(),
            e.author.clone().unwrap_or_default(),
            e.year.map(|v| v.to_string()).unwrap_or_default(),
            e.outcomes.to_string(),
            e.causes.to_string(),
            e.covariates.to_string(),
            e.tests.to_string(),
            e.models.to_string(),
            e.space.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}
