//! Result rows and their CSV/JSON serialization.

use crate::config::Format;
use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::path::Path;

/// Fixed column order of every result file.
pub const COLUMNS: [&str; 7] = ["P_dbm", "N", "metric", "value", "std_error", "seed", "config_hash"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    #[serde(rename = "P_dbm")]
    pub p_dbm: Option<f64>,
    #[serde(rename = "N")]
    pub n: String,
    pub metric: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
}

impl Row {
    /// Join key used by `compare`.
    pub fn key(&self) -> (Option<u64>, String, String) {
        (self.p_dbm.map(f64::to_bits), self.n.clone(), self.metric.clone())
    }
}

fn n_order(n: &str) -> (u8, u64, &str) {
    match n.parse::<u64>() {
        Ok(v) => (0, v, ""),
        Err(_) => (1, 0, n),
    }
}

/// Canonical row order: metric, then N (numeric first), then power.
pub fn canonical_order(a: &Row, b: &Row) -> Ordering {
    a.metric
        .cmp(&b.metric)
        .then_with(|| n_order(&a.n).cmp(&n_order(&b.n)))
        .then_with(|| match (a.p_dbm, b.p_dbm) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (x, y) => x.is_some().cmp(&y.is_some()),
        })
}

/// Rows of one run, sorted canonically.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<Row>,
}

impl SweepResult {
    pub fn new(mut rows: Vec<Row>) -> Self {
        rows.sort_by(canonical_order);
        Self { rows }
    }

    pub fn get(&self, metric: &str, n: &str, p_dbm: Option<f64>) -> Option<&Row> {
        self.rows.iter().find(|r| r.metric == metric && r.n == n && r.p_dbm == p_dbm)
    }

    pub fn metric<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.p_dbm.map(fmt_f64).unwrap_or_default(),
                r.n.clone(),
                r.metric.clone(),
                fmt_f64(r.value),
                r.std_error.map(fmt_f64).unwrap_or_default(),
                r.seed.to_string(),
                r.config_hash.clone(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io {
            path: "<csv buffer>".into(),
            source: e.into_error(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rows)? + "\n")
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv_string(),
            Format::Json => self.to_json_string(),
        }
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<()> {
        let text = self.render(format)?;
        std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
        if header != COLUMNS {
            return Err(CliError::Compare(format!("unexpected columns {header:?}, want {COLUMNS:?}")));
        }
        let rows = r.deserialize().collect::<std::result::Result<Vec<Row>, _>>()?;
        Ok(Self { rows })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let rows = value
            .as_array()
            .ok_or_else(|| CliError::Compare("json result must be an array of rows".into()))?;
        for row in rows {
            let keys: Vec<&str> = row.as_object().map(|o| o.keys().map(String::as_str).collect()).unwrap_or_default();
            if keys.len() != COLUMNS.len() || COLUMNS.iter().any(|c| !keys.contains(c)) {
                return Err(CliError::Compare(format!("row fields {keys:?} do not match {COLUMNS:?}")));
            }
        }
        Ok(Self {
            rows: serde_json::from_value(value)?,
        })
    }

    /// Reads a result file, picking the parser from the extension (json) or content.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('[');
        if json {
            Self::from_json_str(&text)
        } else {
            Self::from_csv_str(&text)
        }
    }
}

/// Shortest representation that round-trips.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
