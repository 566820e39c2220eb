//! Row-by-row comparison of two result files.

use crate::error::{CliError, Result};
use crate::output::{Row, SweepResult};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Multiple of the combined standard error added to the allowance.
    pub sigma: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 0.0,
            rel: 0.0,
            sigma: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowDelta {
    pub p_dbm: Option<f64>,
    pub n: String,
    pub metric: String,
    pub a: f64,
    pub b: f64,
    pub abs_delta: f64,
    pub rel_delta: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub deltas: Vec<RowDelta>,
    /// Keys present in only one of the files.
    pub unmatched: usize,
}

impl CompareReport {
    pub fn pass(&self) -> bool {
        self.deltas.iter().all(|d| d.pass)
    }

    pub fn failures(&self) -> usize {
        self.deltas.iter().filter(|d| !d.pass).count()
    }

    pub fn max_abs_delta(&self) -> f64 {
        self.deltas.iter().map(|d| d.abs_delta).fold(0.0, f64::max)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("P_dbm,N,metric,a,b,abs_delta,rel_delta,allowed,status\n");
        for d in &self.deltas {
            out += &format!(
                "{},{},{},{:?},{:?},{:e},{:e},{:e},{}\n",
                d.p_dbm.map(|p| format!("{p:?}")).unwrap_or_default(),
                d.n,
                d.metric,
                d.a,
                d.b,
                d.abs_delta,
                d.rel_delta,
                d.allowed,
                if d.pass { "pass" } else { "FAIL" }
            );
        }
        out += &format!(
            "# {} rows compared, {} failed, {} unmatched, max |delta| {:e}: {}\n",
            self.deltas.len(),
            self.failures(),
            self.unmatched,
            self.max_abs_delta(),
            if self.pass() { "PASS" } else { "FAIL" }
        );
        out
    }
}

fn delta(a: &Row, b: &Row, tol: &Tolerance) -> RowDelta {
    let abs_delta = if a.value == b.value { 0.0 } else { (a.value - b.value).abs() };
    let rel_delta = if abs_delta == 0.0 { 0.0 } else { abs_delta / a.value.abs().max(b.value.abs()) };
    let se = a.std_error.unwrap_or(0.0).hypot(b.std_error.unwrap_or(0.0));
    let allowed = tol.abs + tol.rel * a.value.abs() + tol.sigma * se;
    RowDelta {
        p_dbm: a.p_dbm,
        n: a.n.clone(),
        metric: a.metric.clone(),
        a: a.value,
        b: b.value,
        abs_delta,
        rel_delta,
        allowed,
        pass: abs_delta <= allowed,
    }
}

/// Joins on `(P_dbm, N, metric)`. Fails when the files share no key.
pub fn compare(a: &SweepResult, b: &SweepResult, tol: &Tolerance) -> Result<CompareReport> {
    let index: HashMap<_, &Row> = b.rows.iter().map(|r| (r.key(), r)).collect();
    let deltas: Vec<RowDelta> = a
        .rows
        .iter()
        .filter_map(|ra| index.get(&ra.key()).map(|rb| delta(ra, rb, tol)))
        .collect();
    if deltas.is_empty() {
        return Err(CliError::Compare("the two results share no (P_dbm, N, metric) rows".into()));
    }
    let unmatched = a.rows.len() + b.rows.len() - 2 * deltas.len();
    Ok(CompareReport { deltas, unmatched })
}
