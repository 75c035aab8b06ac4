//! Figure data: one row per dumped point, as CSV and as a JSON mirror.

use crate::{CliError, Result};
use nearherm::experiments::DumpPoint;
use serde::Serialize;
use std::path::Path;

pub const CSV_HEADER: [&str; 5] = ["trial", "index", "re", "im", "kind"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub trial: u64,
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub kind: &'static str,
}

/// Rows ordered by trial, then index; ties keep dump order.
pub fn rows(dump: &[DumpPoint]) -> Vec<Row> {
    let mut rows: Vec<Row> = dump
        .iter()
        .map(|p| Row { trial: p.trial, index: p.index, re: p.re, im: p.im, kind: p.kind.name() })
        .collect();
    rows.sort_by_key(|r| (r.trial, r.index));
    rows
}

/// 17 significant digits, enough to recover every `f64` exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_string(dump: &[DumpPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_cli = |e: csv::Error| CliError::Config(format!("csv encoding: {e}"));
    w.write_record(CSV_HEADER).map_err(to_cli)?;
    for r in rows(dump) {
        w.write_record([r.trial.to_string(), r.index.to_string(), format_f64(r.re), format_f64(r.im), r.kind.to_string()])
            .map_err(to_cli)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn json_string(dump: &[DumpPoint]) -> String {
    let mut s = serde_json::to_string_pretty(&rows(dump)).expect("rows serialize");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
