//! Structured verification reports with deterministic serialization.
//!
//! A report is a kind tag, an echoed parameter map, measurement rows, an
//! aggregate pass flag, the tolerance table in force, and the sign-ledger
//! version its conventions come from. JSON field order is fixed by the
//! struct; maps are sorted; floats render through the shortest round-trip
//! formatter. Identical report values therefore serialize to identical
//! bytes, which the reproducibility checks rely on.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::Path;

/// Version tag of the sign/convention ledger in `docs/SIGN_LEDGER.md`.
/// Bumped whenever an oracle-resolved convention changes meaning.
pub const SIGN_LEDGER_VERSION: &str = "SL-1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: String,
    pub params: BTreeMap<String, Value>,
    pub rows: Vec<BTreeMap<String, Value>>,
    pub pass: bool,
    pub tolerances: BTreeMap<String, Value>,
    pub sign_ledger_version: String,
}

impl Report {
    pub fn new(kind: &str) -> Self {
        Report {
            kind: kind.to_string(),
            params: BTreeMap::new(),
            rows: Vec::new(),
            pass: true,
            tolerances: BTreeMap::new(),
            sign_ledger_version: SIGN_LEDGER_VERSION.to_string(),
        }
    }

    pub fn set_param(&mut self, key: &str, value: Value) -> &mut Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn set_tolerance(&mut self, key: &str, value: f64) -> &mut Self {
        self.tolerances.insert(key.to_string(), json_num(value));
        self
    }

    /// Append a measurement row; a false `row_pass` entry clears the
    /// aggregate flag.
    pub fn push_row(&mut self, row: BTreeMap<String, Value>) {
        if let Some(Value::Bool(false)) = row.get("row_pass") {
            self.pass = false;
        }
        self.rows.push(row);
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// CSV mirror: one line per row, columns the sorted union of row keys.
    pub fn to_csv_string(&self) -> String {
        let mut columns: Vec<&String> = self
            .rows
            .iter()
            .flat_map(|r| r.keys())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        if columns.is_empty() {
            columns = Vec::new();
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(columns.iter().map(|c| c.as_str()))
            .expect("csv header");
        for row in &self.rows {
            let record: Vec<String> = columns
                .iter()
                .map(|c| row.get(*c).map(render_cell).unwrap_or_default())
                .collect();
            w.write_record(&record).expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
    }

    /// Write `{stem}.json` and `{stem}.csv` under `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut json = std::fs::File::create(dir.join(format!("{stem}.json")))?;
        json.write_all(self.to_json_string().as_bytes())?;
        let mut csv = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        csv.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }
}

impl fmt::Display for Report {
    /// Human-readable table: kind, verdict, and aligned row cells.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} [{}] ({} rows, ledger {})",
            self.kind,
            if self.pass { "pass" } else { "FAIL" },
            self.rows.len(),
            self.sign_ledger_version
        )?;
        let columns: Vec<&String> = self
            .rows
            .iter()
            .flat_map(|r| r.keys())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        if columns.is_empty() {
            return Ok(());
        }
        let mut widths: Vec<usize> = columns.iter().map(|c| c.len()).collect();
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| {
                columns
                    .iter()
                    .enumerate()
                    .map(|(idx, c)| {
                        let cell = row.get(*c).map(render_cell).unwrap_or_default();
                        widths[idx] = widths[idx].max(cell.len());
                        cell
                    })
                    .collect()
            })
            .collect();
        let header: Vec<String> = columns
            .iter()
            .enumerate()
            .map(|(idx, c)| format!("{:>w$}", c, w = widths[idx]))
            .collect();
        writeln!(f, "  {}", header.join("  "))?;
        for row in cells {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(idx, cell)| format!("{:>w$}", cell, w = widths[idx]))
                .collect();
            writeln!(f, "  {}", line.join("  "))?;
        }
        Ok(())
    }
}

/// f64 to JSON, mapping non-finite values to strings so a report can still
/// be emitted when a computation degenerates.
pub fn json_num(x: f64) -> Value {
    match serde_json::Number::from_f64(x) {
        Some(v) => Value::Number(v),
        None => Value::String(format!("{x}")),
    }
}

/// Complex value as a [re, im] pair.
pub fn json_complex(v: num_complex::Complex64) -> Value {
    Value::Array(vec![json_num(v.re), json_num(v.im)])
}

fn render_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}
