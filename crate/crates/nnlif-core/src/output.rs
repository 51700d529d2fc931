//! Byte-stable text artifacts: CSV tables and `key=value` summaries.
//!
//! Floats are written as `{:.16e}` (17 significant digits, round-trip exact),
//! lines end in LF, and summary keys are sorted, so identical runs give
//! identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{NnlifError, Result};

/// A float in the artifact format.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with a header row and numeric cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(NnlifError::Validation(format!(
                "row has {} fields, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_float(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// One summary value.
#[derive(Debug, Clone, PartialEq)]
pub enum SummaryValue {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl SummaryValue {
    fn render(&self) -> String {
        match self {
            SummaryValue::Float(x) => format_float(*x),
            SummaryValue::Int(k) => k.to_string(),
            SummaryValue::Bool(b) => b.to_string(),
            SummaryValue::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for SummaryValue {
    fn from(x: f64) -> Self {
        SummaryValue::Float(x)
    }
}

impl From<usize> for SummaryValue {
    fn from(k: usize) -> Self {
        SummaryValue::Int(k as i64)
    }
}

impl From<i64> for SummaryValue {
    fn from(k: i64) -> Self {
        SummaryValue::Int(k)
    }
}

impl From<bool> for SummaryValue {
    fn from(b: bool) -> Self {
        SummaryValue::Bool(b)
    }
}

impl From<&str> for SummaryValue {
    fn from(s: &str) -> Self {
        SummaryValue::Text(s.to_string())
    }
}

impl From<String> for SummaryValue {
    fn from(s: String) -> Self {
        SummaryValue::Text(s)
    }
}

/// Sorted `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: BTreeMap<String, SummaryValue>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces `key`. Keys may not contain `=`, whitespace or newlines,
    /// and text values may not contain newlines.
    pub fn set(&mut self, key: &str, value: impl Into<SummaryValue>) -> Result<()> {
        if key.is_empty() || key.contains(|c: char| c == '=' || c.is_whitespace()) {
            return Err(NnlifError::Validation(format!("bad summary key {key:?}")));
        }
        let value = value.into();
        if let SummaryValue::Text(s) = &value {
            if s.contains('\n') {
                return Err(NnlifError::Validation(format!(
                    "summary value for {key} spans lines"
                )));
            }
        }
        self.entries.insert(key.to_string(), value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&SummaryValue> {
        self.entries.get(key)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={}", v.render());
        }
        out
    }
}

/// Reads a rendered summary back as strings.
pub fn parse_summary(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| NnlifError::Validation(format!("summary line {} has no '='", i + 1)))?;
        map.insert(k.to_string(), v.to_string());
    }
    Ok(map)
}

/// Writes every `(file name, contents)` pair into `dir`, each through a
/// temporary file renamed into place, after all contents are in memory.
pub fn write_artifacts(dir: &Path, files: &[(String, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let tmp = dir.join(format!(".{name}.partial"));
        std::fs::write(&tmp, contents)?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dest) in staged {
        std::fs::rename(tmp, dest)?;
    }
    Ok(())
}
