//! Tables, JSON documents and run manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // shortest round-trip form, exponent notation for extreme magnitudes
            Cell::Real(v) => format!("{v:?}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => (*v).into(),
            Cell::Real(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Text(s) => s.clone().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, manifest: &str) -> String {
        let mut out = format!("# manifest: {manifest}\n{}\n", self.columns.join(","));
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn to_json(&self, manifest: &str) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::json).collect::<Vec<_>>().into())
            .collect();
        serde_json::json!({ "manifest": manifest, "columns": self.columns, "rows": rows })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Content {
    Table(Table),
    /// Always written as JSON.
    Document(serde_json::Value),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub name: String,
    pub content: Content,
}

impl Output {
    pub fn table(name: impl Into<String>, table: Table) -> Self {
        Self {
            name: name.into(),
            content: Content::Table(table),
        }
    }

    pub fn document(name: impl Into<String>, value: serde_json::Value) -> Self {
        Self {
            name: name.into(),
            content: Content::Document(value),
        }
    }

    pub fn file_name(&self, format: Format) -> String {
        match (&self.content, format) {
            (Content::Table(_), Format::Csv) => format!("{}.csv", self.name),
            _ => format!("{}.json", self.name),
        }
    }

    pub fn render(&self, format: Format, manifest: &str) -> String {
        match (&self.content, format) {
            (Content::Table(t), Format::Csv) => t.to_csv(manifest),
            (Content::Table(t), Format::Json) => pretty(&t.to_json(manifest)),
            (Content::Document(v), _) => pretty(v),
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<String>,
    /// Parameter text as run, defaults included.
    pub params: BTreeMap<String, String>,
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub format: Format,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn file_name(stem: &str) -> String {
        format!("{stem}-manifest.json")
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// Writes every output and then the manifest; returns the paths written.
pub fn write_run(
    dir: &Path,
    stem: &str,
    outputs: &[Output],
    format: Format,
    manifest: &mut Manifest,
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let manifest_name = Manifest::file_name(stem);
    let mut written = Vec::new();
    manifest.outputs.clear();
    for output in outputs {
        let name = output.file_name(format);
        let path = dir.join(&name);
        fs::write(&path, output.render(format, &manifest_name))?;
        manifest.outputs.push(name);
        written.push(path);
    }
    let path = dir.join(&manifest_name);
    fs::write(&path, pretty(&serde_json::to_value(&*manifest).map_err(std::io::Error::other)?))?;
    written.push(path);
    Ok(written)
}
