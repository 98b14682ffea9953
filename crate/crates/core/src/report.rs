//! Tabular reports with a provenance block, written as CSV or JSON.

use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cost::{format_usd, round_cents};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    /// Currency, shown rounded half-even to cents.
    #[serde(serialize_with = "serialize_usd")]
    Usd(f64),
    Null,
}

fn serialize_usd<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_cents(*v))
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{v}"),
            Cell::Text(v) => f.write_str(v),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Usd(v) => f.write_str(&format_usd(*v)),
            Cell::Null => Ok(()),
        }
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Float(v) | Cell::Usd(v) => Some(*v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub input_sha256: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(input_sha256: impl Into<String>, seed: Option<u64>) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            input_sha256: input_sha256.into(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub provenance: Provenance,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(name: impl Into<String>, columns: &[&str], provenance: Provenance) -> Self {
        Report {
            name: name.into(),
            provenance,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let p = &self.provenance;
        let mut out = format!(
            "# report: {}\n# tool: {} {}\n# input_sha256: {}\n",
            self.name, p.tool, p.version, p.input_sha256
        );
        if let Some(seed) = p.seed {
            out.push_str(&format!("# seed: {seed}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("write to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_string)).expect("write to memory");
        }
        let body = w.into_inner().expect("flush to memory");
        out.push_str(&String::from_utf8(body).expect("cells are valid UTF-8"));
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Writes `<dir>/<name>.<ext>`, refusing to replace an existing file
    /// unless `force` is set.
    pub fn write(&self, dir: &Path, format: Format, force: bool) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        let mut opts = OpenOptions::new();
        opts.write(true);
        if force {
            opts.create(true).truncate(true);
        } else {
            opts.create_new(true);
        }
        let mut f = opts.open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                Error::Io(format!("{} exists; pass --force to overwrite", path.display()))
            } else {
                Error::Io(format!("{}: {e}", path.display()))
            }
        })?;
        f.write_all(self.render(format).as_bytes())
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
