//! Output tables, run manifest and all-or-nothing report directories.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use cbr_core::dataset::format_number;
use clap::ValueEnum;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    JsonLines,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            // Non-finite values (e.g. an infinite effect size) keep their text form.
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or_else(|| serde_json::Value::String(format_number(*v)), serde_json::Value::Number),
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Bool(v) => serde_json::Value::Bool(*v),
            Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

/// A named output table with a fixed header.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, headers: &[&str]) -> Table {
        Table { name, headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len(), "{}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self, format: Format) -> String {
        format!("{}.{}", self.name, format.extension())
    }

    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
                w.write_record(&self.headers).expect("in-memory write");
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text)).expect("in-memory write");
                }
                w.into_inner().expect("in-memory flush")
            }
            Format::JsonLines => {
                let mut out = String::new();
                for row in &self.rows {
                    let obj: serde_json::Map<String, serde_json::Value> =
                        self.headers.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    out.push_str(&serde_json::Value::Object(obj).to_string());
                    out.push('\n');
                }
                out.into_bytes()
            }
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetHash {
    pub label: String,
    pub csv_sha256: String,
    pub schema_sha256: String,
}

/// Reproducibility record embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub datasets: Vec<DatasetHash>,
    pub seed: u64,
    pub timestamp: String,
    pub environment: String,
}

impl RunManifest {
    pub fn new(command: &str, config_bytes: &[u8], datasets: Vec<DatasetHash>, seed: u64) -> RunManifest {
        RunManifest {
            tool: "cbr",
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: sha256_hex(config_bytes),
            datasets,
            seed,
            timestamp: timestamp(),
            environment: format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// RFC 3339 UTC; honours `SOURCE_DATE_EPOCH` for reproducible builds.
fn timestamp() -> String {
    let at = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(chrono::Utc::now);
    at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Markdown summary builder.
#[derive(Debug, Default)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn new(title: &str, manifest: &RunManifest) -> Summary {
        let mut text = format!("# {title}\n\n## Run manifest\n\n```json\n{}```\n", manifest.to_json());
        text.push('\n');
        Summary { text }
    }

    pub fn heading(&mut self, h: &str) {
        let _ = write!(self.text, "## {h}\n\n");
    }

    pub fn line(&mut self, l: &str) {
        self.text.push_str(l);
        self.text.push_str("\n\n");
    }

    pub fn table(&mut self, headers: &[&str], rows: &[Vec<String>]) {
        let _ = writeln!(self.text, "| {} |", headers.join(" | "));
        let _ = writeln!(self.text, "|{}|", headers.iter().map(|_| "---").collect::<Vec<_>>().join("|"));
        for r in rows {
            let _ = writeln!(self.text, "| {} |", r.join(" | "));
        }
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Files are written into a private directory next to the destination and
/// moved into place only once every file has been produced.
pub struct Staging {
    dir: tempfile::TempDir,
    files: Vec<String>,
}

impl Staging {
    pub fn new(out: &Path) -> io::Result<Staging> {
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent)?;
        let dir = tempfile::Builder::new().prefix(".cbr-staging-").tempdir_in(&parent)?;
        Ok(Staging { dir, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        std::fs::write(self.dir.path().join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn commit(self, out: &Path) -> io::Result<Vec<PathBuf>> {
        let written: Vec<PathBuf> = self.files.iter().map(|f| out.join(f)).collect();
        if !out.exists() {
            let staged = self.dir.keep();
            if std::fs::rename(&staged, out).is_ok() {
                return Ok(written);
            }
            std::fs::create_dir_all(out)?;
            for f in &self.files {
                std::fs::rename(staged.join(f), out.join(f))?;
            }
            std::fs::remove_dir(&staged)?;
            return Ok(written);
        }
        for f in &self.files {
            std::fs::rename(self.dir.path().join(f), out.join(f))?;
        }
        Ok(written)
    }
}
