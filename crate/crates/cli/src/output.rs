//! Result envelopes, CSV tables and atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Violation,
    Anomaly,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violation | Status::Anomaly => 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub status: Status,
    pub message: String,
}

#[derive(Serialize)]
struct Envelope<'a, C, R> {
    schema_version: u32,
    command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
    seed: u64,
    config: &'a C,
    summary: &'a Summary,
    result: &'a R,
}

/// Fixed-column rows for the CSV format.
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Where and how a command writes its result.
#[derive(Debug, Clone)]
pub struct Sink {
    pub format: Format,
    pub path: Option<PathBuf>,
    pub timestamp: bool,
    pub seed: u64,
}

impl Sink {
    pub fn emit<C: Serialize, R: Serialize>(
        &self,
        command: &str,
        config: &C,
        result: &R,
        table: impl FnOnce() -> Table,
        summary: Summary,
    ) -> Result<Status, CliError> {
        let bytes = match self.format {
            Format::Json => {
                let envelope = Envelope {
                    schema_version: SCHEMA_VERSION,
                    command,
                    generated_at_unix: self.timestamp.then(now),
                    seed: self.seed,
                    config,
                    summary: &summary,
                    result,
                };
                let mut s = serde_json::to_string_pretty(&envelope)?;
                s.push('\n');
                s.into_bytes()
            }
            Format::Csv => {
                let table = table();
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(table.header)?;
                for row in &table.rows {
                    w.write_record(row)?;
                }
                w.into_inner().map_err(|e| CliError::io("<csv buffer>")(e.into_error()))?
            }
        };
        match &self.path {
            Some(path) => write_atomic(path, &bytes)?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(&bytes).and_then(|_| out.flush()).map_err(CliError::io("<stdout>"))?;
            }
        }
        eprintln!("{command}: {} [{}]", summary.message, status_word(summary.status));
        Ok(summary.status)
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::Violation => "violation",
        Status::Anomaly => "anomaly",
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::io(path))?;
    tmp.write_all(bytes).map_err(CliError::io(path))?;
    tmp.as_file().sync_all().map_err(CliError::io(path))?;
    tmp.persist(path).map_err(|e| CliError::io(path)(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn missing_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("no/such/dir/out.json");
        assert!(matches!(write_atomic(&path, b"x"), Err(CliError::Io { .. })));
    }

    #[test]
    fn numbers_roundtrip_in_csv_cells() {
        let x = 0.1 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
        assert_eq!(opt(None), "");
    }
}
