//! CSV tables with JSON provenance sidecars.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::config::RunConfig;
use crate::{Error, Result};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<i32> for Cell {
    fn from(x: i32) -> Self {
        Cell::I(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

/// A named table that becomes `<name>.csv`.
#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, headers: &[&str]) -> Self {
        Self { name: name.into(), headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            if r.len() != self.headers.len() {
                return Err(Error::Consistency(format!("row of {} cells in table {}", r.len(), self.name)));
            }
            w.write_record(r.iter().map(Cell::render)).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

/// Cache and timing counters of a run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SolveStats {
    pub cache_hits: usize,
    pub cache_misses: usize,
    pub diagonalizations: usize,
    pub diagonalization_seconds: f64,
}

/// Everything a subcommand produced.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub warnings: Vec<String>,
    /// Failures isolated to one sector or chain length.
    pub errors: Vec<String>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    command: &'a str,
    table: &'a str,
    columns: &'a [String],
    rows: usize,
    library_version: &'a str,
    wall_time_seconds: f64,
    config: &'a RunConfig,
    solve: &'a SolveStats,
    summary: &'a Value,
    warnings: &'a [String],
    errors: &'a [String],
}

/// Writes `<dir>/<command>_<table>.csv` and the matching `.json` sidecar for
/// every table, and `<command>_summary.json`. Returns the written paths.
pub fn write_run(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    out: &RunOutput,
    solve: &SolveStats,
    wall_time_seconds: f64,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let write_sidecar = |path: PathBuf, table: &str, columns: &[String], rows: usize| -> Result<()> {
        let side = Sidecar {
            command,
            table,
            columns,
            rows,
            library_version: LIBRARY_VERSION,
            wall_time_seconds,
            config,
            solve,
            summary: &out.summary,
            warnings: &out.warnings,
            errors: &out.errors,
        };
        let text = serde_json::to_string_pretty(&side).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        std::fs::write(&path, text + "\n")?;
        Ok(())
    };
    for t in &out.tables {
        let stem = format!("{command}_{}", t.name);
        let csv_path = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv_path, t.to_csv()?)?;
        let json_path = dir.join(format!("{stem}.json"));
        write_sidecar(json_path.clone(), &t.name, &t.headers, t.rows.len())?;
        written.push(csv_path);
        written.push(json_path);
    }
    let summary_path = dir.join(format!("{command}_summary.json"));
    write_sidecar(summary_path.clone(), "summary", &[], 0)?;
    written.push(summary_path);
    Ok(written)
}
