//! Result envelopes, CSV flattening and atomic writes.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Bumped whenever a field of the envelope or of a result changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

pub fn envelope(subcommand: &str, config: Value, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "config": config,
        "result": result,
    })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Pretty JSON to `out`, or to stdout without one.
pub fn emit(out: Option<&Path>, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => write_atomic(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Plot-ready table; `None` cells print as `inf`.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: Option<&Path>) -> CliResult<()> {
        match path {
            Some(p) => write_atomic(p, &self.render()),
            None => Ok(()),
        }
    }
}

pub fn cell(v: f64) -> String {
    v.to_string()
}

pub fn cell_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "inf".to_string(), cell)
}
