//! CSV and metadata-sidecar output.
//!
//! Every command writes one CSV file (RFC-4180 style: '.' decimal separator,
//! LF line endings, header row) and a `<out>.meta.json` sidecar embedding the
//! full run configuration, the library version and a command-specific summary,
//! so each artifact is reproducible from its own metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::CliError;

/// Accumulates CSV rows in memory; written atomically at the end of a command
/// (or before exiting with a non-convergence code, to retain partial output).
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        Csv { buf }
    }

    /// Appends one row of pre-rendered fields.
    pub fn row(&mut self, fields: &[&str]) {
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, &self.buf)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
    }
}

/// Renders a float with round-trip precision and a locale-independent '.'
/// decimal separator. NaN marks a column that does not apply and renders as
/// an empty field.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Writes `<out>.meta.json` carrying the command name, the full flag set and
/// a summary of computed scalars.
pub fn write_meta<C: Serialize>(
    out: &Path,
    command: &str,
    config: &C,
    summary: serde_json::Value,
) -> Result<(), CliError> {
    let meta = json!({
        "command": command,
        "version": optgd::VERSION,
        "config": config,
        "summary": summary,
    });
    let path = sidecar_path(out);
    let text = serde_json::to_string_pretty(&meta).expect("metadata is serializable");
    fs::write(&path, text + "\n")
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn sidecar_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    std::path::PathBuf::from(name)
}
