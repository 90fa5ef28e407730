//! Output formats and the provenance block embedded in every artifact.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// CSV artifacts carry provenance on a first line starting with this prefix.
pub const CSV_PROVENANCE_PREFIX: &str = "# provenance: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything needed to re-run a command: its name, the resolved configuration,
/// the seed, the worker count and the tool version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub workers: usize,
    pub format: Format,
    pub config: serde_json::Value,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, workers: usize, format: Format, config: &impl Serialize) -> Self {
        Self {
            tool: "csl".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            workers,
            format,
            config: serde_json::to_value(config).expect("config serializes"),
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{CSV_PROVENANCE_PREFIX}{}\n",
            serde_json::to_string(self).expect("provenance serializes")
        )
    }

    /// Finds the provenance block in a JSON report or a CSV/table artifact.
    pub fn extract(text: &str) -> Result<Self, Failure> {
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(text) {
            if let Some(p) = v.get("provenance") {
                return serde_json::from_value(p.clone())
                    .context("malformed provenance block")
                    .map_err(Failure::Parse);
            }
        }
        let line = text
            .lines()
            .find_map(|l| l.strip_prefix(CSV_PROVENANCE_PREFIX))
            .ok_or_else(|| Failure::parse("no provenance block found"))?;
        serde_json::from_str(line)
            .context("malformed provenance line")
            .map_err(Failure::Parse)
    }
}

/// Shortest round-trip scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn csv_row(fields: &[String]) -> String {
    let mut s = fields.join(",");
    s.push('\n');
    s
}

/// A CSV document: provenance line, header, rows.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(provenance: &Provenance, header: &[&str]) -> Self {
        let mut text = provenance.csv_line();
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&csv_row(fields));
    }

    pub fn comment(&mut self, line: &str) {
        writeln!(self.text, "# {line}").expect("write to string");
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn json_report(provenance: &Provenance, body: serde_json::Value) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("provenance".into(), serde_json::to_value(provenance).expect("serializes"));
    if let serde_json::Value::Object(m) = body {
        obj.extend(m);
    } else {
        obj.insert("result".into(), body);
    }
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(obj)).expect("serializes");
    s.push('\n');
    s
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(Failure::Io),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// `base` with `suffix` appended to the file name.
pub fn sibling(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    base.with_file_name(name)
}
