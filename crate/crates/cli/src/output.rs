// Copyright 2026 The qubit-kick Authors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "qubit-kick/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// What a command produced: its CSV rendering and the structured data behind it.
pub struct Payload {
    pub csv: String,
    pub data: Value,
}

impl Payload {
    /// For commands whose natural output is a table.
    pub fn from_csv(csv: String) -> Self {
        let data = csv_to_json(&csv);
        Self { csv, data }
    }
}

/// `{columns, rows}` with numeric cells parsed, other cells kept as strings.
pub fn csv_to_json(csv: &str) -> Value {
    let mut lines = csv.lines();
    let columns: Vec<Value> = lines.next().unwrap_or("").split(',').map(Value::from).collect();
    let rows: Vec<Value> = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            Value::Array(
                l.split(',')
                    .map(|c| match c.parse::<f64>() {
                        Ok(x) if x.is_finite() => json!(x),
                        _ => Value::from(c),
                    })
                    .collect(),
            )
        })
        .collect();
    json!({ "columns": columns, "rows": rows })
}

/// Turns `key = value` lines into a JSON object of strings.
pub fn config_echo(text: &str, extra: &[(&str, String)]) -> Value {
    let mut m = Map::new();
    for line in text.lines() {
        if let Some((k, v)) = line.split_once('=') {
            m.insert(k.trim().to_string(), Value::from(v.trim()));
        }
    }
    for (k, v) in extra {
        m.insert((*k).to_string(), Value::from(v.as_str()));
    }
    Value::Object(m)
}

pub fn envelope(command: &str, echo: Value, data: Value) -> String {
    let v = json!({ "schema": SCHEMA, "command": command, "config_echo": echo, "data": data });
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory, then renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut so = std::io::stdout().lock();
            match so.write_all(contents.as_bytes()).and_then(|_| so.flush()) {
                // the reader went away, as with `| head`
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}
