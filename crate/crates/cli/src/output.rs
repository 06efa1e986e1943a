//! Output directory handling: tables in CSV or a JSON mirror, the
//! effective config and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::args::Format;
use crate::CliError;

pub struct OutDir {
    root: PathBuf,
    format: Format,
    written: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output { path: path.display().to_string(), source }
}

impl OutDir {
    pub fn create(root: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self { root: root.to_path_buf(), format, written: Vec::new() })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes a table produced by `fill` as `<stem>.csv`, or as
    /// `<stem>.json` holding one object per CSV row.
    pub fn table(
        &mut self,
        stem: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let mut csv = Vec::new();
        fill(&mut csv).map_err(io_err(&self.root.join(stem)))?;
        match self.format {
            Format::Csv => self.put(&format!("{stem}.csv"), &csv),
            Format::Json => {
                let text = String::from_utf8(csv).expect("tables are ASCII");
                let mut json = serde_json::to_string_pretty(&csv_to_json(&text)).expect("plain values");
                json.push('\n');
                self.put(&format!("{stem}.json"), json.as_bytes())
            }
        }
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        self.put(name, body.as_bytes())
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).expect("plain values");
        s.push('\n');
        self.put(name, s.as_bytes())
    }
}

fn cell(raw: &str) -> Value {
    if raw.is_empty() {
        return Value::Null;
    }
    if let Ok(u) = raw.parse::<u64>() {
        return u.into();
    }
    if let Ok(i) = raw.parse::<i64>() {
        return i.into();
    }
    match raw.parse::<f64>() {
        Ok(f) if f.is_finite() => f.into(),
        _ => raw.into(),
    }
}

pub fn csv_to_json(text: &str) -> Value {
    let mut lines = text.lines();
    let Some(head) = lines.next() else { return Value::Array(Vec::new()) };
    let names: Vec<&str> = head.split(',').collect();
    let rows = lines
        .map(|line| {
            let obj: Map<String, Value> =
                names.iter().zip(line.split(',')).map(|(n, v)| (n.to_string(), cell(v))).collect();
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}
