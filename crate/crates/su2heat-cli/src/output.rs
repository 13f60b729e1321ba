//! CSV and JSON rendering and atomic file output.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Tabular result of a command plus free-form JSON extras.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub rows: Vec<Map<String, Value>>,
    pub extra: Map<String, Value>,
}

impl Report {
    pub fn new(command: &'static str, config: Value) -> Self {
        Report { command, config, rows: Vec::new(), extra: Map::new() }
    }

    pub fn push(&mut self, row: Value) {
        if let Value::Object(m) = row {
            self.rows.push(m);
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => to_csv(&self.rows),
            Format::Json => {
                let mut m = Map::new();
                m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
                m.insert("command".into(), self.command.into());
                m.insert("config".into(), self.config.clone());
                m.insert("results".into(), Value::Array(self.rows.iter().cloned().map(Value::Object).collect()));
                for (k, v) in &self.extra {
                    m.insert(k.clone(), v.clone());
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("json values serialize");
                s.push('\n');
                s
            }
        }
    }
}

/// 17 significant digits, '.' decimal separator.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) if n.is_f64() => fmt_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => {
            let s = other.to_string();
            format!("\"{}\"", s.replace('"', "\"\""))
        }
    }
}

/// Header from the first row; later rows must share its keys.
pub fn to_csv(rows: &[Map<String, Value>]) -> String {
    let Some(first) = rows.first() else { return String::new() };
    let keys: Vec<&String> = first.keys().collect();
    let mut s = keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = keys.iter().map(|k| csv_cell(r.get(*k).unwrap_or(&Value::Null))).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Write through a temporary sibling and rename, so a failed run leaves no
/// partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let res = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    res
}

pub fn error_json(e: &str, code: i32) -> Value {
    json!({ "version": env!("CARGO_PKG_VERSION"), "error": e, "exit_code": code })
}
