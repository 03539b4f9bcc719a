//! Experiment reports: canonical JSON, flat CSV and atomic file output.
//!
//! Canonical JSON sorts object keys and prints every float with 17
//! significant digits (`{:.16e}`), so equal values always give equal bytes
//! and every float parses back to the same `f64`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};

use crate::error::{LabError, Result};

/// One checked or reported quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Stable tag of the identity or bound being exercised.
    pub target: String,
    pub name: String,
    pub value: f64,
    /// Threshold the value is compared against, if any.
    pub tolerance: Option<f64>,
    /// `None` for quantities that are reported but not asserted.
    pub pass: Option<bool>,
}

impl Check {
    pub fn hard(target: &str, name: impl Into<String>, value: f64, tolerance: Option<f64>, pass: bool) -> Self {
        Self {
            target: target.into(),
            name: name.into(),
            value,
            tolerance,
            pass: Some(pass),
        }
    }

    pub fn reported(target: &str, name: impl Into<String>, value: f64) -> Self {
        Self {
            target: target.into(),
            name: name.into(),
            value,
            tolerance: None,
            pass: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    /// Unix time in seconds.
    pub started: f64,
    pub finished: f64,
    pub results: Value,
    pub provenance: Vec<Check>,
    /// All hard checks passed.
    pub passed: bool,
}

impl ExperimentReport {
    pub fn new(config: ConfigEcho, results: Value, provenance: Vec<Check>) -> Self {
        let passed = provenance.iter().all(|c| c.pass != Some(false));
        Self {
            config,
            started: 0.0,
            finished: 0.0,
            results,
            provenance,
            passed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            _ => Err(format!("unknown format `{s}` (json or csv)")),
        }
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_number(n: &Number, out: &mut String) {
    if let Some(i) = n.as_i64() {
        out.push_str(&i.to_string());
    } else if let Some(u) = n.as_u64() {
        out.push_str(&u.to_string());
    } else {
        out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
    }
}

fn write_string(s: &str, out: &mut String) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
}

fn write_value(v: &Value, out: &mut String, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', 2 * n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(n, out),
        Value::String(s) => write_string(s, out),
        Value::Array(xs) if xs.is_empty() => out.push_str("[]"),
        Value::Array(xs) => {
            out.push_str("[\n");
            for (i, x) in xs.iter().enumerate() {
                pad(out, indent + 1);
                write_value(x, out, indent + 1);
                out.push_str(if i + 1 < xs.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            // serde_json's default map is a BTreeMap; sort anyway so the
            // output does not depend on that feature choice.
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, indent + 1);
                write_string(k, out);
                out.push_str(": ");
                write_value(&m[*k], out, indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Canonical JSON text of any serializable value.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| LabError::Io {
        path: "<report>".into(),
        message: e.to_string(),
    })?;
    let mut out = String::new();
    write_value(&v, &mut out, 0);
    out.push('\n');
    Ok(out)
}

/// `(path, value)` leaves of a JSON tree, in canonical key order.
pub fn flatten(v: &Value) -> Vec<(String, String)> {
    fn walk(v: &Value, path: String, out: &mut Vec<(String, String)>) {
        match v {
            Value::Object(m) => {
                let mut keys: Vec<&String> = m.keys().collect();
                keys.sort();
                for k in keys {
                    let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                    walk(&m[k], p, out);
                }
            }
            Value::Array(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    walk(x, format!("{path}[{i}]"), out);
                }
            }
            Value::Null => out.push((path, String::new())),
            Value::Bool(b) => out.push((path, b.to_string())),
            Value::String(s) => out.push((path, s.clone())),
            Value::Number(n) => {
                let mut s = String::new();
                write_number(n, &mut s);
                out.push((path, s));
            }
        }
    }
    let mut out = Vec::new();
    walk(v, String::new(), &mut out);
    out
}

/// Two-column CSV (`path,value`) of the flattened report, RFC-4180 quoted.
pub fn csv_text<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| LabError::Io {
        path: "<report>".into(),
        message: e.to_string(),
    })?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| LabError::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    };
    w.write_record(["path", "value"]).map_err(io)?;
    for (k, val) in flatten(&v) {
        w.write_record([k, val]).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields is utf-8"))
}

pub fn render(report: &ExperimentReport, format: Format) -> Result<String> {
    match format {
        Format::Json => canonical_json(report),
        Format::Csv => csv_text(report),
    }
}

/// Write `text` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let ctx = |e: std::io::Error| LabError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(ctx)?;
    tmp.write_all(text.as_bytes()).map_err(ctx)?;
    tmp.as_file().sync_all().map_err(ctx)?;
    tmp.persist(path).map_err(|e| ctx(e.error))?;
    Ok(())
}

pub fn emit_report(report: &ExperimentReport, format: Format, path: &Path) -> Result<()> {
    write_atomic(path, &render(report, format)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_floats_fixed() {
        let v = json!({"b": 1.5, "a": [1, 0.1], "c": {"z": null, "y": true}});
        let s = canonical_json(&v).unwrap();
        let a = s.find("\"a\"").unwrap();
        let b = s.find("\"b\"").unwrap();
        assert!(a < b);
        assert!(s.contains("1.5000000000000000e0"));
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.find("\"y\"").unwrap() < s.find("\"z\"").unwrap());
    }

    #[test]
    fn flatten_paths() {
        let v = json!({"x": {"ys": [1, 2]}, "s": "t"});
        let f = flatten(&v);
        assert_eq!(f[0], ("s".into(), "t".into()));
        assert_eq!(f[1], ("x.ys[0]".into(), "1".into()));
    }
}
