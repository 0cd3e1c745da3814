use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use serde_json::{Number, Value};

use shiftorbit::Rational;

/// Replaces `path` in one step: the bytes go to a sibling temp file first.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().context("flushing CSV")?;
    write_atomic(path, &bytes)
}

/// Seventeen significant digits, enough to round-trip any f64.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn float(x: f64) -> Value {
    Number::from_str(&sig17(x)).map_or(Value::Null, Value::Number)
}

pub fn opt_float(x: Option<f64>) -> Value {
    x.map_or(Value::Null, float)
}

/// `[num, den]` in lowest terms, at any size.
pub fn pair(r: &Rational) -> Value {
    let num = Number::from_str(&r.numer().to_string()).expect("integer literal");
    let den = Number::from_str(&r.denom().to_string()).expect("integer literal");
    Value::Array(vec![Value::Number(num), Value::Number(den)])
}

pub fn opt_bool(b: Option<bool>) -> String {
    b.map_or_else(String::new, |b| b.to_string())
}
