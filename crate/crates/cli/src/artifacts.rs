//! Run directory layout and writers.
//!
//! JSON goes through a small emitter rather than `serde_json`'s printer so
//! every float carries 17 significant digits; object keys come out sorted
//! because `serde_json::Map` is ordered.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

/// A CSV table: header plus rows of already-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Binary dump of a complex space-time field.
#[derive(Debug, Clone)]
pub struct BinaryField {
    pub name: String,
    /// `(re, im)` pairs in storage order.
    pub values: Vec<(f64, f64)>,
    pub sidecar: Value,
}

pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // not representable in JSON numbers; CSV cells use the same spelling
        format!("{x}")
    }
}

fn escape(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn emit(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                match n.as_f64() {
                    Some(x) if x.is_finite() => out.push_str(&float(x)),
                    _ => out.push_str("null"),
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => escape(s, out),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(indent + 2, out);
                emit(x, indent + 2, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                pad(indent + 2, out);
                escape(k, out);
                out.push_str(": ");
                emit(x, indent + 2, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and `{:.16e}` floats.
pub fn to_json(v: &Value) -> String {
    let mut out = String::new();
    emit(v, 0, &mut out);
    out.push('\n');
    out
}

/// `<root>/<command>-<UTC timestamp>`, with a counter suffix if that exists.
pub fn run_dir(root: &Path, command: &str, stamp: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(root)?;
    let base = format!("{command}-{stamp}");
    let mut dir = root.join(&base);
    let mut k = 1;
    while dir.exists() {
        dir = root.join(format!("{base}-{k}"));
        k += 1;
    }
    fs::create_dir(&dir)?;
    Ok(dir)
}

pub fn write_table(dir: &Path, table: &Table) -> io::Result<PathBuf> {
    let path = dir.join(format!("{}.csv", table.name));
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn write_field(dir: &Path, field: &BinaryField) -> io::Result<(PathBuf, PathBuf)> {
    let fields = dir.join("fields");
    fs::create_dir_all(&fields)?;
    let bin = fields.join(format!("{}.bin", field.name));
    let mut buf = Vec::with_capacity(16 * field.values.len());
    for &(re, im) in &field.values {
        buf.extend_from_slice(&re.to_le_bytes());
        buf.extend_from_slice(&im.to_le_bytes());
    }
    fs::File::create(&bin)?.write_all(&buf)?;
    let meta = fields.join(format!("{}.json", field.name));
    fs::write(&meta, to_json(&field.sidecar))?;
    Ok((bin, meta))
}

/// Reads back a field written by [`write_field`].
pub fn read_field(path: &Path) -> io::Result<Vec<(f64, f64)>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 16 != 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "field length is not a multiple of 16 bytes"));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            (re, im)
        })
        .collect())
}
