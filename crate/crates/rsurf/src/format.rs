//! Shared serialization helpers: exact float text, base64 float blocks,
//! versioned CSV files and JSON files.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_float(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

pub fn encode_f64s(data: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    STANDARD.encode(bytes)
}

pub fn decode_f64s(text: &str) -> std::result::Result<Vec<f64>, String> {
    let bytes = STANDARD.decode(text).map_err(|e| e.to_string())?;
    if bytes.len() % 8 != 0 {
        return Err(format!("{} bytes is not a whole number of f64 values", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// One tensor in a checkpoint or direction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub shape: Vec<usize>,
    /// Base64 of little-endian f64 values.
    pub data: String,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|source| Error::Json { path: path.into(), source })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// A CSV file whose first line is `# rsurf <schema> v<version>`.
pub struct VersionedCsv {
    pub schema: &'static str,
    pub version: u32,
    pub columns: &'static [&'static str],
}

impl VersionedCsv {
    pub fn render(&self, rows: impl IntoIterator<Item = Vec<String>>) -> String {
        let mut out = format!("# rsurf {} v{}\n{}\n", self.schema, self.version, self.columns.join(","));
        for row in rows {
            debug_assert_eq!(row.len(), self.columns.len());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the body into rows of fields, rejecting other schemas, other
    /// versions and unexpected headers.
    pub fn parse(&self, path: &Path, text: &str) -> Result<Vec<Vec<String>>> {
        let mut lines = text.lines();
        let tag = lines.next().unwrap_or_default();
        let expected = format!("# rsurf {} v{}", self.schema, self.version);
        if tag != expected {
            return Err(Error::format(
                path,
                format!("expected schema line `{expected}`, found `{tag}`"),
            ));
        }
        let header = lines.next().unwrap_or_default();
        if header != self.columns.join(",") {
            return Err(Error::format(path, format!("unexpected header `{header}`")));
        }
        lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(n, line)| {
                let fields: Vec<String> = line.split(',').map(str::to_owned).collect();
                if fields.len() != self.columns.len() {
                    return Err(Error::format(path, format!("row {} has {} fields", n + 1, fields.len())));
                }
                Ok(fields)
            })
            .collect()
    }

    pub fn read(&self, path: &Path) -> Result<Vec<Vec<String>>> {
        self.parse(path, &read_text(path)?)
    }
}

pub fn field<T: std::str::FromStr>(path: &Path, value: &str, name: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::format(path, format!("bad {name} `{value}`")))
}

pub fn float_field(path: &Path, value: &str, name: &str) -> Result<f64> {
    parse_float(value).ok_or_else(|| Error::format(path, format!("bad {name} `{value}`")))
}
