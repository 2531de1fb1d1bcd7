//! Datasets, density tables, report JSON and run manifests.
//!
//! Every float is written with 17 significant digits so a re-read gives
//! back the same bits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DeconvError, Result};

/// `x` with 17 significant digits, scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Samples: one value per line, an optional non-numeric first line (header),
/// blank lines and `#` comments ignored.
pub fn parse_samples(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let first = !seen_content;
        seen_content = true;
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => {
                return Err(DeconvError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("non-finite value `{line}`"),
                })
            }
            Err(_) if first => {}
            Err(_) => {
                return Err(DeconvError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("not a number: `{line}`"),
                })
            }
        }
    }
    Ok(out)
}

pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| DeconvError::io(path, e))?;
    parse_samples(&text, path)
}

pub fn write_samples(path: &Path, header: &str, values: &[f64]) -> Result<()> {
    let mut s = String::with_capacity(values.len() * 25 + header.len() + 1);
    s.push_str(header);
    s.push('\n');
    for v in values {
        s.push_str(&fmt_f64(*v));
        s.push('\n');
    }
    write_bytes(path, s.as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| DeconvError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| DeconvError::io(path, e))?;
    f.write_all(bytes).map_err(|e| DeconvError::io(path, e))
}

/// CSV with a header row; every cell a float.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    write_bytes(path, s.as_bytes())
}

pub fn read_table_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| DeconvError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let header: Vec<String> = match lines.next() {
        Some((_, h)) => h.split(',').map(|c| c.trim().to_string()).collect(),
        None => {
            return Err(DeconvError::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "empty table".into(),
            })
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| DeconvError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("not a number: `{}`", c.trim()),
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != header.len() {
            return Err(DeconvError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected {} columns, found {}", header.len(), row.len()),
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_density_csv(path: &Path, x: &[f64], ghat: &[f64]) -> Result<()> {
    let rows: Vec<Vec<f64>> = x.iter().zip(ghat).map(|(a, b)| vec![*a, *b]).collect();
    write_table_csv(path, &["x", "ghat"], &rows)
}

pub fn read_density_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let (header, rows) = read_table_csv(path)?;
    if header != ["x", "ghat"] {
        return Err(DeconvError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header x,ghat, found {}", header.join(",")),
        });
    }
    Ok(rows.into_iter().map(|r| (r[0], r[1])).unzip())
}

/// Pretty JSON whose floats carry 17 significant digits.
struct Digits17(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        w: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + std::io::Write>(
        &mut self,
        w: &mut W,
        value: f32,
    ) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + std::io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + std::io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Digits17(serde_json::ser::PrettyFormatter::new()),
    );
    value
        .serialize(&mut ser)
        .map_err(|e| DeconvError::Numerical(format!("report serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(buf)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, &to_json_bytes(value)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| DeconvError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }

    /// Recompute and compare.
    pub fn verify(&self) -> Result<bool> {
        Ok(sha256_file(&self.path)? == self.sha256)
    }
}

/// Provenance record written next to every set of outputs. Wall-clock data
/// lives here so the outputs themselves stay byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub timestamp_unix: u64,
    pub wall_clock_seconds: f64,
    pub threads: usize,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value, seed: Option<u64>) -> Self {
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            command: command.into(),
            config,
            seed,
            version: crate::VERSION.into(),
            timestamp_unix,
            wall_clock_seconds: 0.0,
            threads: rayon::current_num_threads(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// `report.json` -> `report.json.manifest.json`
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// JSON schema of the experiment report.
pub const EXPERIMENT_REPORT_SCHEMA: &str = include_str!("../schema/experiment_report.v1.json");

/// Checks `type`, `required`, `properties`, `items` and `const` keywords,
/// which is all the shipped schema uses.
pub fn validate_against_schema(
    value: &serde_json::Value,
    schema: &serde_json::Value,
) -> std::result::Result<(), String> {
    check_node(value, schema, "$")
}

fn type_matches(value: &serde_json::Value, ty: &str) -> bool {
    use serde_json::Value as V;
    match ty {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        "integer" => value.is_u64() || value.is_i64(),
        "number" => matches!(value, V::Number(_)),
        _ => false,
    }
}

fn check_node(
    value: &serde_json::Value,
    schema: &serde_json::Value,
    at: &str,
) -> std::result::Result<(), String> {
    if let Some(ty) = schema.get("type") {
        let ok = match ty {
            serde_json::Value::String(t) => type_matches(value, t),
            serde_json::Value::Array(ts) => ts
                .iter()
                .any(|t| t.as_str().is_some_and(|t| type_matches(value, t))),
            _ => true,
        };
        if !ok {
            return Err(format!("{at}: expected type {ty}, found {value}"));
        }
    }
    if let Some(c) = schema.get("const") {
        if c != value {
            return Err(format!("{at}: expected {c}, found {value}"));
        }
    }
    if let (Some(req), Some(obj)) = (
        schema.get("required").and_then(|r| r.as_array()),
        value.as_object(),
    ) {
        for k in req.iter().filter_map(|k| k.as_str()) {
            if !obj.contains_key(k) {
                return Err(format!("{at}: missing property `{k}`"));
            }
        }
    }
    if let (Some(props), Some(obj)) = (
        schema.get("properties").and_then(|p| p.as_object()),
        value.as_object(),
    ) {
        for (k, sub) in props {
            if let Some(v) = obj.get(k) {
                check_node(v, sub, &format!("{at}.{k}"))?;
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            check_node(v, items, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}
