//! Readers and writers for the `EMB1` binary format and the CSV embedding format.
//!
//! `EMB1` layout: the magic bytes `EMB1`, `n: u32` and `d: u32` little-endian,
//! then `n*d` little-endian `f32` values row-major. Identifiers come from a
//! sidecar `<path>.manifest.csv` with header `index,id`; without one they
//! default to the stringified row indices.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::EmbeddingMatrix;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Binary,
    Csv,
}

impl EmbeddingFormat {
    /// `.csv` files are CSV, everything else is treated as `EMB1`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => EmbeddingFormat::Csv,
            _ => EmbeddingFormat::Binary,
        }
    }
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(".manifest.csv");
    PathBuf::from(s)
}

pub fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingMatrix> {
    match format {
        EmbeddingFormat::Binary => load_emb1(path),
        EmbeddingFormat::Csv => load_csv(path),
    }
}

fn load_emb1(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::parse(
            path,
            format!("byte {}", bytes.len()),
            "truncated header",
        ));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::parse(path, "byte 0", "missing EMB1 magic"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if n == 0 || d == 0 {
        return Err(Error::parse(
            path,
            "byte 4",
            format!("header declares n={n}, d={d}; both must be positive"),
        ));
    }
    let expected = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::parse(path, "byte 4", "header dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::parse(
            path,
            format!("byte {}", HEADER_LEN + payload.len().min(expected)),
            format!(
                "dimension mismatch: header n={n}, d={d} needs {expected} payload bytes, found {}",
                payload.len()
            ),
        ));
    }

    let mut rows = Vec::with_capacity(n);
    for (i, chunk) in payload.chunks_exact(4 * d).enumerate() {
        let row: Vec<f64> = chunk
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
            .collect();
        let row_offset = HEADER_LEN + i * 4 * d;
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::parse(
                path,
                format!("byte {}", row_offset + 4 * j),
                format!("non-finite value at row {i}, column {j}"),
            ));
        }
        if row.iter().all(|&x| x == 0.0) {
            return Err(Error::parse(
                path,
                format!("byte {row_offset}"),
                format!("row {i} is the zero vector"),
            ));
        }
        rows.push(row);
    }

    let manifest = manifest_path(path);
    let items = if manifest.exists() {
        read_manifest(&manifest, n)?
    } else {
        (0..n).map(|i| i.to_string()).collect()
    };
    EmbeddingMatrix::new(items, &rows).map_err(|e| Error::parse(path, "payload", e.to_string()))
}

fn read_manifest(path: &Path, n: usize) -> Result<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers.len() != 2 || &headers[0] != "index" || &headers[1] != "id" {
        return Err(Error::parse(path, "line 1", "expected header `index,id`"));
    }
    let mut ids: Vec<Option<String>> = vec![None; n];
    let mut seen: HashMap<String, u64> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        let index: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, format!("line {line}"), "index is not an integer"))?;
        let slot = ids.get_mut(index).ok_or_else(|| {
            Error::parse(
                path,
                format!("line {line}"),
                format!("index {index} out of range for n={n}"),
            )
        })?;
        if slot.is_some() {
            return Err(Error::parse(
                path,
                format!("line {line}"),
                format!("index {index} listed twice"),
            ));
        }
        let id = record[1].to_string();
        if let Some(prev) = seen.insert(id.clone(), line) {
            return Err(Error::parse(
                path,
                format!("line {line}"),
                format!("duplicate identifier {id:?} (first seen on line {prev})"),
            ));
        }
        *slot = Some(id);
    }
    ids.into_iter()
        .enumerate()
        .map(|(i, id)| {
            id.ok_or_else(|| Error::parse(path, "end of file", format!("no entry for index {i}")))
        })
        .collect()
}

fn load_csv(path: &Path) -> Result<EmbeddingMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.len() < 2 || &headers[0] != "id" {
        return Err(Error::parse(
            path,
            "line 1",
            "expected header `id,f0,f1,...`",
        ));
    }
    let d = headers.len() - 1;
    let mut items = Vec::new();
    let mut rows = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = line_of(&record);
        let at = || format!("line {line}");
        if record.len() != d + 1 {
            return Err(Error::parse(
                path,
                at(),
                format!(
                    "dimension mismatch: header declares {d} features, row has {}",
                    record.len().saturating_sub(1)
                ),
            ));
        }
        let id = record[0].to_string();
        if let Some(prev) = seen.insert(id.clone(), line) {
            return Err(Error::parse(
                path,
                at(),
                format!("duplicate identifier {id:?} (first seen on line {prev})"),
            ));
        }
        let mut row = Vec::with_capacity(d);
        for (j, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(path, at(), format!("column {}: {field:?} is not a number", j + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    path,
                    at(),
                    format!("column {}: non-finite value", j + 1),
                ));
            }
            row.push(v);
        }
        if row.iter().all(|&x| x == 0.0) {
            return Err(Error::parse(path, at(), format!("row {id:?} is the zero vector")));
        }
        items.push(id);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "line 2", "no embedding rows"));
    }
    EmbeddingMatrix::new(items, &rows).map_err(|e| Error::parse(path, "rows", e.to_string()))
}

/// Writes `rows` as `EMB1` plus a manifest holding `items`.
pub fn write_emb1(path: &Path, items: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let d = rows.first().map_or(0, Vec::len);
    if items.len() != rows.len() || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidInput("ragged embedding rows".into()));
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&(rows.len() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&(d as u32).to_le_bytes()).map_err(io)?;
    for v in rows.iter().flatten() {
        w.write_all(&(*v as f32).to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)?;

    let manifest = manifest_path(path);
    let mut m = csv::Writer::from_path(&manifest).map_err(|e| csv_error(&manifest, e))?;
    m.write_record(["index", "id"]).map_err(|e| csv_error(&manifest, e))?;
    for (i, id) in items.iter().enumerate() {
        m.write_record([i.to_string().as_str(), id])
            .map_err(|e| csv_error(&manifest, e))?;
    }
    m.flush().map_err(|e| Error::io(&manifest, e))
}

pub fn write_csv(path: &Path, items: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let d = rows.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["id".to_string()];
    header.extend((0..d).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (id, row) in items.iter().zip(rows) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let location = e
        .position()
        .map_or_else(|| "input".to_string(), |p| format!("line {}", p.line()));
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::parse(path, location, format!("{kind:?}")),
    }
}
