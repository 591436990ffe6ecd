//! Point-file readers and label writers.
//!
//! Two input formats are accepted:
//! * CSV: one point per line, 2 or 3 comma-separated decimals. A first line
//!   that does not parse as numbers is treated as a header and skipped.
//! * binary: little-endian `u32` count `n`, `u32` dimension `d`, then
//!   `n * d` little-endian `f32` values, row-major.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use fdbscan::{Point, PointSet};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Binary for a `.bin` extension, CSV otherwise.
    Auto,
    Csv,
    Bin,
}

impl Format {
    pub fn resolve(self, path: &Path) -> Format {
        match self {
            Format::Auto => match path.extension().and_then(|e| e.to_str()) {
                Some(ext) if ext.eq_ignore_ascii_case("bin") => Format::Bin,
                _ => Format::Csv,
            },
            other => other,
        }
    }
}

pub fn read_points(path: &Path, format: Format) -> Result<PointSet, CliError> {
    let mut file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| CliError::io(path, e))?;
    match format.resolve(path) {
        Format::Bin => parse_binary(&bytes).map_err(|msg| CliError::input(path, None, msg)),
        _ => parse_csv(&bytes).map_err(|(line, msg)| CliError::input(path, line, msg)),
    }
}

/// Parses CSV bytes. Errors carry the 1-based line number when known.
pub fn parse_csv(bytes: &[u8]) -> Result<PointSet, (Option<u64>, String)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut dim = None;
    let mut coords: Vec<Point> = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| (e.position().map(|p| p.line()), e.to_string()))?;
        let line = record.position().map(|p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f32>, _> = record.iter().map(str::parse::<f32>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(e) => return Err((line, format!("invalid number: {e}"))),
        };
        first = false;
        let d = *dim.get_or_insert(values.len());
        if d != 2 && d != 3 {
            return Err((line, format!("expected 2 or 3 columns, found {d}")));
        }
        if values.len() != d {
            return Err((line, format!("expected {d} columns, found {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err((line, "non-finite coordinate".into()));
        }
        let mut p = [0.0; 3];
        p[..d].copy_from_slice(&values);
        coords.push(p);
    }
    let dim = dim.ok_or((None, "no points found".to_string()))?;
    PointSet::new(dim, coords).map_err(|e| (None, e.to_string()))
}

pub fn parse_binary(bytes: &[u8]) -> Result<PointSet, String> {
    if bytes.len() < 8 {
        return Err(format!("binary header needs 8 bytes, file has {}", bytes.len()));
    }
    let n = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if d != 2 && d != 3 {
        return Err(format!("unsupported dimension {d}"));
    }
    let expected = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(8))
        .ok_or("point count overflows")?;
    if bytes.len() != expected {
        return Err(format!(
            "header announces {n} points of dimension {d} ({expected} bytes), file has {} bytes",
            bytes.len()
        ));
    }
    let flat: Vec<f32> = bytes[8..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PointSet::from_flat(d, &flat).map_err(|e| e.to_string())
}

pub fn encode_binary(points: &PointSet) -> Vec<u8> {
    let d = points.dim();
    let mut out = Vec::with_capacity(8 + points.len() * d * 4);
    out.extend_from_slice(&(points.len() as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for i in 0..points.len() {
        for c in points.coords(i) {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

pub fn encode_csv(points: &PointSet) -> Vec<u8> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        let row: Vec<String> = points.coords(i).iter().map(|c| c.to_string()).collect();
        out.extend_from_slice(row.join(",").as_bytes());
        out.push(b'\n');
    }
    out
}

pub fn write_points(path: &Path, points: &PointSet, format: Format) -> Result<(), CliError> {
    let bytes = match format.resolve(path) {
        Format::Bin => encode_binary(points),
        _ => encode_csv(points),
    };
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// One label per line, noise as `-1`.
pub fn write_labels<W: Write>(out: W, labels: &[i64]) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()
}
