//! Finite realizations and their on-disk formats.
//!
//! Two formats are supported:
//!
//! * CSV: a single column with header `value`, one number per line.
//! * Binary: an 8-byte little-endian `u64` length prefix followed by that many
//!   little-endian `f64` values.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::ops::Deref;
use std::path::Path;

use crate::error::{Error, Result};

/// A finite realization of a process on an integer grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesPath {
    values: Vec<f64>,
}

impl SeriesPath {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl Deref for SeriesPath {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl From<Vec<f64>> for SeriesPath {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Csv,
    Binary,
}

impl SeriesFormat {
    /// `.bin` and `.f64` select the binary format; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("f64") => SeriesFormat::Binary,
            _ => SeriesFormat::Csv,
        }
    }
}

pub fn write_csv<W: Write>(mut w: W, values: &[f64]) -> std::io::Result<()> {
    writeln!(w, "value")?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    w.flush()
}

pub fn read_csv<R: Read>(r: R) -> std::result::Result<Vec<f64>, String> {
    let reader = BufReader::new(r);
    let mut out = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let field = line.trim();
        if field.is_empty() {
            continue;
        }
        if !saw_header {
            saw_header = true;
            if field == "value" {
                continue;
            }
            return Err(format!("expected header `value`, found {field:?}"));
        }
        let v: f64 = field
            .parse()
            .map_err(|_| format!("line {}: not a number: {field:?}", lineno + 1))?;
        out.push(v);
    }
    if !saw_header {
        return Err("missing header `value`".into());
    }
    Ok(out)
}

pub fn write_binary<W: Write>(mut w: W, values: &[f64]) -> std::io::Result<()> {
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_binary(bytes: &[u8]) -> std::result::Result<Vec<f64>, String> {
    if bytes.len() < 8 {
        return Err("shorter than the 8-byte length prefix".into());
    }
    let (prefix, body) = bytes.split_at(8);
    let len = u64::from_le_bytes(prefix.try_into().unwrap()) as usize;
    if body.len() != len.saturating_mul(8) {
        return Err(format!(
            "length prefix says {len} values but the body holds {} bytes",
            body.len()
        ));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn save(path: &Path, values: &[f64]) -> Result<()> {
    let w = BufWriter::new(fs::File::create(path)?);
    match SeriesFormat::from_path(path) {
        SeriesFormat::Csv => write_csv(w, values)?,
        SeriesFormat::Binary => write_binary(w, values)?,
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<SeriesPath> {
    let bytes = fs::read(path)?;
    let parsed = match SeriesFormat::from_path(path) {
        SeriesFormat::Csv => read_csv(bytes.as_slice()),
        SeriesFormat::Binary => read_binary(&bytes),
    };
    parsed.map(SeriesPath::new).map_err(|reason| Error::Format {
        what: "series",
        path: path.to_path_buf(),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_requires_header() {
        assert!(read_csv("1\n2\n".as_bytes()).is_err());
        assert_eq!(read_csv("value\n1\n-2.5\n".as_bytes()).unwrap(), vec![1.0, -2.5]);
        assert!(read_csv("value\nabc\n".as_bytes()).is_err());
    }

    #[test]
    fn binary_rejects_truncated_body() {
        let mut buf = Vec::new();
        write_binary(&mut buf, &[1.0, 2.0]).unwrap();
        assert_eq!(buf.len(), 8 + 16);
        assert!(read_binary(&buf[..buf.len() - 1]).is_err());
        assert!(read_binary(&buf[..4]).is_err());
    }

    proptest! {
        #[test]
        fn formats_round_trip(v in prop::collection::vec(-1e300f64..1e300, 0..64)) {
            let mut csv = Vec::new();
            write_csv(&mut csv, &v).unwrap();
            prop_assert_eq!(read_csv(csv.as_slice()).unwrap(), v.clone());
            let mut bin = Vec::new();
            write_binary(&mut bin, &v).unwrap();
            prop_assert_eq!(read_binary(&bin).unwrap(), v);
        }
    }
}
