//! Prediction files exchanged with external forecasters.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "SYNTPRED"
//! 8       4     version (u32) = 1
//! 12      8     window count (u64)
//! 20      8     variates (u64)
//! 28      8     horizon (u64)
//! 36      32    SHA-256 of the payload
//! 68      ...   payload: f64 LE in [window][variate][step] order
//! ```
//!
//! The CSV form has header `window,variate,h0,...,h{H-1}` and one row per
//! `(window, variate)` in the same order.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::WindowTensor;

pub const MAGIC: &[u8; 8] = b"SYNTPRED";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 68;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionFormat {
    Binary,
    Csv,
}

impl FromStr for PredictionFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bin" | "binary" => Ok(PredictionFormat::Binary),
            "csv" => Ok(PredictionFormat::Csv),
            other => Err(Error::invalid("format", format!("unknown format {other:?}; use bin or csv"))),
        }
    }
}

impl PredictionFormat {
    /// `.csv` files are CSV, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => PredictionFormat::Csv,
            _ => PredictionFormat::Binary,
        }
    }
}

pub fn encode_binary(t: &WindowTensor) -> Vec<u8> {
    let mut payload = Vec::with_capacity(t.as_slice().len() * 8);
    for x in t.as_slice() {
        payload.extend_from_slice(&x.to_le_bytes());
    }
    let (w, v, h) = t.dims();
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [w, v, h] {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&Sha256::digest(&payload));
    out.extend_from_slice(&payload);
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<WindowTensor> {
    let bad = |m: String| Error::malformed("prediction file", m);
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(bad("missing SYNTPRED header".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Version { found: version.to_string(), supported: VERSION });
    }
    let dim = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()) as usize;
    let (w, v, h) = (dim(12), dim(20), dim(28));
    let payload = &bytes[HEADER_LEN..];
    let expected = w.checked_mul(v).and_then(|x| x.checked_mul(h)).and_then(|x| x.checked_mul(8));
    if expected != Some(payload.len()) {
        return Err(Error::shape(
            "prediction payload bytes",
            expected.map_or("overflow".to_string(), |e| e.to_string()),
            payload.len(),
        ));
    }
    let actual = Sha256::digest(payload);
    if actual.as_slice() != &bytes[36..68] {
        return Err(Error::Checksum {
            file: "prediction file".into(),
            expected: hex::encode(&bytes[36..68]),
            actual: hex::encode(actual),
        });
    }
    let data = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    WindowTensor::from_vec(w, v, h, data)
}

pub fn encode_csv(t: &WindowTensor) -> Result<Vec<u8>> {
    let (w, v, h) = t.dims();
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["window".to_string(), "variate".to_string()];
    header.extend((0..h).map(|i| format!("h{i}")));
    out.write_record(&header)?;
    let mut row = Vec::with_capacity(h + 2);
    for win in 0..w {
        for var in 0..v {
            row.clear();
            row.push(win.to_string());
            row.push(var.to_string());
            row.extend(t.series(win, var).iter().map(|x| x.to_string()));
            out.write_record(&row)?;
        }
    }
    out.into_inner().map_err(|e| Error::malformed("prediction csv", e.to_string()))
}

pub fn decode_csv(bytes: &[u8]) -> Result<WindowTensor> {
    let bad = |m: String| Error::malformed("prediction csv", m);
    let mut rdr = csv::Reader::from_reader(bytes);
    let header = rdr.headers()?.clone();
    if header.len() < 3 || &header[0] != "window" || &header[1] != "variate" {
        return Err(bad("header must start with window,variate,h0".into()));
    }
    let h = header.len() - 2;
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != format!("h{i}") {
            return Err(bad(format!("column {} is {name:?}, expected h{i}", i + 2)));
        }
    }
    let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field =
            |i: usize| -> Result<&str> { rec.get(i).ok_or_else(|| bad(format!("row {line}: short row"))) };
        let idx = |i: usize| -> Result<usize> {
            field(i)?.trim().parse().map_err(|e| bad(format!("row {line}: {e}")))
        };
        let values = (0..h)
            .map(|s| field(s + 2)?.trim().parse::<f64>().map_err(|e| bad(format!("row {line}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push((idx(0)?, idx(1)?, values));
    }
    let v = rows.iter().take_while(|r| r.0 == 0).count();
    if v == 0 || rows.len() % v != 0 {
        return Err(bad(format!("{} rows do not form whole windows", rows.len())));
    }
    let w = rows.len() / v;
    let mut data = Vec::with_capacity(rows.len() * h);
    for (i, (win, var, values)) in rows.into_iter().enumerate() {
        if (win, var) != (i / v, i % v) {
            return Err(bad(format!(
                "row {i} is (window {win}, variate {var}), expected ({}, {})",
                i / v,
                i % v
            )));
        }
        data.extend(values);
    }
    WindowTensor::from_vec(w, v, h, data)
}

pub fn write_predictions(t: &WindowTensor, path: &Path, format: PredictionFormat) -> Result<()> {
    let bytes = match format {
        PredictionFormat::Binary => encode_binary(t),
        PredictionFormat::Csv => encode_csv(t)?,
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path, format: PredictionFormat) -> Result<WindowTensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        PredictionFormat::Binary => decode_binary(&bytes),
        PredictionFormat::Csv => decode_csv(&bytes),
    }
}
