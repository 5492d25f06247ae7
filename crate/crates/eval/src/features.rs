//! Feature matrices in the `MCFV1` binary format or CSV.
//!
//! `MCFV1`: the bytes `MCFV`, version byte `1`, little-endian `u32 n`,
//! `u32 d`, then `n × d` little-endian `f32` values in row-major order.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::EvalError;

pub const MCFV_MAGIC: &[u8; 4] = b"MCFV";
pub const MCFV_VERSION: u8 = 1;

/// `n × d` feature matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    pub source: String,
    pub n: usize,
    pub d: usize,
    pub rows: Vec<f64>,
}

impl FeatureSet {
    pub fn new(source: impl Into<String>, n: usize, d: usize, rows: Vec<f64>) -> Result<Self, EvalError> {
        if rows.len() != n * d {
            return Err(EvalError::Format(format!("expected {} values, got {}", n * d, rows.len())));
        }
        if d == 0 {
            return Err(EvalError::Format("zero feature dimension".into()));
        }
        if let Some(i) = rows.iter().position(|v| !v.is_finite()) {
            return Err(EvalError::Format(format!("non-finite value in row {}", i / d)));
        }
        Ok(FeatureSet {
            source: source.into(),
            n,
            d,
            rows,
        })
    }

    pub fn from_rows(source: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self, EvalError> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(EvalError::Format(format!("row {i} has {} columns, expected {d}", rows[i].len())));
        }
        Self::new(source, rows.len(), d, rows.concat())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.rows)
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, idx: &[usize]) -> FeatureSet {
        let rows = idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        FeatureSet {
            source: self.source.clone(),
            n: idx.len(),
            d: self.d,
            rows,
        }
    }
}

pub fn read_mcfv(bytes: &[u8], source: &str) -> Result<FeatureSet, EvalError> {
    let bad = |m: &str| EvalError::Format(m.to_string());
    if bytes.len() < 13 || &bytes[..4] != MCFV_MAGIC {
        return Err(bad("missing MCFV header"));
    }
    if bytes[4] != MCFV_VERSION {
        return Err(EvalError::Format(format!("unsupported MCFV version {}", bytes[4])));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let (n, d) = (u32_at(5), u32_at(9));
    let expected = n
        .checked_mul(d)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(13))
        .ok_or_else(|| bad("header sizes overflow"))?;
    if bytes.len() != expected {
        return Err(EvalError::Format(format!(
            "payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let rows = bytes[13..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    FeatureSet::new(source, n, d, rows)
}

pub fn write_mcfv(set: &FeatureSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(13 + set.rows.len() * 4);
    out.extend_from_slice(MCFV_MAGIC);
    out.push(MCFV_VERSION);
    out.extend_from_slice(&(set.n as u32).to_le_bytes());
    out.extend_from_slice(&(set.d as u32).to_le_bytes());
    for v in &set.rows {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

/// Comma-separated rows; blank lines and `#` comments are skipped and a
/// non-numeric first line is treated as a header.
pub fn parse_csv(text: &str, source: &str) -> Result<FeatureSet, EvalError> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if rows.is_empty() && lineno == 0 => continue,
            Err(e) => return Err(EvalError::Format(format!("line {}: {e}", lineno + 1))),
        }
    }
    if rows.is_empty() {
        return Err(EvalError::Format("no rows".into()));
    }
    FeatureSet::from_rows(source, &rows)
}

/// Reads `MCFV1` when the file starts with the magic bytes, CSV otherwise.
pub fn load_features(path: &Path) -> Result<FeatureSet, EvalError> {
    let bytes = std::fs::read(path).map_err(|e| EvalError::Format(format!("{}: {e}", path.display())))?;
    let source = path.display().to_string();
    if bytes.starts_with(MCFV_MAGIC) {
        read_mcfv(&bytes, &source)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| EvalError::Format("neither MCFV1 nor UTF-8 CSV".into()))?;
        parse_csv(&text, &source)
    }
}
