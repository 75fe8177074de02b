//! Matrix interchange: UTF-8 CSV (one row per line) and a little-endian
//! binary layout `LRMCMAT1 | n₁:u32 | n₂:u32 | n₁·n₂ × f64`, row-major.
//!
//! Observed (partially known) matrices use the same layouts with empty CSV
//! fields, or NaN in the binary layout, marking unobserved positions.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use super::ObservedMatrix;
use crate::error::{LrmcError, Result};
use crate::matops::{DenseMatrix, IndexSet, MaskedMatrix};

pub const BINARY_MAGIC: &[u8; 8] = b"LRMCMAT1";
const HEADER_LEN: usize = 16;

/// Cells of a parsed matrix file; `None` marks an unobserved entry.
struct Cells {
    rows: usize,
    cols: usize,
    values: Vec<Option<f64>>,
}

fn parse_csv(text: &str) -> Result<Cells> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for (c, field) in line.split(',').enumerate() {
            let field = field.trim();
            count += 1;
            if field.is_empty() {
                values.push(None);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| {
                LrmcError::format_at_line(lineno + 1, c + 1, format!("cannot parse `{field}` as a number"))
            })?;
            if !v.is_finite() {
                return Err(LrmcError::format_at_line(lineno + 1, c + 1, "non-finite value"));
            }
            values.push(Some(v));
        }
        match cols {
            None => cols = Some(count),
            Some(n) if n != count => {
                return Err(LrmcError::format_at_line(
                    lineno + 1,
                    count.min(n) + 1,
                    format!("expected {n} fields, found {count}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| LrmcError::format_at_line(1, 1, "empty matrix file"))?;
    Ok(Cells { rows, cols, values })
}

fn parse_binary(bytes: &[u8]) -> Result<Cells> {
    if bytes.len() < HEADER_LEN {
        return Err(LrmcError::format_at_byte(bytes.len(), "truncated header"));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    if rows == 0 || cols == 0 {
        return Err(LrmcError::format_at_byte(8, "zero dimension"));
    }
    let expected = HEADER_LEN + rows * cols * 8;
    if bytes.len() != expected {
        return Err(LrmcError::format_at_byte(
            bytes.len().min(expected),
            format!("expected {expected} bytes for a {rows}x{cols} matrix, found {}", bytes.len()),
        ));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (k, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if v.is_nan() {
            values.push(None);
        } else if v.is_infinite() {
            return Err(LrmcError::format_at_byte(HEADER_LEN + 8 * k, "infinite value"));
        } else {
            values.push(Some(v));
        }
    }
    Ok(Cells { rows, cols, values })
}

fn read_cells(path: &Path) -> Result<Cells> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        parse_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| {
            LrmcError::format_at_byte(e.utf8_error().valid_up_to(), "file is neither UTF-8 CSV nor LRMCMAT1 binary")
        })?;
        parse_csv(&text)
    }
}

/// Loads a fully specified matrix, sniffing the binary magic.
pub fn load_dense(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let cells = read_cells(path.as_ref())?;
    if let Some(k) = cells.values.iter().position(Option::is_none) {
        return Err(LrmcError::format_at_line(
            k / cells.cols + 1,
            k % cells.cols + 1,
            "missing value in a dense matrix",
        ));
    }
    DenseMatrix::from_row_major(cells.rows, cells.cols, cells.values.into_iter().flatten().collect())
}

/// Loads a matrix whose missing cells define the unobserved positions.
pub fn load_observed(path: impl AsRef<Path>) -> Result<ObservedMatrix> {
    let cells = read_cells(path.as_ref())?;
    let mut entries = Vec::new();
    let mut values = Vec::new();
    for (k, v) in cells.values.iter().enumerate() {
        if let Some(v) = v {
            entries.push(((k / cells.cols) as u32, (k % cells.cols) as u32));
            values.push(*v);
        }
    }
    if entries.is_empty() {
        return Err(LrmcError::format_at_line(1, 1, "no observed entries"));
    }
    let omega = Arc::new(IndexSet::from_sorted(cells.rows, cells.cols, entries));
    Ok(ObservedMatrix::new(MaskedMatrix::new(omega, values)?))
}

fn write_csv_rows(path: &Path, rows: usize, cols: usize, cell: impl Fn(usize, usize) -> Option<f64>) -> Result<()> {
    let mut out = String::with_capacity(rows * cols * 8);
    for i in 0..rows {
        for j in 0..cols {
            if j > 0 {
                out.push(',');
            }
            if let Some(v) = cell(i, j) {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn save_dense_csv(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_csv_rows(path.as_ref(), m.rows(), m.cols(), |i, j| Some(m.get(i, j)))
}

pub fn save_dense_binary(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

/// Writes observed entries, leaving unobserved cells empty.
pub fn save_observed_csv(y: &ObservedMatrix, path: impl AsRef<Path>) -> Result<()> {
    let (n1, n2) = y.shape();
    let data = y.data();
    write_csv_rows(path.as_ref(), n1, n2, |i, j| data.support().position(i, j).map(|p| data.values()[p]))
}

/// Coordinate list `row,col,value` of the nonzero entries.
pub fn save_sparse_csv(m: &MaskedMatrix, path: impl AsRef<Path>) -> Result<()> {
    let (n1, n2) = m.shape();
    let mut out = format!("# shape {n1} {n2}\nrow,col,value\n");
    for ((i, j), v) in m.support().iter().zip(m.values()) {
        if *v != 0.0 {
            out.push_str(&format!("{i},{j},{v}\n"));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a coordinate list written by [`save_sparse_csv`] as entries on `support`.
pub fn load_sparse_csv(path: impl AsRef<Path>, support: Arc<IndexSet>) -> Result<MaskedMatrix> {
    let text = fs::read_to_string(path)?;
    let mut values = vec![0.0; support.len()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "row,col,value" {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(LrmcError::format_at_line(lineno + 1, 1, "expected `row,col,value`"));
        }
        let parse_idx = |c: usize| -> Result<usize> {
            fields[c]
                .parse()
                .map_err(|_| LrmcError::format_at_line(lineno + 1, c + 1, "bad index"))
        };
        let (i, j) = (parse_idx(0)?, parse_idx(1)?);
        let v: f64 = fields[2]
            .parse()
            .map_err(|_| LrmcError::format_at_line(lineno + 1, 3, "bad value"))?;
        let pos = support.position(i, j).ok_or_else(|| {
            LrmcError::format_at_line(lineno + 1, 1, format!("({i}, {j}) is not an observed position"))
        })?;
        values[pos] = v;
    }
    MaskedMatrix::new(support, values)
}
