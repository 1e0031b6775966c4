//! Binary dense-array files.
//!
//! Layout: a 16-byte header followed by `rows * cols` little-endian `f64`
//! values in row-major order.
//!
//! | offset | size | content                    |
//! |--------|------|----------------------------|
//! | 0      | 8    | magic `b"RL1DENSE"`        |
//! | 8      | 4    | rows, `u32` little-endian  |
//! | 12     | 4    | cols, `u32` little-endian  |
//!
//! Matrices use `(n, N)`. Vectors are stored as a single column `(len, 1)`;
//! readers also accept a single row.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sensing::SensingMatrix;
use crate::sigcore::SignalVector;

pub const MAGIC: &[u8; 8] = b"RL1DENSE";
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseArray {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

pub fn write_dense<W: Write>(mut w: W, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            what: "array data length",
            expected: rows * cols,
            got: data.len(),
        });
    }
    let r = u32::try_from(rows).map_err(|_| Error::Format("row count exceeds u32".into()))?;
    let c = u32::try_from(cols).map_err(|_| Error::Format("column count exceeds u32".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&r.to_le_bytes())?;
    w.write_all(&c.to_le_bytes())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dense<R: Read>(mut r: R) -> Result<DenseArray> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("file shorter than the 16-byte header".into()))?;
    if &header[..8] != MAGIC {
        return Err(Error::Format("bad magic; not a dense array file".into()));
    }
    let rows = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let expected = rows * cols * 8;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "{}x{} array needs {} payload bytes, found {}",
            rows,
            cols,
            expected,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DenseArray { rows, cols, data })
}

pub fn write_dense_file(path: &Path, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
    write_dense(BufWriter::new(f), rows, cols, data)
}

pub fn read_dense_file(path: &Path) -> Result<DenseArray> {
    let f = File::open(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
    read_dense(BufReader::new(f))
}

pub fn write_matrix(path: &Path, a: &SensingMatrix) -> Result<()> {
    write_dense_file(path, a.rows(), a.cols(), &a.to_row_major())
}

pub fn read_matrix(path: &Path) -> Result<SensingMatrix> {
    let d = read_dense_file(path)?;
    SensingMatrix::from_row_slice(d.rows, d.cols, &d.data)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    write_dense_file(path, v.len(), 1, v)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let d = read_dense_file(path)?;
    if d.rows != 1 && d.cols != 1 {
        return Err(Error::Format(format!(
            "expected a vector, found a {}x{} array",
            d.rows, d.cols
        )));
    }
    Ok(d.data)
}

pub fn read_signal(path: &Path) -> Result<SignalVector> {
    SignalVector::new(read_vector(path)?)
}
