//! Matrix interchange: a long-format CSV (`row,col,re,im`) and a JSON
//! object holding the column-stacked entries of a square matrix.
//!
//! Floats are written with Rust's shortest round-trip formatting, so both
//! formats reproduce the written bits exactly on read.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{perfect_sqrt, ComplexMatrix};

pub const FORMAT_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 4] = ["row", "col", "re", "im"];

/// JSON form of a square matrix.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub dim: usize,
    /// `[re, im]` pairs in column-stacking order.
    pub entries: Vec<[f64; 2]>,
}

pub(crate) fn default_version() -> u32 {
    FORMAT_VERSION
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invariant("square", "JSON matrix format holds square matrices only"));
        }
        Ok(MatrixJson {
            format_version: FORMAT_VERSION,
            dim: m.nrows(),
            entries: m.as_slice().iter().map(|c| [c.re, c.im]).collect(),
        })
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::Parse(format!(
                "matrix JSON declares dim {} but holds {} entries",
                self.dim,
                self.entries.len()
            )));
        }
        let data: Vec<C64> = self.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
        Ok(ComplexMatrix::from_column_slice(self.dim, self.dim, &data))
    }
}

pub fn write_matrix_json<W: Write>(m: &ComplexMatrix, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, &MatrixJson::from_matrix(m)?)?;
    Ok(())
}

pub fn read_matrix_json<R: Read>(r: R) -> Result<ComplexMatrix> {
    let doc: MatrixJson = serde_json::from_reader(r)?;
    doc.to_matrix()
}

pub fn matrix_to_json_string(m: &ComplexMatrix) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MatrixJson::from_matrix(m)?)?)
}

pub fn matrix_from_json_str(s: &str) -> Result<ComplexMatrix> {
    let doc: MatrixJson = serde_json::from_str(s)?;
    doc.to_matrix()
}

/// Writes every entry, zeros included, so the dimensions are recoverable
/// from the maximum indices.
pub fn write_matrix_csv<W: Write>(m: &ComplexMatrix, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Parse(e.to_string());
    out.write_record(CSV_HEADER).map_err(io)?;
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let c = m[(row, col)];
            out.write_record(&[row.to_string(), col.to_string(), format!("{:?}", c.re), format!("{:?}", c.im)])
                .map_err(io)?;
        }
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

pub fn matrix_to_csv_string(m: &ComplexMatrix) -> Result<String> {
    let mut buf = Vec::new();
    write_matrix_csv(m, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

/// Reads the long CSV format. Lines starting with `#` are ignored; entries
/// not listed are zero.
pub fn read_matrix_csv<R: Read>(r: R) -> Result<ComplexMatrix> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse(format!("expected header `row,col,re,im`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut triples = Vec::new();
    let (mut rows, mut cols) = (0usize, 0usize);
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Parse(format!("record {line}: missing field {i}")));
        let row: usize = field(0)?.parse().map_err(|e| Error::Parse(format!("record {line}: row: {e}")))?;
        let col: usize = field(1)?.parse().map_err(|e| Error::Parse(format!("record {line}: col: {e}")))?;
        let re: f64 = field(2)?.parse().map_err(|e| Error::Parse(format!("record {line}: re: {e}")))?;
        let im: f64 = field(3)?.parse().map_err(|e| Error::Parse(format!("record {line}: im: {e}")))?;
        rows = rows.max(row + 1);
        cols = cols.max(col + 1);
        triples.push((row, col, C64::new(re, im)));
    }
    if triples.is_empty() {
        return Err(Error::Parse("matrix CSV has no entries".into()));
    }
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (row, col, v) in triples {
        m[(row, col)] = v;
    }
    Ok(m)
}

/// Reads a square matrix from either format, chosen by the first
/// non-blank character (`{` means JSON).
pub fn read_matrix_auto(text: &str) -> Result<ComplexMatrix> {
    if text.trim_start().starts_with('{') {
        matrix_from_json_str(text)
    } else {
        read_matrix_csv(text.as_bytes())
    }
}

/// Dense grid CSV of a real matrix, one matrix row per line, no header.
pub fn real_grid_csv(rows: usize, cols: usize, value: impl Fn(usize, usize) -> f64) -> String {
    let mut s = String::new();
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| format!("{:?}", value(r, c))).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Square-ness check shared by readers of column-stacked vectors.
pub fn side_of_square(len: usize) -> Option<usize> {
    perfect_sqrt(len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::random_density_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_density_matrix(5, &mut rng).into_matrix();
        let text = matrix_to_csv_string(&m).unwrap();
        assert!(text.starts_with("row,col,re,im\n"));
        let back = read_matrix_csv(text.as_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(matrix_to_csv_string(&back).unwrap(), text);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = random_density_matrix(4, &mut rng).into_matrix();
        let text = matrix_to_json_string(&m).unwrap();
        let back = matrix_from_json_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(read_matrix_auto(&text).unwrap(), m);
    }

    #[test]
    fn csv_infers_dimensions_from_sparse_listing() {
        let text = "# comment\nrow,col,re,im\n0,0,0.5,0\n2,1,0,-0.25\n";
        let m = read_matrix_csv(text.as_bytes()).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (3, 2));
        assert_eq!(m[(2, 1)], C64::new(0.0, -0.25));
        assert_eq!(m[(1, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn json_rejects_inconsistent_dim() {
        let bad = r#"{"format_version":1,"dim":2,"entries":[[1,0]]}"#;
        assert!(matrix_from_json_str(bad).is_err());
    }
}
