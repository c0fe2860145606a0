//! Matrix Market exchange format: real/integer coordinate and array files,
//! general or symmetric storage.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, LinearOperator};
use crate::scalar::Scalar;

use super::{default_rhs, ProblemInstance, ProblemMeta, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

/// Parsed matrix with symmetric storage already expanded to both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMarket<T> {
    pub rows: usize,
    pub cols: usize,
    /// 0-based `(row, col, value)` entries.
    pub entries: Vec<(usize, usize, T)>,
    pub symmetry: Symmetry,
}

impl<T: Scalar> MatrixMarket<T> {
    pub fn to_csr(&self) -> Result<CsrMatrix<T>> {
        CsrMatrix::from_triplets(self.rows, self.cols, &self.entries)
    }

    /// Sparse operator (flagged symmetric for symmetric storage) with `b = A·1/‖A·1‖₂`.
    pub fn into_instance(self) -> Result<ProblemInstance<T>> {
        let op = LinearOperator::csr(self.to_csr()?, self.symmetry == Symmetry::Symmetric);
        let b = default_rhs(&op)?;
        Ok(ProblemInstance {
            meta: ProblemMeta {
                name: "matrix".into(),
                n: self.rows,
                kappa: None,
                sigma_list: None,
                source: Source::Synthetic,
                seed: None,
            },
            op,
            b,
        })
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next non-empty, non-comment line with its 1-based number.
    fn next_data(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            return Ok(Some((self.number, t.to_string())));
        }
        Ok(None)
    }
}

fn parse_num<T: Scalar>(tok: &str, line: usize) -> Result<T> {
    tok.parse::<f64>()
        .map(T::lit)
        .map_err(|_| parse_err(line, format!("invalid number {tok:?}")))
}

fn parse_index(tok: &str, line: usize, bound: usize) -> Result<usize> {
    let i: usize = tok
        .parse()
        .map_err(|_| parse_err(line, format!("invalid index {tok:?}")))?;
    if i == 0 || i > bound {
        return Err(parse_err(line, format!("index {i} outside 1..={bound}")));
    }
    Ok(i - 1)
}

/// Parses a Matrix Market matrix from `reader`.
pub fn parse_matrix_market<T: Scalar>(reader: impl BufRead) -> Result<MatrixMarket<T>> {
    let mut lines = Lines {
        inner: reader.lines(),
        number: 0,
    };
    let header = match lines.inner.next() {
        Some(h) => h?,
        None => return Err(parse_err(1, "empty file")),
    };
    lines.number = 1;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(
            1,
            "expected '%%MatrixMarket matrix <format> <field> <symmetry>'",
        ));
    }
    let layout = match fields[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unknown format {other:?}"))),
    };
    match fields[3].as_str() {
        "real" | "integer" | "double" => {}
        other @ ("complex" | "pattern") => {
            return Err(Error::UnsupportedFormat(format!("{other} field")))
        }
        other => return Err(parse_err(1, format!("unknown field {other:?}"))),
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other @ ("skew-symmetric" | "hermitian") => {
            return Err(Error::UnsupportedFormat(format!("{other} symmetry")))
        }
        other => return Err(parse_err(1, format!("unknown symmetry {other:?}"))),
    };

    let (size_line, size) = lines
        .next_data()?
        .ok_or_else(|| parse_err(lines.number, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| parse_err(size_line, format!("invalid size {t:?}")))
        })
        .collect::<Result<_>>()?;
    let want = if layout == Layout::Coordinate { 3 } else { 2 };
    if dims.len() != want {
        return Err(parse_err(
            size_line,
            format!("size line needs {want} integers"),
        ));
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetry == Symmetry::Symmetric && rows != cols {
        return Err(parse_err(size_line, "symmetric matrix must be square"));
    }

    let mut entries = Vec::new();
    let mut push = |i: usize, j: usize, v: T| {
        entries.push((i, j, v));
        if symmetry == Symmetry::Symmetric && i != j {
            entries.push((j, i, v));
        }
    };
    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            for _ in 0..nnz {
                let (ln, text) = lines
                    .next_data()?
                    .ok_or_else(|| parse_err(lines.number, format!("expected {nnz} entries")))?;
                let toks: Vec<&str> = text.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(parse_err(ln, "entry needs 'row col value'"));
                }
                let i = parse_index(toks[0], ln, rows)?;
                let j = parse_index(toks[1], ln, cols)?;
                if symmetry == Symmetry::Symmetric && j > i {
                    return Err(parse_err(
                        ln,
                        "symmetric storage must list the lower triangle",
                    ));
                }
                push(i, j, parse_num(toks[2], ln)?);
            }
        }
        Layout::Array => {
            for j in 0..cols {
                let start = if symmetry == Symmetry::Symmetric {
                    j
                } else {
                    0
                };
                for i in start..rows {
                    let (ln, text) = lines
                        .next_data()?
                        .ok_or_else(|| parse_err(lines.number, "too few array values"))?;
                    let v = parse_num(text.split_whitespace().next().unwrap_or_default(), ln)?;
                    if v != T::zero() {
                        push(i, j, v);
                    }
                }
            }
        }
    }
    if let Some((ln, _)) = lines.next_data()? {
        return Err(parse_err(ln, "unexpected trailing data"));
    }
    Ok(MatrixMarket {
        rows,
        cols,
        entries,
        symmetry,
    })
}

/// Writes a real general coordinate file (values in shortest round-trip form).
pub fn write_matrix_market<T: Scalar>(
    mut w: impl Write,
    rows: usize,
    cols: usize,
    entries: impl IntoIterator<Item = (usize, usize, T)>,
) -> Result<()> {
    let entries: Vec<_> = entries.into_iter().collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{rows} {cols} {}", entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Writes `v` as an `n × 1` real general array file.
pub fn write_matrix_market_vector<T: Scalar>(mut w: impl Write, v: &[T]) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", v.len())?;
    for x in v {
        writeln!(w, "{x}")?;
    }
    Ok(())
}

/// Reads a single-column Matrix Market file (array or coordinate) as a dense vector.
pub fn read_matrix_market_vector<T: Scalar>(reader: impl BufRead) -> Result<Vec<T>> {
    let mm = parse_matrix_market::<T>(reader)?;
    if mm.cols != 1 {
        return Err(Error::InvalidParameter(format!(
            "expected one column, found {}",
            mm.cols
        )));
    }
    let mut v = vec![T::zero(); mm.rows];
    for (i, _, x) in mm.entries {
        v[i] += x;
    }
    Ok(v)
}
