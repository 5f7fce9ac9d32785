//! Matrix Market input and output for symmetric real matrices, plus plain
//! text vector files (one value per line).
//!
//! Supported inputs: `matrix coordinate real symmetric`,
//! `matrix array real symmetric`, and the `integer` field promoted to real.
//! Anything else (complex, pattern, general or skew symmetry, non-square
//! sizes) is rejected with a format error naming the offending field.
//!
//! Coordinate files may store either triangle; every off-diagonal entry is
//! mirrored, and a collision after mirroring (the file stored both (i,j)
//! and (j,i), or stored one of them twice) is reported as a duplicate.
//! Array files follow the standard packed layout for symmetric matrices:
//! the lower triangle by columns.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::linalg::SpdOperator;

/// Upper bound on accepted matrix dimensions; a header declaring more rows
/// than this is rejected before any allocation is sized from it.
pub const MAX_DIMENSION: usize = 10_000_000;

fn format_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("line {line}: {msg}"))
}

struct Lines<R> {
    reader: R,
    buf: String,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R) -> Self {
        Lines {
            reader,
            buf: String::new(),
            line: 0,
        }
    }

    /// Next line verbatim (trimmed); used for the banner, which starts
    /// with `%` and must not be skipped as a comment.
    fn next_raw(&mut self) -> Result<Option<(usize, &str)>> {
        self.buf.clear();
        let n = self.reader.read_line(&mut self.buf)?;
        if n == 0 {
            return Ok(None);
        }
        self.line += 1;
        Ok(Some((self.line, self.buf.trim())))
    }

    /// Next line that is neither blank nor a `%` comment, trimmed.
    fn next_data(&mut self) -> Result<Option<(usize, &str)>> {
        loop {
            self.buf.clear();
            let n = self.reader.read_line(&mut self.buf)?;
            if n == 0 {
                return Ok(None);
            }
            self.line += 1;
            let t = self.buf.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            // borrow gymnastics: re-trim from the owned buffer
            let start = self.buf.find(|c: char| !c.is_whitespace()).unwrap();
            let end = self.buf.trim_end().len();
            return Ok(Some((self.line, &self.buf[start..end])));
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MmFormat {
    Coordinate,
    Array,
}

/// Parses and validates the `%%MatrixMarket` banner.
fn parse_banner(line_no: usize, line: &str) -> Result<MmFormat> {
    let mut tok = line.split_whitespace();
    let banner = tok.next().unwrap_or("");
    if !banner.eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(format_err(
            line_no,
            "missing `%%MatrixMarket` banner on the first line",
        ));
    }
    let object = tok.next().unwrap_or("").to_ascii_lowercase();
    let format = tok.next().unwrap_or("").to_ascii_lowercase();
    let field = tok.next().unwrap_or("").to_ascii_lowercase();
    let symmetry = tok.next().unwrap_or("").to_ascii_lowercase();
    if object != "matrix" {
        return Err(format_err(
            line_no,
            format!("object `{object}` is not supported; expected `matrix`"),
        ));
    }
    let fmt = match format.as_str() {
        "coordinate" => MmFormat::Coordinate,
        "array" => MmFormat::Array,
        other => {
            return Err(format_err(
                line_no,
                format!("format `{other}` is not supported; expected `coordinate` or `array`"),
            ))
        }
    };
    match field.as_str() {
        "real" | "integer" => {}
        other => return Err(format_err(
            line_no,
            format!(
                "field `{other}` is not supported; only `real` and `integer` matrices are accepted"
            ),
        )),
    }
    if symmetry != "symmetric" {
        return Err(format_err(
            line_no,
            format!("symmetry `{symmetry}` is not supported; the matrix must be `symmetric`"),
        ));
    }
    Ok(fmt)
}

fn parse_index(line: usize, what: &str, tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| format_err(line, format!("{what} `{tok}` is not a valid index")))
}

fn parse_value(line: usize, tok: &str) -> Result<f64> {
    let v = tok
        .parse::<f64>()
        .map_err(|_| format_err(line, format!("value `{tok}` is not a valid real number")))?;
    if !v.is_finite() {
        return Err(format_err(line, format!("value `{tok}` is not finite")));
    }
    Ok(v)
}

/// Sorts triplets row-major, rejects duplicates, and assembles CSR arrays.
fn assemble_csr(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<SpdOperator> {
    entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    for w in entries.windows(2) {
        if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
            return Err(Error::Format(format!(
                "duplicate entry at ({}, {}) after symmetric completion",
                w[0].0 + 1,
                w[0].1 + 1
            )));
        }
    }
    let mut row_offsets = vec![0usize; n + 1];
    for &(i, _, _) in &entries {
        row_offsets[i + 1] += 1;
    }
    for i in 0..n {
        row_offsets[i + 1] += row_offsets[i];
    }
    let col_indices: Vec<usize> = entries.iter().map(|e| e.1).collect();
    let values: Vec<f64> = entries.iter().map(|e| e.2).collect();
    SpdOperator::csr(n, row_offsets, col_indices, values)
}

/// Reads a symmetric Matrix Market matrix into a CSR operator.
///
/// Both triangles are populated regardless of which one the file stores.
pub fn read_symmetric_csr<R: BufRead>(reader: R) -> Result<SpdOperator> {
    let mut lines = Lines::new(reader);
    let Some((ln, banner)) = lines.next_raw()? else {
        return Err(Error::Format("empty file: no Matrix Market banner".into()));
    };
    let fmt = parse_banner(ln, banner)?;

    let Some((ln, size)) = lines.next_data()? else {
        return Err(Error::Format("file ends before the size line".into()));
    };
    let toks: Vec<&str> = size.split_whitespace().collect();
    match fmt {
        MmFormat::Coordinate => {
            if toks.len() != 3 {
                return Err(format_err(
                    ln,
                    format!("coordinate size line needs `rows cols nnz`, got `{size}`"),
                ));
            }
            let rows = parse_index(ln, "row count", toks[0])?;
            let cols = parse_index(ln, "column count", toks[1])?;
            let nnz = parse_index(ln, "entry count", toks[2])?;
            if rows != cols {
                return Err(format_err(
                    ln,
                    format!("matrix must be square, got {rows} x {cols}"),
                ));
            }
            if rows == 0 {
                return Err(format_err(ln, "matrix dimension must be at least 1"));
            }
            if rows > MAX_DIMENSION {
                return Err(format_err(
                    ln,
                    format!("dimension {rows} exceeds the supported maximum {MAX_DIMENSION}"),
                ));
            }
            let n = rows;
            let mut entries: Vec<(usize, usize, f64)> = Vec::new();
            for parsed in 0..nnz {
                let Some((ln, entry)) = lines.next_data()? else {
                    return Err(Error::Format(format!(
                        "file ends after {parsed} of {nnz} entries"
                    )));
                };
                let t: Vec<&str> = entry.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(format_err(
                        ln,
                        format!("entry needs `row col value`, got `{entry}`"),
                    ));
                }
                let i = parse_index(ln, "row index", t[0])?;
                let j = parse_index(ln, "column index", t[1])?;
                let v = parse_value(ln, t[2])?;
                if i < 1 || i > n {
                    return Err(format_err(ln, format!("row index {i} not in 1..={n}")));
                }
                if j < 1 || j > n {
                    return Err(format_err(ln, format!("column index {j} not in 1..={n}")));
                }
                entries.push((i - 1, j - 1, v));
                if i != j {
                    entries.push((j - 1, i - 1, v));
                }
            }
            if let Some((ln, extra)) = lines.next_data()? {
                return Err(format_err(
                    ln,
                    format!("unexpected data after {nnz} entries: `{extra}`"),
                ));
            }
            assemble_csr(n, entries)
        }
        MmFormat::Array => {
            if toks.len() != 2 {
                return Err(format_err(
                    ln,
                    format!("array size line needs `rows cols`, got `{size}`"),
                ));
            }
            let rows = parse_index(ln, "row count", toks[0])?;
            let cols = parse_index(ln, "column count", toks[1])?;
            if rows != cols {
                return Err(format_err(
                    ln,
                    format!("matrix must be square, got {rows} x {cols}"),
                ));
            }
            if rows == 0 {
                return Err(format_err(ln, "matrix dimension must be at least 1"));
            }
            if rows > 20_000 {
                return Err(format_err(
                    ln,
                    format!("array format at dimension {rows} is unreasonably dense; use coordinate format"),
                ));
            }
            let n = rows;
            // lower triangle packed by columns: (j..n, j) for j = 0..n
            let want = n * (n + 1) / 2;
            // grown as values arrive so memory stays proportional to the file
            let mut entries: Vec<(usize, usize, f64)> = Vec::new();
            let mut got = 0usize;
            let mut col = 0usize;
            let mut row = 0usize;
            'outer: while got < want {
                let Some((ln, data)) = lines.next_data()? else {
                    return Err(Error::Format(format!(
                        "file ends after {got} of {want} packed values"
                    )));
                };
                for tok in data.split_whitespace() {
                    if got == want {
                        return Err(format_err(
                            ln,
                            format!("unexpected data after {want} packed values: `{tok}`"),
                        ));
                    }
                    let v = parse_value(ln, tok)?;
                    if v != 0.0 {
                        entries.push((row, col, v));
                        if row != col {
                            entries.push((col, row, v));
                        }
                    }
                    got += 1;
                    row += 1;
                    if row == n {
                        col += 1;
                        row = col;
                    }
                    if got == want {
                        continue 'outer;
                    }
                }
            }
            if let Some((ln, extra)) = lines.next_data()? {
                return Err(format_err(
                    ln,
                    format!("unexpected data after {want} packed values: `{extra}`"),
                ));
            }
            assemble_csr(n, entries)
        }
    }
}

/// Writes an operator as `coordinate real symmetric`, storing the lower
/// triangle. Values round-trip exactly through [`read_symmetric_csr`].
pub fn write_coordinate<W: Write>(mut w: W, op: &SpdOperator) -> Result<()> {
    let triplets = op.triplets();
    let lower: Vec<&(usize, usize, f64)> = triplets.iter().filter(|(i, j, _)| i >= j).collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", op.dimension(), op.dimension(), lower.len())?;
    for (i, j, v) in lower {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Reads a plain text vector: one value per line, `%` and `#` comments and
/// blank lines ignored.
pub fn read_vector<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut line_no = 0usize;
    for line in reader.lines() {
        let line = line?;
        line_no += 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        out.push(parse_value(line_no, t)?);
    }
    Ok(out)
}

/// Writes a vector in the format [`read_vector`] accepts, exactly
/// round-tripping every value.
pub fn write_vector<W: Write>(mut w: W, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(w, "{v:e}")?;
    }
    Ok(())
}
