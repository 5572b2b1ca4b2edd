//! Line-oriented text encoding for parameter tables.
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! write/read cycle reproduces every bit.

use std::io::Write;
use std::str::FromStr;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

pub(crate) const FORMAT_VERSION: u32 = 1;

pub(crate) fn write_version<W: Write>(w: &mut W) -> Result<()> {
    writeln!(w, "# format {FORMAT_VERSION}")?;
    Ok(())
}

pub(crate) fn write_row<W: Write>(w: &mut W, row: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut first = true;
    for x in row {
        if !first {
            w.write_all(b" ")?;
        }
        write!(w, "{x}")?;
        first = false;
    }
    w.write_all(b"\n")?;
    Ok(())
}

pub(crate) fn write_table<W: Write>(w: &mut W, table: &Array2<f64>) -> Result<()> {
    for row in table.rows() {
        write_row(w, row.iter().copied())?;
    }
    Ok(())
}

/// Cursor over the significant lines of a model or spec file.
pub(crate) struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines().enumerate(),
            line_no: 0,
        }
    }

    pub(crate) fn line_no(&self) -> usize {
        self.line_no
    }

    fn next_line(&mut self) -> Result<Option<&'a str>> {
        for (idx, line) in self.lines.by_ref() {
            self.line_no = idx + 1;
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("format ") {
                    if v.trim() != FORMAT_VERSION.to_string() {
                        return Err(Error::format(
                            self.line_no,
                            format!("unsupported format version {}", v.trim()),
                        ));
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            return Ok(Some(line));
        }
        Ok(None)
    }

    fn require_line(&mut self, what: &str) -> Result<&'a str> {
        self.next_line()?.ok_or_else(|| {
            Error::format(
                self.line_no + 1,
                format!("unexpected end of input, expected {what}"),
            )
        })
    }

    /// Reads a header line starting with `tag` and returns the remaining fields.
    pub(crate) fn header(&mut self, tag: &str) -> Result<Vec<&'a str>> {
        let line = self.require_line(tag)?;
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some(t) if t == tag => Ok(fields.collect()),
            Some(t) => Err(Error::format(
                self.line_no,
                format!("expected `{tag}` header, found `{t}`"),
            )),
            None => unreachable!("blank lines are skipped"),
        }
    }

    /// First token of the next significant line, without consuming it.
    pub(crate) fn peek_tag(&self) -> Result<&'a str> {
        let mut ahead = Reader {
            lines: self.lines.clone(),
            line_no: self.line_no,
        };
        let line = ahead.require_line("a header")?;
        Ok(line.split_whitespace().next().expect("non-empty line"))
    }

    pub(crate) fn row(&mut self, len: usize) -> Result<Vec<f64>> {
        let line = self.require_line("a row of probabilities")?;
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::format(self.line_no, format!("invalid number {tok:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != len {
            return Err(Error::format(
                self.line_no,
                format!("expected {len} values, found {}", row.len()),
            ));
        }
        if let Some(bad) = row.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::format(
                self.line_no,
                format!("invalid probability {bad}"),
            ));
        }
        Ok(row)
    }

    pub(crate) fn table(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.row(cols)?);
        }
        Ok(Array2::from_shape_vec((rows, cols), data).expect("shape matches data"))
    }

    pub(crate) fn table3(&mut self, d0: usize, d1: usize, d2: usize) -> Result<Array3<f64>> {
        let mut data = Vec::with_capacity(d0 * d1 * d2);
        for _ in 0..d0 * d1 {
            data.extend(self.row(d2)?);
        }
        Ok(Array3::from_shape_vec((d0, d1, d2), data).expect("shape matches data"))
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        match self.next_line()? {
            None => Ok(()),
            Some(_) => Err(Error::format(self.line_no, "trailing content")),
        }
    }
}

pub(crate) fn parse_field<T: FromStr>(
    fields: &[&str],
    idx: usize,
    name: &str,
    line: usize,
) -> Result<T> {
    fields
        .get(idx)
        .ok_or_else(|| Error::format(line, format!("missing header field {name}")))?
        .parse()
        .map_err(|_| Error::format(line, format!("invalid header field {name}")))
}

pub(crate) fn expect_fields(fields: &[&str], n: usize, line: usize) -> Result<()> {
    if fields.len() != n {
        return Err(Error::format(
            line,
            format!("expected {n} header fields, found {}", fields.len()),
        ));
    }
    Ok(())
}
