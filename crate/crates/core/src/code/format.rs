//! Line-oriented text format for parity-check matrices.
//!
//! ```text
//! LDLC 1 <n> <d>
//! <row> <count> <col>:<value> <col>:<value> ...
//! ```
//!
//! One line per row, rows ascending, columns ascending within a row. Values
//! are written with the shortest decimal that round-trips exactly.

use std::fmt::Write;

use super::SparseParityCheck;
use crate::error::{Error, Result};

const MAGIC: &str = "LDLC";
const VERSION: &str = "1";

pub fn serialize_h(h: &SparseParityCheck) -> String {
    let mut out = String::with_capacity(h.nnz() * 24);
    writeln!(out, "{MAGIC} {VERSION} {} {}", h.n(), h.d()).unwrap();
    for (r, row) in h.rows().iter().enumerate() {
        write!(out, "{r} {}", row.len()).unwrap();
        for &(c, v) in row {
            write!(out, " {c}:{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| err(line, format!("invalid {what} '{s}'")))
}

pub fn parse_h(text: &str) -> Result<SparseParityCheck> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty input"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != MAGIC {
        return Err(err(1, "expected header 'LDLC 1 <n> <d>'"));
    }
    if fields[1] != VERSION {
        return Err(err(1, format!("unsupported version {}", fields[1])));
    }
    let n: usize = number(1, fields[2], "dimension")?;
    let d: usize = number(1, fields[3], "degree")?;
    if n == 0 {
        return Err(err(1, "dimension must be positive"));
    }

    let mut rows = Vec::with_capacity(n);
    for r in 0..n {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| err(r + 2, format!("expected {n} rows, found {r}")))?;
        let mut tokens = line.split_whitespace();
        let index: usize = number(lineno, tokens.next().unwrap_or(""), "row index")?;
        if index != r {
            return Err(err(lineno, format!("expected row {r}, found row {index}")));
        }
        let count: usize = number(lineno, tokens.next().unwrap_or(""), "entry count")?;
        if count > d {
            return Err(err(
                lineno,
                format!("row has {count} entries, degree is {d}"),
            ));
        }
        let mut row = Vec::with_capacity(count);
        for tok in tokens {
            let (c, v) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("malformed entry '{tok}'")))?;
            let c: usize = number(lineno, c, "column")?;
            let v: f64 = number(lineno, v, "value")?;
            if c >= n {
                return Err(err(lineno, format!("column {c} out of range")));
            }
            if !v.is_finite() || v == 0.0 {
                return Err(err(
                    lineno,
                    format!("entry value {v} is not a finite nonzero"),
                ));
            }
            if row.last().is_some_and(|&(prev, _)| prev >= c) {
                return Err(err(lineno, "columns must be strictly ascending"));
            }
            row.push((c, v));
        }
        if row.len() != count {
            return Err(err(
                lineno,
                format!("row declares {count} entries but lists {}", row.len()),
            ));
        }
        rows.push(row);
    }
    if let Some((lineno, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(err(lineno, format!("unexpected content '{extra}'")));
    }
    SparseParityCheck::from_rows(n, d, rows)
}
