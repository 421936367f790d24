//! Tiny CSV helpers: full-precision number formatting and line splitting.

use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};

/// 17 significant digits, `inf` for +∞, `nan` for NaN.
pub(crate) fn num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

pub(crate) fn write_row<W: Write>(w: &mut W, fields: &[String]) -> io::Result<()> {
    writeln!(w, "{}", fields.join(","))
}

pub(crate) fn parse_num(s: &str, line: usize) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse::<f64>().map_err(|e| Error::Csv {
            line,
            message: format!("bad number {t:?}: {e}"),
        }),
    }
}

/// Yields `(line_number, fields)` for every non-empty line after the header.
pub(crate) fn records<R: BufRead>(r: R) -> impl Iterator<Item = Result<(usize, Vec<String>)>> {
    r.lines().enumerate().skip(1).filter_map(|(i, line)| match line {
        Err(e) => Some(Err(Error::Csv {
            line: i + 1,
            message: e.to_string(),
        })),
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l.split(',').map(|s| s.trim().to_string()).collect()))),
    })
}
