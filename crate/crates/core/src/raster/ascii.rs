//! ESRI-style ASCII grid reader and canonical writer.
//!
//! ```text
//! ncols 4
//! nrows 2
//! xllcorner 0
//! yllcorner 0
//! cellsize 10
//! NODATA_value -9999
//! 1 2 3 -9999
//! 5 6 7 8
//! ```
//!
//! The writer emits a fixed key order, LF newlines, cell values as `%.6g`
//! and header values as `%.12g`, so `write(read(write(g)))` is byte-stable.

use super::{GeoTransform, Grid, GridKind};
use crate::{Error, Result};

const CELL_DIGITS: usize = 6;
const HEADER_DIGITS: usize = 12;

/// Formats `x` like C's `printf("%.*g", precision, x)`.
pub fn format_g(x: f64, precision: usize) -> String {
    let p = precision.max(1);
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = strip_trailing_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        strip_trailing_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_trailing_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Default)]
struct Header {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<f64>,
    yll: Option<f64>,
    cellsize: Option<f64>,
    nodata: Option<f64>,
}

/// Parses an ASCII grid into a continuous [`Grid`]; row 0 is the northern row.
pub fn read_ascii_grid(bytes: &[u8]) -> Result<Grid> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_err(1, format!("not UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    let mut header = Header::default();

    while let Some(&(lineno, line)) = lines.peek() {
        let mut toks = line.split_whitespace();
        let Some(key) = toks.next() else {
            lines.next();
            continue;
        };
        if key.parse::<f64>().is_ok() || key.starts_with('-') {
            break;
        }
        let value = toks
            .next()
            .ok_or_else(|| parse_err(lineno, format!("header key '{key}' has no value")))?;
        if toks.next().is_some() {
            return Err(parse_err(lineno, format!("trailing tokens after '{key}'")));
        }
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(lineno, format!("non-numeric value '{v}' for '{key}'")))
        };
        let count = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| parse_err(lineno, format!("'{key}' must be a positive integer, got '{v}'")))
        };
        match key.to_ascii_lowercase().as_str() {
            "ncols" => header.ncols = Some(count(value)?),
            "nrows" => header.nrows = Some(count(value)?),
            "xllcorner" => header.xll = Some(num(value)?),
            "yllcorner" => header.yll = Some(num(value)?),
            "cellsize" => header.cellsize = Some(num(value)?),
            "nodata_value" => header.nodata = Some(num(value)?),
            _ => return Err(parse_err(lineno, format!("unknown header key '{key}'"))),
        }
        lines.next();
    }

    let body_line = lines.peek().map(|&(n, _)| n).unwrap_or(text.lines().count() + 1);
    let missing = |k: &str| parse_err(body_line, format!("missing required header key '{k}'"));
    let ncols = header.ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = header.nrows.ok_or_else(|| missing("nrows"))?;
    let xll = header.xll.ok_or_else(|| missing("xllcorner"))?;
    let yll = header.yll.ok_or_else(|| missing("yllcorner"))?;
    let cellsize = header.cellsize.ok_or_else(|| missing("cellsize"))?;
    if cellsize <= 0.0 {
        return Err(parse_err(body_line, "cellsize must be positive"));
    }

    let mut data = Vec::with_capacity(ncols * nrows);
    let mut rows_read = 0;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if rows_read == nrows {
            return Err(parse_err(lineno, format!("more than nrows={nrows} data rows")));
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("non-numeric cell '{tok}'")))?;
            if !v.is_finite() && header.nodata != Some(v) {
                return Err(parse_err(lineno, format!("non-finite cell '{tok}'")));
            }
            data.push(v);
        }
        let got = data.len() - before;
        if got != ncols {
            return Err(parse_err(
                lineno,
                format!("row has {got} values, expected ncols={ncols}"),
            ));
        }
        rows_read += 1;
    }
    if rows_read != nrows {
        return Err(parse_err(
            text.lines().count() + 1,
            format!("found {rows_read} data rows, expected nrows={nrows}"),
        ));
    }

    let transform = GeoTransform::north_up(xll, yll + nrows as f64 * cellsize, cellsize);
    Grid::new(ncols, nrows, transform, data, header.nodata, GridKind::Continuous)
}

/// Canonical ASCII serialization. Requires a north-up transform with square pixels.
pub fn write_ascii_grid(grid: &Grid) -> Result<Vec<u8>> {
    let t = grid.transform();
    if t.is_sheared() {
        return Err(Error::UnsupportedFormat(
            "ASCII grids cannot represent a sheared transform".into(),
        ));
    }
    if !(t.pixel_w > 0.0 && t.pixel_h == -t.pixel_w) {
        return Err(Error::UnsupportedFormat(format!(
            "ASCII grids need north-up square pixels, got {}x{}",
            t.pixel_w, t.pixel_h
        )));
    }
    let yll = t.origin_y + grid.height() as f64 * t.pixel_h;
    let mut out = String::new();
    out.push_str(&format!("ncols {}\n", grid.width()));
    out.push_str(&format!("nrows {}\n", grid.height()));
    out.push_str(&format!("xllcorner {}\n", format_g(t.origin_x, HEADER_DIGITS)));
    out.push_str(&format!("yllcorner {}\n", format_g(yll, HEADER_DIGITS)));
    out.push_str(&format!("cellsize {}\n", format_g(t.pixel_w, HEADER_DIGITS)));
    let nodata_token = grid.nodata().map(|nd| format_g(nd, HEADER_DIGITS));
    if let Some(tok) = &nodata_token {
        out.push_str(&format!("NODATA_value {tok}\n"));
    }
    for row in grid.data().chunks(grid.width()) {
        let cells: Vec<String> = row
            .iter()
            .map(|&v| match &nodata_token {
                Some(tok) if grid.is_nodata_value(v) => tok.clone(),
                _ => format_g(v, CELL_DIGITS),
            })
            .collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    Ok(out.into_bytes())
}
