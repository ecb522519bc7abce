//! ESRI-style ASCII grid reader/writer.

use std::fmt::Write as _;
use std::path::Path;

use super::{GridGeoref, GridRaster};
use crate::error::{Error, Result};
use crate::num::fmt_f64;

const HEADER_KEYS: [&str; 6] = ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"];

pub fn read_ascii_grid(path: impl AsRef<Path>) -> Result<GridRaster> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text)
}

pub fn parse_ascii_grid(text: &str) -> Result<GridRaster> {
    let mut header: [Option<f64>; 6] = [None; 6];
    let mut lines = text.lines().enumerate();

    for _ in 0..HEADER_KEYS.len() {
        let (i, line) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: text.lines().count() + 1, msg: "truncated header".into() })?;
        let line_no = i + 1;
        let mut parts = line.split_whitespace();
        let (Some(key), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse { line: line_no, msg: format!("expected `key value`, got {line:?}") });
        };
        let slot = HEADER_KEYS
            .iter()
            .position(|k| k.eq_ignore_ascii_case(key))
            .ok_or_else(|| Error::Parse { line: line_no, msg: format!("unknown header key {key:?}") })?;
        if header[slot].is_some() {
            return Err(Error::Parse { line: line_no, msg: format!("duplicate header key {key:?}") });
        }
        let v: f64 = val
            .parse()
            .map_err(|_| Error::Parse { line: line_no, msg: format!("bad header value {val:?}") })?;
        header[slot] = Some(v);
    }
    let [n_cols, n_rows, x_ll, y_ll, cell_size, nodata] = header.map(|v| v.unwrap());
    let count = |v: f64, name: &str| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::Parse { line: 1, msg: format!("{name} must be a positive integer, got {v}") })
        }
    };
    let georef = GridGeoref::new(count(n_cols, "ncols")?, count(n_rows, "nrows")?, x_ll, y_ll, cell_size, nodata)?;

    let mut values = Vec::with_capacity(georef.n_cells());
    for (i, line) in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::ParseToken { line: i + 1, token: tok.to_string() })?;
            if georef.is_nodata(v) {
                values.push(nodata);
            } else if v.is_finite() {
                values.push(v);
            } else {
                return Err(Error::ParseToken { line: i + 1, token: tok.to_string() });
            }
        }
    }
    if values.len() != georef.n_cells() {
        return Err(Error::Shape(format!(
            "header declares {}x{} = {} values, found {}",
            georef.n_rows,
            georef.n_cols,
            georef.n_cells(),
            values.len()
        )));
    }
    Ok(GridRaster { georef, values })
}

pub fn render_ascii_grid(raster: &GridRaster) -> String {
    let g = &raster.georef;
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", g.n_cols);
    let _ = writeln!(out, "nrows {}", g.n_rows);
    let _ = writeln!(out, "xllcorner {}", fmt_f64(g.x_ll));
    let _ = writeln!(out, "yllcorner {}", fmt_f64(g.y_ll));
    let _ = writeln!(out, "cellsize {}", fmt_f64(g.cell_size));
    let _ = writeln!(out, "NODATA_value {}", fmt_f64(g.nodata));
    for row in raster.values.chunks(g.n_cols) {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_ascii_grid(raster: &GridRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    raster.georef.validate()?;
    if raster.values.len() != raster.georef.n_cells() {
        return Err(Error::Shape("raster value count does not match georef".into()));
    }
    std::fs::write(path, render_ascii_grid(raster)).map_err(|e| Error::io(path, e))
}
