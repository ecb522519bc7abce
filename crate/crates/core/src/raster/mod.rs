//! Georeferenced daily weather grids and extracted daily series.

mod ascii;
pub(crate) mod wxstack;

pub use ascii::{read_ascii_grid, write_ascii_grid, parse_ascii_grid, render_ascii_grid};
pub use wxstack::{read_stack, write_stack, decode_stack, encode_stack, STACK_MAGIC};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Point;

/// Grid layout: lower-left anchored, square cells, row 0 is the northernmost row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeoref {
    pub n_cols: usize,
    pub n_rows: usize,
    pub x_ll: f64,
    pub y_ll: f64,
    pub cell_size: f64,
    pub nodata: f64,
}

impl GridGeoref {
    pub fn new(n_cols: usize, n_rows: usize, x_ll: f64, y_ll: f64, cell_size: f64, nodata: f64) -> Result<Self> {
        let g = GridGeoref { n_cols, n_rows, x_ll, y_ll, cell_size, nodata };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cols == 0 || self.n_rows == 0 {
            return Err(Error::Shape(format!("grid must have at least one cell, got {}x{}", self.n_rows, self.n_cols)));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::Invalid(format!("cell_size must be positive, got {}", self.cell_size)));
        }
        if !self.x_ll.is_finite() || !self.y_ll.is_finite() {
            return Err(Error::Invalid("grid anchor must be finite".into()));
        }
        if self.y_ll < -90.0 || self.y_top() > 90.0 {
            return Err(Error::Invalid(format!(
                "grid latitude extent [{}, {}] outside [-90, 90]",
                self.y_ll,
                self.y_top()
            )));
        }
        if self.x_ll <= -360.0 || self.x_max() >= 360.0 {
            return Err(Error::Invalid(format!(
                "grid longitude extent [{}, {}] outside (-360, 360)",
                self.x_ll,
                self.x_max()
            )));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn x_max(&self) -> f64 {
        self.x_ll + self.n_cols as f64 * self.cell_size
    }

    pub fn y_top(&self) -> f64 {
        self.y_ll + self.n_rows as f64 * self.cell_size
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_cols + col
    }

    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.n_cols, index % self.n_cols)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        Point::new(
            self.y_ll + ((self.n_rows - 1 - row) as f64 + 0.5) * self.cell_size,
            self.x_ll + (col as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        p.lon >= self.x_ll && p.lon <= self.x_max() && p.lat >= self.y_ll && p.lat <= self.y_top()
    }

    /// Cell containing `p`. A point on an edge shared by two cells belongs to
    /// the one with the larger row/column index; the outer boundary is closed.
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        if !self.contains(p) {
            return None;
        }
        let c = ((p.lon - self.x_ll) / self.cell_size).floor() as usize;
        let r = ((self.y_top() - p.lat) / self.cell_size).floor() as usize;
        Some((r.min(self.n_rows - 1), c.min(self.n_cols - 1)))
    }

    /// Fractional position of `p` in the lattice of cell centres:
    /// (column, row), where integer values sit on centres.
    pub fn lattice_coords(&self, p: Point) -> (f64, f64) {
        (
            (p.lon - self.x_ll) / self.cell_size - 0.5,
            (self.y_top() - p.lat) / self.cell_size - 0.5,
        )
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata || (self.nodata.is_nan() && v.is_nan())
    }
}

/// One day of one product.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRaster {
    pub georef: GridGeoref,
    pub values: Vec<f64>,
}

impl GridRaster {
    pub fn new(georef: GridGeoref, values: Vec<f64>) -> Result<Self> {
        georef.validate()?;
        if values.len() != georef.n_cells() {
            return Err(Error::Shape(format!(
                "expected {} values for a {}x{} grid, got {}",
                georef.n_cells(),
                georef.n_rows,
                georef.n_cols,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() && !georef.is_nodata(**v)) {
            return Err(Error::Invalid(format!("non-finite raster value {v}")));
        }
        Ok(GridRaster { georef, values })
    }

    pub fn filled(georef: GridGeoref, value: f64) -> Result<Self> {
        Self::new(georef, vec![value; georef.n_cells()])
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.georef.index(row, col)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variable {
    #[serde(rename = "precipitation_mm", alias = "rainfall")]
    Precipitation,
    #[serde(rename = "temperature_c", alias = "temperature")]
    Temperature,
}

impl Variable {
    pub fn code(self) -> u8 {
        match self {
            Variable::Precipitation => 0,
            Variable::Temperature => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Variable::Precipitation),
            1 => Ok(Variable::Temperature),
            other => Err(Error::Format(format!("unknown variable code {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variable::Precipitation => "precipitation_mm",
            Variable::Temperature => "temperature_c",
        }
    }
}

pub const EPOCH: NaiveDate = match NaiveDate::from_ymd_opt(1970, 1, 1) {
    Some(d) => d,
    None => unreachable!(),
};

pub fn days_since_epoch(d: NaiveDate) -> i64 {
    (d - EPOCH).num_days()
}

pub fn date_from_epoch_days(days: i64) -> Result<NaiveDate> {
    let d = if days >= 0 {
        EPOCH.checked_add_days(Days::new(days as u64))
    } else {
        EPOCH.checked_sub_days(Days::new(days.unsigned_abs()))
    };
    d.ok_or_else(|| Error::Format(format!("date offset {days} out of range")))
}

/// Day-major sequence of rasters sharing one georeference.
#[derive(Debug, Clone, PartialEq)]
pub struct GridStack {
    pub georef: GridGeoref,
    pub start_date: NaiveDate,
    pub n_days: usize,
    pub variable: Variable,
    pub values: Vec<f64>,
}

impl GridStack {
    pub fn new(georef: GridGeoref, start_date: NaiveDate, variable: Variable, values: Vec<f64>) -> Result<Self> {
        georef.validate()?;
        let cells = georef.n_cells();
        if values.is_empty() || !values.len().is_multiple_of(cells) {
            return Err(Error::Shape(format!(
                "stack payload of {} values is not a positive multiple of {} cells",
                values.len(),
                cells
            )));
        }
        let n_days = values.len() / cells;
        Ok(GridStack { georef, start_date, n_days, variable, values })
    }

    pub fn day(&self, d: usize) -> &[f64] {
        let n = self.georef.n_cells();
        &self.values[d * n..(d + 1) * n]
    }

    pub fn raster(&self, d: usize) -> GridRaster {
        GridRaster { georef: self.georef, values: self.day(d).to_vec() }
    }

    pub fn date(&self, d: usize) -> NaiveDate {
        self.start_date + Days::new(d as u64)
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date(self.n_days - 1)
    }
}

/// Daily values for one feature over a contiguous date range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub feature_id: String,
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

impl DailySeries {
    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Days::new(i as u64)
    }

    pub fn end(&self) -> Option<NaiveDate> {
        self.values.len().checked_sub(1).map(|i| self.date(i))
    }

    /// Values for the inclusive date window, if fully covered.
    pub fn window(&self, from: NaiveDate, to: NaiveDate) -> Option<&[f64]> {
        let a = (from - self.start).num_days();
        let b = (to - self.start).num_days();
        if a < 0 || b < a || b as usize >= self.values.len() {
            return None;
        }
        Some(&self.values[a as usize..=b as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(n_cols: usize, n_rows: usize) -> GridGeoref {
        GridGeoref::new(n_cols, n_rows, 30.0, -5.0, 0.25, -9999.0).unwrap()
    }

    #[test]
    fn row_zero_is_north() {
        let g = g(3, 2);
        assert_eq!(g.cell_center(0, 0), Point::new(-5.0 + 1.5 * 0.25, 30.125));
        assert_eq!(g.cell_center(1, 2), Point::new(-5.0 + 0.125, 30.625));
    }

    #[test]
    fn edge_ties_go_to_larger_index() {
        let g = g(4, 4);
        // vertical edge between columns 1 and 2, horizontal edge between rows 1 and 2
        assert_eq!(g.cell_of(Point::new(-4.5, 30.5)), Some((2, 2)));
        // outer boundary is closed
        assert_eq!(g.cell_of(Point::new(-4.0, 31.0)), Some((0, 3)));
        assert_eq!(g.cell_of(Point::new(-5.0, 30.0)), Some((3, 0)));
        assert_eq!(g.cell_of(Point::new(-5.0001, 30.0)), None);
    }

    #[test]
    fn rejects_bad_georef() {
        assert!(GridGeoref::new(0, 1, 0.0, 0.0, 1.0, -1.0).is_err());
        assert!(GridGeoref::new(1, 1, 0.0, 0.0, 0.0, -1.0).is_err());
        assert!(GridGeoref::new(1, 10, 0.0, 85.0, 1.0, -1.0).is_err());
        assert!(GridGeoref::new(10, 1, 355.0, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn raster_value_checks() {
        let g = g(2, 1);
        assert!(matches!(GridRaster::new(g, vec![1.0]), Err(Error::Shape(_))));
        assert!(GridRaster::new(g, vec![1.0, f64::NAN]).is_err());
        assert!(GridRaster::new(g, vec![1.0, -9999.0]).is_ok());
    }

    #[test]
    fn epoch_round_trip() {
        let d = NaiveDate::from_ymd_opt(1983, 1, 1).unwrap();
        assert_eq!(date_from_epoch_days(days_since_epoch(d)).unwrap(), d);
        assert_eq!(days_since_epoch(EPOCH), 0);
    }

    proptest! {
        #[test]
        fn cell_center_inverse(n_cols in 1usize..60, n_rows in 1usize..60,
                               x_ll in -180.0f64..170.0, y_ll in -80.0f64..40.0,
                               cs in 0.01f64..0.8, r in 0usize..60, c in 0usize..60) {
            let g = GridGeoref::new(n_cols, n_rows, x_ll, y_ll, cs, -9999.0).unwrap();
            let (r, c) = (r % n_rows, c % n_cols);
            prop_assert_eq!(g.cell_of(g.cell_center(r, c)), Some((r, c)));
        }
    }
}
