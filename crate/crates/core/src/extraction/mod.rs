//! Linking raster values to spatial features.
//!
//! Every feature is first turned into an [`ExtractionPlan`] against a grid
//! layout: the list of contributing cells and their weights. A plan is
//! computed once and applied to each day of a stack, which is what makes
//! 35-year daily extraction cheap.
//!
//! * simple: the single cell containing the point
//! * bilinear: the 2×2 neighbourhood of cell centres around the point
//! * zonal mean: unweighted mean of the cells whose centres fall in the shape,
//!   or the cell under the shape's centroid when no centre does

mod io;

pub use io::{read_series_bin, read_series_csv, write_series_bin, write_series_csv, SERIES_MAGIC};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{local_distance_km, point_in_polygon, ring_bbox, Point, Ring, EARTH_RADIUS_KM};
use crate::geomask::{area_centroid, ExtractionMethod, Geometry, SpatialFeature};
use crate::raster::{DailySeries, GridGeoref, GridRaster, GridStack};

/// Lattice offsets closer than this to a cell centre are snapped onto it.
const LATTICE_SNAP: f64 = 1e-11;

/// Point interpolation used for the `*_bilinear` methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Bilinear,
    /// Inverse squared distance over the same four cell centres (sensitivity runs).
    InverseDistance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExtractionPlan {
    /// Weighted sum over cells; weights sum to one.
    Weighted {
        cells: Vec<(usize, f64)>,
        /// Bilinear request answered by simple extraction.
        fallback: bool,
    },
    Zonal {
        cells: Vec<usize>,
        /// Cell under the shape's centroid.
        centroid_cell: usize,
    },
}

/// A single extracted value and whether a fallback path produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extracted {
    pub value: f64,
    pub fallback: bool,
}

impl ExtractionPlan {
    pub fn simple(georef: &GridGeoref, p: Point) -> Result<Self> {
        let (r, c) = georef.cell_of(p).ok_or(Error::OutOfExtent { lat: p.lat, lon: p.lon })?;
        Ok(ExtractionPlan::Weighted { cells: vec![(georef.index(r, c), 1.0)], fallback: false })
    }

    pub fn bilinear(georef: &GridGeoref, p: Point, interp: Interpolation) -> Result<Self> {
        if !georef.contains(p) {
            return Err(Error::OutOfExtent { lat: p.lat, lon: p.lon });
        }
        let (fx, fy) = georef.lattice_coords(p);
        let (max_x, max_y) = ((georef.n_cols - 1) as f64, (georef.n_rows - 1) as f64);
        let inside_hull = (-LATTICE_SNAP..=max_x + LATTICE_SNAP).contains(&fx)
            && (-LATTICE_SNAP..=max_y + LATTICE_SNAP).contains(&fy);
        if !inside_hull {
            let ExtractionPlan::Weighted { cells, .. } = Self::simple(georef, p)? else { unreachable!() };
            return Ok(ExtractionPlan::Weighted { cells, fallback: true });
        }
        let (c0, u) = lattice_split(fx, georef.n_cols);
        let (r0, v) = lattice_split(fy, georef.n_rows);
        let c1 = (c0 + 1).min(georef.n_cols - 1);
        let r1 = (r0 + 1).min(georef.n_rows - 1);
        let corners = [(r0, c0), (r0, c1), (r1, c0), (r1, c1)];
        let weights = match interp {
            Interpolation::Bilinear => [(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v],
            Interpolation::InverseDistance => idw_weights(georef, p, &corners),
        };
        let mut cells: Vec<(usize, f64)> = Vec::with_capacity(4);
        for ((r, c), w) in corners.into_iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let idx = georef.index(r, c);
            match cells.iter_mut().find(|(i, _)| *i == idx) {
                Some(e) => e.1 += w,
                None => cells.push((idx, w)),
            }
        }
        Ok(ExtractionPlan::Weighted { cells, fallback: false })
    }

    pub fn zonal(georef: &GridGeoref, geometry: &Geometry) -> Result<Self> {
        let (cells, centroid) = match geometry {
            Geometry::Disk { center, radius_km } => {
                let dlat = radius_km / EARTH_RADIUS_KM * 180.0 / std::f64::consts::PI;
                let dlon = dlat / center.lat.to_radians().cos();
                let bbox = (center.lat - dlat, center.lon - dlon, center.lat + dlat, center.lon + dlon);
                let cells = cells_in_bbox(georef, bbox, |p| local_distance_km(*center, p) <= *radius_km);
                (cells, *center)
            }
            Geometry::Polygon(rings) => {
                let outer: &Ring = rings.first().ok_or_else(|| Error::Geometry("polygon has no rings".into()))?;
                let cells = cells_in_bbox(georef, ring_bbox(outer), |p| point_in_polygon(p, rings));
                (cells, area_centroid(rings)?)
            }
            Geometry::Point(_) => {
                return Err(Error::MethodMismatch { geometry: "point", method: ExtractionMethod::ZonalMean.name() })
            }
        };
        let centroid_cell = match georef.cell_of(centroid) {
            Some((r, c)) => georef.index(r, c),
            None if !cells.is_empty() => cells[0],
            None => return Err(Error::OutOfExtent { lat: centroid.lat, lon: centroid.lon }),
        };
        Ok(ExtractionPlan::Zonal { cells, centroid_cell })
    }

    pub fn for_feature(georef: &GridGeoref, feature: &SpatialFeature, interp: Interpolation) -> Result<Self> {
        feature.validate()?;
        match (feature.method.extraction(), &feature.geometry) {
            (ExtractionMethod::Simple, Geometry::Point(p)) => Self::simple(georef, *p),
            (ExtractionMethod::Bilinear, Geometry::Point(p)) => Self::bilinear(georef, *p, interp),
            (ExtractionMethod::ZonalMean, g) => Self::zonal(georef, g),
            (m, g) => Err(Error::MethodMismatch { geometry: g.kind(), method: m.name() }),
        }
    }

    /// True when the plan did not follow the method's primary rule.
    pub fn used_fallback(&self) -> bool {
        match self {
            ExtractionPlan::Weighted { fallback, .. } => *fallback,
            ExtractionPlan::Zonal { cells, .. } => cells.is_empty(),
        }
    }

    /// Evaluate against one day of values laid out as `georef`.
    pub fn apply(&self, georef: &GridGeoref, values: &[f64]) -> Result<Extracted> {
        match self {
            ExtractionPlan::Weighted { cells, fallback } => {
                let bad: Vec<(usize, usize)> = cells
                    .iter()
                    .filter(|(i, _)| georef.is_nodata(values[*i]))
                    .map(|(i, _)| georef.row_col(*i))
                    .collect();
                if !bad.is_empty() {
                    return Err(Error::NoData { cells: bad });
                }
                // Anchored on the first cell so a flat neighbourhood reproduces its value exactly.
                let base = values[cells[0].0];
                let value = base + cells[1..].iter().map(|(i, w)| w * (values[*i] - base)).sum::<f64>();
                Ok(Extracted { value, fallback: *fallback })
            }
            ExtractionPlan::Zonal { cells, centroid_cell } => {
                let (mut sum, mut n) = (0.0, 0usize);
                for &i in cells {
                    let v = values[i];
                    if !georef.is_nodata(v) {
                        sum += v;
                        n += 1;
                    }
                }
                if n > 0 {
                    return Ok(Extracted { value: sum / n as f64, fallback: false });
                }
                let v = values[*centroid_cell];
                if georef.is_nodata(v) {
                    let mut all: Vec<(usize, usize)> = cells.iter().map(|i| georef.row_col(*i)).collect();
                    all.push(georef.row_col(*centroid_cell));
                    return Err(Error::NoData { cells: all });
                }
                Ok(Extracted { value: v, fallback: true })
            }
        }
    }
}

/// Split a lattice coordinate into a base index and a fraction in [0, 1].
fn lattice_split(f: f64, n: usize) -> (usize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let base = (f.floor().max(0.0) as usize).min(n - 2);
    let mut frac = (f - base as f64).clamp(0.0, 1.0);
    if frac < LATTICE_SNAP {
        frac = 0.0;
    } else if frac > 1.0 - LATTICE_SNAP {
        frac = 1.0;
    }
    (base, frac)
}

fn idw_weights(georef: &GridGeoref, p: Point, corners: &[(usize, usize); 4]) -> [f64; 4] {
    let d: Vec<f64> = corners.iter().map(|&(r, c)| local_distance_km(p, georef.cell_center(r, c))).collect();
    if let Some(k) = d.iter().position(|x| *x == 0.0) {
        let mut w = [0.0; 4];
        w[k] = 1.0;
        return w;
    }
    let inv: Vec<f64> = d.iter().map(|x| 1.0 / (x * x)).collect();
    let total: f64 = inv.iter().sum();
    [inv[0] / total, inv[1] / total, inv[2] / total, inv[3] / total]
}

fn cells_in_bbox(georef: &GridGeoref, bbox: (f64, f64, f64, f64), inside: impl Fn(Point) -> bool) -> Vec<usize> {
    let (min_lat, min_lon, max_lat, max_lon) = bbox;
    let cs = georef.cell_size;
    let col_lo = ((min_lon - georef.x_ll) / cs - 0.5).floor().max(0.0);
    let col_hi = ((max_lon - georef.x_ll) / cs - 0.5).ceil().min((georef.n_cols - 1) as f64);
    let row_lo = ((georef.y_top() - max_lat) / cs - 0.5).floor().max(0.0);
    let row_hi = ((georef.y_top() - min_lat) / cs - 0.5).ceil().min((georef.n_rows - 1) as f64);
    if col_lo > col_hi || row_lo > row_hi {
        return Vec::new();
    }
    let mut out = Vec::new();
    for r in row_lo as usize..=row_hi as usize {
        for c in col_lo as usize..=col_hi as usize {
            if inside(georef.cell_center(r, c)) {
                out.push(georef.index(r, c));
            }
        }
    }
    out
}

pub fn extract_simple(raster: &GridRaster, p: Point) -> Result<f64> {
    let plan = ExtractionPlan::simple(&raster.georef, p)?;
    Ok(plan.apply(&raster.georef, &raster.values)?.value)
}

pub fn extract_bilinear(raster: &GridRaster, p: Point) -> Result<Extracted> {
    ExtractionPlan::bilinear(&raster.georef, p, Interpolation::Bilinear)?.apply(&raster.georef, &raster.values)
}

pub fn extract_zonal_mean(raster: &GridRaster, shape: &Geometry) -> Result<Extracted> {
    ExtractionPlan::zonal(&raster.georef, shape)?.apply(&raster.georef, &raster.values)
}

/// Apply a plan to every day of a stack.
pub fn apply_plan(stack: &GridStack, plan: &ExtractionPlan, feature_id: &str) -> Result<DailySeries> {
    let values = (0..stack.n_days)
        .map(|d| {
            plan.apply(&stack.georef, stack.day(d))
                .map(|e| e.value)
                .map_err(|e| Error::Day { day: d, source: Box::new(e) })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DailySeries { feature_id: feature_id.to_string(), start: stack.start_date, values })
}

/// Daily series for one feature using its method's extraction rule.
pub fn extract_series(stack: &GridStack, feature: &SpatialFeature) -> Result<DailySeries> {
    extract_series_with(stack, feature, Interpolation::Bilinear)
}

pub fn extract_series_with(stack: &GridStack, feature: &SpatialFeature, interp: Interpolation) -> Result<DailySeries> {
    let plan = ExtractionPlan::for_feature(&stack.georef, feature, interp)?;
    apply_plan(stack, &plan, &feature.feature_id)
}

/// Extract many features in parallel; output order follows `features`.
pub fn extract_all(stack: &GridStack, features: &[SpatialFeature], interp: Interpolation) -> Result<Vec<DailySeries>> {
    features.par_iter().map(|f| extract_series_with(stack, f, interp)).collect()
}
