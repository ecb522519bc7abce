use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{nearest_on_ring, open_ring, point_in_polygon, ring_area_centroid, Point, Ring};

/// Administrative unit boundary. Ring 0 is the outer boundary, the rest are holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdminPolygon {
    pub admin_id: String,
    pub rings: Vec<Ring>,
    pub centroid: Point,
    /// The area centroid fell outside the polygon and was moved to the boundary.
    pub centroid_external: bool,
}

impl AdminPolygon {
    pub fn new(admin_id: impl Into<String>, rings: Vec<Ring>) -> Result<Self> {
        let admin_id = admin_id.into();
        if admin_id.is_empty() {
            return Err(Error::Invalid("admin polygon with empty id".into()));
        }
        let rings: Vec<Ring> = rings.into_iter().map(open_ring).collect();
        let mut poly = AdminPolygon { admin_id, rings, centroid: Point::new(0.0, 0.0), centroid_external: false };
        let (c, external) = polygon_centroid(&poly)?;
        poly.centroid = c;
        poly.centroid_external = external;
        Ok(poly)
    }
}

fn distinct_vertices(ring: &[Point]) -> usize {
    let mut v: Vec<(u64, u64)> = ring.iter().map(|p| (p.lat.to_bits(), p.lon.to_bits())).collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Planar area-weighted centroid of the outer ring minus its holes, with
/// lon/lat used directly as x/y. May lie outside the polygon.
pub fn area_centroid(rings: &[Ring]) -> Result<Point> {
    let (outer, holes) = rings.split_first().ok_or_else(|| Error::Geometry("polygon has no rings".into()))?;
    if distinct_vertices(outer) < 3 {
        return Err(Error::Geometry("outer ring has fewer than 3 distinct vertices".into()));
    }
    let (a0, c0) = ring_area_centroid(outer);
    if a0 == 0.0 {
        return Err(Error::Geometry("outer ring has zero area".into()));
    }
    let mut area = a0.abs();
    let mut mx = a0.abs() * c0.lon;
    let mut my = a0.abs() * c0.lat;
    for hole in holes.iter().filter(|h| h.len() >= 3) {
        let (a, c) = ring_area_centroid(hole);
        area -= a.abs();
        mx -= a.abs() * c.lon;
        my -= a.abs() * c.lat;
    }
    if area <= 0.0 {
        return Err(Error::Geometry("holes cover the whole outer ring".into()));
    }
    Ok(Point::new(my / area, mx / area))
}

/// [`area_centroid`], moved to the nearest boundary point (and flagged) when
/// it falls outside the polygon.
pub fn polygon_centroid(polygon: &AdminPolygon) -> Result<(Point, bool)> {
    let c = area_centroid(&polygon.rings)
        .map_err(|e| Error::Geometry(format!("admin {}: {e}", polygon.admin_id)))?;
    if point_in_polygon(c, &polygon.rings) {
        return Ok((c, false));
    }
    let nearest = polygon
        .rings
        .iter()
        .map(|r| nearest_on_ring(c, r))
        .min_by(|a, b| {
            let da = (a.lon - c.lon).powi(2) + (a.lat - c.lat).powi(2);
            let db = (b.lon - c.lon).powi(2) + (b.lat - c.lat).powi(2);
            da.total_cmp(&db)
        })
        .unwrap();
    Ok((nearest, true))
}
