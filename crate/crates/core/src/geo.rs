//! Small planar geometry helpers on geographic coordinates.
//!
//! All distances use a local equirectangular approximation, which is what the
//! displacement step uses as well, so a point moved `d` km from a centre is
//! measured at `d` km from that centre.

use serde::{Deserialize, Serialize};

/// Mean Earth radius (IUGG), km.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub lat: f64,
    pub lon: f64,
}

impl Point {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Point { lat, lon }
    }
}

/// Equirectangular distance in km, scaled by the cosine of `origin`'s latitude.
pub fn local_distance_km(origin: Point, p: Point) -> f64 {
    let k = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
    let dy = (p.lat - origin.lat) * k;
    let dx = (p.lon - origin.lon) * k * origin.lat.to_radians().cos();
    dx.hypot(dy)
}

/// A closed ring stored without the repeated closing vertex.
pub type Ring = Vec<Point>;

/// Drops a trailing vertex equal to the first one.
pub fn open_ring(mut ring: Ring) -> Ring {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring
}

/// Even-odd ray casting, x = lon, y = lat.
pub fn point_in_ring(p: Point, ring: &[Point]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let x = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
            if p.lon < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Inside the outer ring and outside every hole.
pub fn point_in_polygon(p: Point, rings: &[Ring]) -> bool {
    match rings.split_first() {
        Some((outer, holes)) => {
            point_in_ring(p, outer) && !holes.iter().any(|h| point_in_ring(p, h))
        }
        None => false,
    }
}

/// Signed shoelace area (positive for counter-clockwise in lon/lat) and the
/// ring's planar centroid.
pub fn ring_area_centroid(ring: &[Point]) -> (f64, Point) {
    let n = ring.len();
    // shift to the first vertex for conditioning
    let o = ring[0];
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        let (x0, y0) = (p.lon - o.lon, p.lat - o.lat);
        let (x1, y1) = (q.lon - o.lon, q.lat - o.lat);
        let cross = x0 * y1 - x1 * y0;
        a2 += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    let area = a2 / 2.0;
    if area == 0.0 {
        return (0.0, o);
    }
    (area, Point::new(o.lat + cy / (3.0 * a2), o.lon + cx / (3.0 * a2)))
}

/// Closest point to `p` on the ring's boundary (planar in lon/lat).
pub fn nearest_on_ring(p: Point, ring: &[Point]) -> Point {
    let n = ring.len();
    let mut best = ring[0];
    let mut best_d = f64::INFINITY;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let (dx, dy) = (b.lon - a.lon, b.lat - a.lat);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2).clamp(0.0, 1.0)
        };
        let q = Point::new(a.lat + t * dy, a.lon + t * dx);
        let d = (q.lon - p.lon).powi(2) + (q.lat - p.lat).powi(2);
        if d < best_d {
            best_d = d;
            best = q;
        }
    }
    best
}

/// (min_lat, min_lon, max_lat, max_lon)
pub fn ring_bbox(ring: &[Point]) -> (f64, f64, f64, f64) {
    ring.iter().fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p.lat), b.min(p.lon), c.max(p.lat), d.max(p.lon)),
    )
}
