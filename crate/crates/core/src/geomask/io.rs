//! Household CSV, admin polygon lines, and feature CSV.
//!
//! Polygon lines: `admin_id;lon lat,lon lat,...;hole ring;...`
//! Geometry text: `POINT (lon lat)`, `DISK (lon lat, radius_km)`,
//! `POLYGON ((lon lat, ...), (lon lat, ...))`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdminPolygon, Geometry, Household, Method, SpatialFeature};
use crate::error::{Error, Result};
use crate::geo::{Point, Ring};
use crate::num::fmt_f64;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse { line, msg: format!("{}: {other:?}", path.display()) },
    }
}

pub fn read_households(path: impl AsRef<Path>) -> Result<Vec<Household>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let expected = ["household_id", "ea_id", "admin_id", "lat", "lon", "stratum", "season_region"];
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?;
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse { line: 1, msg: format!("household header must be {}", expected.join(",")) });
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let h: Household = rec.map_err(|e| csv_err(path, e))?;
        h.validate()?;
        out.push(h);
    }
    Ok(out)
}

pub fn write_households(households: &[Household], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for h in households {
        w.serialize(h).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_ring(text: &str, line: usize) -> Result<Ring> {
    text.split(',')
        .map(|pair| {
            let mut it = pair.split_whitespace();
            let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse { line, msg: format!("bad vertex {pair:?}") });
            };
            let lon: f64 = x.parse().map_err(|_| Error::ParseToken { line, token: x.into() })?;
            let lat: f64 = y.parse().map_err(|_| Error::ParseToken { line, token: y.into() })?;
            Ok(Point::new(lat, lon))
        })
        .collect()
}

pub fn parse_polygons(text: &str) -> Result<Vec<AdminPolygon>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(';');
        let id = parts.next().unwrap_or("").trim();
        let rings = parts
            .filter(|p| !p.trim().is_empty())
            .map(|p| parse_ring(p, i + 1))
            .collect::<Result<Vec<_>>>()?;
        if rings.is_empty() {
            return Err(Error::Parse { line: i + 1, msg: format!("admin {id:?} has no rings") });
        }
        out.push(AdminPolygon::new(id, rings)?);
    }
    Ok(out)
}

pub fn read_polygons(path: impl AsRef<Path>) -> Result<Vec<AdminPolygon>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_polygons(&text)
}

fn render_ring(ring: &[Point]) -> String {
    ring.iter().map(|p| format!("{} {}", fmt_f64(p.lon), fmt_f64(p.lat))).collect::<Vec<_>>().join(",")
}

pub fn render_polygon_line(p: &AdminPolygon) -> String {
    let mut s = p.admin_id.clone();
    for r in &p.rings {
        s.push(';');
        s.push_str(&render_ring(r));
    }
    s
}

pub fn write_polygons(polygons: &[AdminPolygon], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for p in polygons {
        text.push_str(&render_polygon_line(p));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn format_geometry(g: &Geometry) -> String {
    let pt = |p: &Point| format!("{} {}", fmt_f64(p.lon), fmt_f64(p.lat));
    match g {
        Geometry::Point(p) => format!("POINT ({})", pt(p)),
        Geometry::Disk { center, radius_km } => format!("DISK ({}, {})", pt(center), fmt_f64(*radius_km)),
        Geometry::Polygon(rings) => {
            let body: Vec<String> =
                rings.iter().map(|r| format!("({})", r.iter().map(pt).collect::<Vec<_>>().join(", "))).collect();
            format!("POLYGON ({})", body.join(", "))
        }
    }
}

pub fn parse_geometry(text: &str) -> Result<Geometry> {
    let bad = || Error::Parse { line: 0, msg: format!("bad geometry {text:?}") };
    let text = text.trim();
    let (tag, rest) = text.split_once(' ').ok_or_else(bad)?;
    let body = rest.trim().strip_prefix('(').and_then(|b| b.strip_suffix(')')).ok_or_else(bad)?;
    let coord = |s: &str| -> Result<Point> {
        let mut it = s.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(x), Some(y), None) => {
                Ok(Point::new(y.parse().map_err(|_| bad())?, x.parse().map_err(|_| bad())?))
            }
            _ => Err(bad()),
        }
    };
    match tag {
        "POINT" => Ok(Geometry::Point(coord(body)?)),
        "DISK" => {
            let (c, r) = body.split_once(',').ok_or_else(bad)?;
            Ok(Geometry::Disk { center: coord(c)?, radius_km: r.trim().parse().map_err(|_| bad())? })
        }
        "POLYGON" => {
            let mut rings = Vec::new();
            for chunk in body.split(')') {
                let chunk = chunk.trim().trim_start_matches(',').trim();
                if chunk.is_empty() {
                    continue;
                }
                let inner = chunk.strip_prefix('(').ok_or_else(bad)?;
                rings.push(inner.split(',').map(coord).collect::<Result<Ring>>()?);
            }
            if rings.is_empty() {
                return Err(bad());
            }
            Ok(Geometry::Polygon(rings))
        }
        _ => Err(bad()),
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureRecord {
    feature_id: String,
    household_id: String,
    method: Method,
    geom_wkt_like: String,
}

pub fn write_features(features: &[SpatialFeature], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for f in features {
        w.serialize(FeatureRecord {
            feature_id: f.feature_id.clone(),
            household_id: f.household_id.clone(),
            method: f.method,
            geom_wkt_like: format_geometry(&f.geometry),
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<SpatialFeature>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        let r: FeatureRecord = rec.map_err(|e| csv_err(path, e))?;
        let geometry = parse_geometry(&r.geom_wkt_like).map_err(|_| Error::Parse {
            line: i + 2,
            msg: format!("bad geometry {:?}", r.geom_wkt_like),
        })?;
        let f = SpatialFeature { feature_id: r.feature_id, household_id: r.household_id, method: r.method, geometry };
        f.validate()?;
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomask::{build_features, MaskParams, SeasonRegion, Stratum};

    #[test]
    fn polygon_lines_with_hole() {
        let text = "# admin units\nA1;30 0,31 0,31 1,30 1;30.2 0.2,30.4 0.2,30.4 0.4\n\nA2;31 0,32 0,32 1,31 1\n";
        let p = parse_polygons(text).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].rings.len(), 2);
        assert_eq!(p[0].rings[0][1], Point::new(0.0, 31.0));
        assert_eq!(parse_polygons(&render_polygon_line(&p[0])).unwrap()[0], p[0]);
        assert!(matches!(parse_polygons("A;30 0,31"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_polygons("A;30 0,31 x,1 1"), Err(Error::ParseToken { .. })));
    }

    #[test]
    fn geometry_text_round_trip() {
        let gs = [
            Geometry::Point(Point::new(-1.25, 36.5)),
            Geometry::Disk { center: Point::new(0.1, 0.2), radius_km: 10.0 },
            Geometry::Polygon(vec![
                vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0)],
                vec![Point::new(0.1, 0.1), Point::new(0.1, 0.2), Point::new(0.2, 0.2)],
            ]),
        ];
        for g in gs {
            assert_eq!(parse_geometry(&format_geometry(&g)).unwrap(), g);
        }
        assert_eq!(format_geometry(&Geometry::Point(Point::new(2.0, 1.0))), "POINT (1 2)");
        assert!(parse_geometry("LINE (0 0)").is_err());
    }

    #[test]
    fn household_and_feature_files() {
        let dir = tempfile::tempdir().unwrap();
        let hh = vec![Household {
            household_id: "h1".into(),
            ea_id: "e1".into(),
            admin_id: "A1".into(),
            lat: 0.5,
            lon: 30.5,
            stratum: Stratum::Urban,
            season_region: SeasonRegion::North,
        }];
        let hp = dir.path().join("hh.csv");
        write_households(&hh, &hp).unwrap();
        let text = std::fs::read_to_string(&hp).unwrap();
        assert!(text.starts_with("household_id,ea_id,admin_id,lat,lon,stratum,season_region\n"));
        assert_eq!(read_households(&hp).unwrap(), hh);

        let polys = parse_polygons("A1;30 0,31 0,31 1,30 1").unwrap();
        let f = build_features(&hh, &polys, &MaskParams { seed: 4, ..Default::default() }).unwrap();
        let fp = dir.path().join("features.csv");
        write_features(&f, &fp).unwrap();
        assert!(std::fs::read_to_string(&fp).unwrap().starts_with("feature_id,household_id,method,geom_wkt_like\n"));
        assert_eq!(read_features(&fp).unwrap(), f);
    }

    #[test]
    fn household_header_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "id,ea,admin,lat,lon,stratum,season_region\n").unwrap();
        assert!(matches!(read_households(&p), Err(Error::Parse { line: 1, .. })));
    }
}
