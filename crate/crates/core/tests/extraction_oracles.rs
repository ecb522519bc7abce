use geomv::extraction::{extract_bilinear, extract_simple, extract_zonal_mean};
use geomv::geo::{local_distance_km, Point};
use geomv::geomask::{displace, Geometry, MaskParams, Stratum};
use geomv::raster::{GridGeoref, GridRaster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> GridGeoref {
    GridGeoref::new(48, 36, 32.0, -4.0, 0.125, -9999.0).unwrap()
}

fn random_raster(g: GridGeoref, rng: &mut ChaCha8Rng) -> GridRaster {
    GridRaster::new(g, (0..g.n_cells()).map(|_| rng.random_range(0.0..50.0)).collect()).unwrap()
}

/// Crossing-number test written out independently of the library.
fn inside(p: Point, ring: &[Point]) -> bool {
    let mut c = false;
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + n - 1) % n]);
        if (a.lat > p.lat) != (b.lat > p.lat) && p.lon < (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon {
            c = !c;
        }
    }
    c
}

fn star_polygon(rng: &mut ChaCha8Rng, g: &GridGeoref) -> Vec<Point> {
    let c = Point::new(
        rng.random_range(g.y_ll + 1.0..g.y_top() - 1.0),
        rng.random_range(g.x_ll + 1.0..g.x_max() - 1.0),
    );
    let k = rng.random_range(3..12);
    let mut angles: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    angles
        .into_iter()
        .map(|a| {
            let r = rng.random_range(0.1..0.95);
            Point::new(c.lat + r * a.sin(), c.lon + r * a.cos())
        })
        .collect()
}

pub fn bilinear_reproduces_affine_fields() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let (a, b, c) = (rng.random_range(-10.0..10.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let f = |p: Point| a + b * p.lon + c * p.lat;
        let values = (0..g.n_cells())
            .map(|i| {
                let (r, col) = g.row_col(i);
                f(g.cell_center(r, col))
            })
            .collect();
        let raster = GridRaster::new(g, values).unwrap();
        let half = g.cell_size / 2.0;
        for _ in 0..200 {
            let p = Point::new(
                rng.random_range(g.y_ll + half..g.y_top() - half),
                rng.random_range(g.x_ll + half..g.x_max() - half),
            );
            let e = extract_bilinear(&raster, p).unwrap();
            assert!(!e.fallback);
            assert!((e.value - f(p)).abs() < 1e-10, "{} vs {}", e.value, f(p));
        }
    }
}

pub fn zonal_mean_matches_exhaustive_enumeration() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let raster = random_raster(g, &mut rng);
    let mut nonempty = 0;
    for _ in 0..100 {
        let ring = star_polygon(&mut rng, &g);
        let mut sum = 0.0;
        let mut n = 0;
        for r in 0..g.n_rows {
            for c in 0..g.n_cols {
                let centre = Point::new(g.y_top() - (r as f64 + 0.5) * g.cell_size, g.x_ll + (c as f64 + 0.5) * g.cell_size);
                if inside(centre, &ring) {
                    sum += raster.values[r * g.n_cols + c];
                    n += 1;
                }
            }
        }
        let e = extract_zonal_mean(&raster, &Geometry::Polygon(vec![ring])).unwrap();
        if n > 0 {
            nonempty += 1;
            assert!(!e.fallback);
            assert!((e.value - sum / n as f64).abs() < 1e-10);
        } else {
            assert!(e.fallback);
        }
    }
    assert!(nonempty > 80);
}

pub fn zonal_disk_matches_distance_scan() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let raster = random_raster(g, &mut rng);
    for _ in 0..50 {
        let centre = Point::new(rng.random_range(-2.5..-1.0), rng.random_range(34.0..36.0));
        let radius = rng.random_range(5.0..40.0);
        let mut vals = Vec::new();
        for r in 0..g.n_rows {
            for c in 0..g.n_cols {
                if local_distance_km(centre, g.cell_center(r, c)) <= radius {
                    vals.push(raster.get(r, c));
                }
            }
        }
        let e = extract_zonal_mean(&raster, &Geometry::Disk { center: centre, radius_km: radius }).unwrap();
        if !vals.is_empty() {
            assert!((e.value - vals.iter().sum::<f64>() / vals.len() as f64).abs() < 1e-10);
        }
    }
}

pub fn simple_matches_containment_scan() {
    let g = grid();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let raster = random_raster(g, &mut rng);
    for _ in 0..100 {
        let p = Point::new(rng.random_range(g.y_ll..g.y_top()), rng.random_range(g.x_ll..g.x_max()));
        let mut hits = Vec::new();
        for r in 0..g.n_rows {
            for c in 0..g.n_cols {
                let west = g.x_ll + c as f64 * g.cell_size;
                let north = g.y_top() - r as f64 * g.cell_size;
                if west <= p.lon && p.lon < west + g.cell_size && north - g.cell_size < p.lat && p.lat <= north {
                    hits.push((r, c));
                }
            }
        }
        assert_eq!(hits.len(), 1);
        let (r, c) = hits[0];
        assert_eq!(extract_simple(&raster, p).unwrap(), raster.get(r, c));
    }
}

pub fn displacement_distance_law() {
    let params = MaskParams { rural_extra_share: 0.0, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let origin = Point::new(-13.5, 34.0);
    let n = 100_000;
    let (mut sum, mut max_u, mut max_r) = (0.0, 0.0f64, 0.0f64);
    for _ in 0..n {
        let (p, _) = displace(origin, Stratum::Urban, &params, &mut rng).unwrap();
        let d = local_distance_km(origin, p);
        sum += d;
        max_u = max_u.max(d);
        let (q, _) = displace(origin, Stratum::Rural, &params, &mut rng).unwrap();
        max_r = max_r.max(local_distance_km(origin, q));
    }
    let mean = sum / n as f64;
    assert!(max_u <= 2.0 + 1e-9, "{max_u}");
    assert!(max_r <= 5.0 + 1e-9, "{max_r}");
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
}

#[cfg(test)]
mod tests {
    #[test]
    fn bilinear_reproduces_affine_fields() {
        super::bilinear_reproduces_affine_fields()
    }

    #[test]
    fn zonal_mean_matches_exhaustive_enumeration() {
        super::zonal_mean_matches_exhaustive_enumeration()
    }

    #[test]
    fn zonal_disk_matches_distance_scan() {
        super::zonal_disk_matches_distance_scan()
    }

    #[test]
    fn simple_matches_containment_scan() {
        super::simple_matches_containment_scan()
    }

    #[test]
    fn displacement_distance_law() {
        super::displacement_distance_law()
    }
}
