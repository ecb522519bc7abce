//! Metric export: long `feature_id,harvest_year,metric_name,value,flags`
//! and a wide variant with one column per registry metric.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::{Flags, Metric, MetricFamily, MetricRow, RainfallMetrics, TemperatureMetrics};
use crate::error::{Error, Result};
use crate::num::fmt_f64;

/// Machine-readable metric registry shipped with the crate.
pub const REGISTRY_CSV: &str = include_str!("../../data/metric_registry.csv");

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

pub fn write_metrics_long(rows: &[MetricRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "feature_id,harvest_year,metric_name,value,flags").map_err(io)?;
    for r in rows {
        for m in Metric::ALL {
            if let Some(v) = r.get(m) {
                writeln!(w, "{},{},{},{},{}", r.feature_id, r.harvest_year, m.name(), fmt_f64(v), r.flags(m)).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Wide layout; metrics of an absent family are left blank.
pub fn write_metrics_wide(rows: &[MetricRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    let names: Vec<&str> = Metric::ALL.iter().map(|m| m.name()).collect();
    writeln!(w, "feature_id,harvest_year,{},flags", names.join(",")).map_err(io)?;
    for r in rows {
        let cells: Vec<String> = Metric::ALL.iter().map(|&m| r.get(m).map(fmt_f64).unwrap_or_default()).collect();
        writeln!(w, "{},{},{},{}", r.feature_id, r.harvest_year, cells.join(","), r.all_flags()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reassembles rows from the long layout. Each family must be complete or absent.
pub fn read_metrics_long(path: impl AsRef<Path>) -> Result<Vec<MetricRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    if lines.next().map(|(_, l)| l) != Some("feature_id,harvest_year,metric_name,value,flags") {
        return Err(Error::Parse { line: 1, msg: "expected metric long header".into() });
    }
    type Acc = ([Option<f64>; 22], Flags, Flags);
    let mut order: Vec<(String, i32)> = Vec::new();
    let mut acc: BTreeMap<(String, i32), Acc> = BTreeMap::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = i + 1;
        let f: Vec<&str> = line.rsplitn(5, ',').collect();
        let [flags, value, metric, year, id] = f[..] else {
            return Err(Error::Parse { line: line_no, msg: format!("expected 5 fields in {line:?}") });
        };
        let tok = |t: &str| Error::ParseToken { line: line_no, token: t.into() };
        let year: i32 = year.parse().map_err(|_| tok(year))?;
        let m: Metric = metric.parse().map_err(|_| tok(metric))?;
        let v: f64 = value.parse().map_err(|_| tok(value))?;
        let fl: Flags = flags.parse().map_err(|_| tok(flags))?;
        let key = (id.to_string(), year);
        let e = acc.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            ([None; 22], Flags::empty(), Flags::empty())
        });
        let slot = Metric::ALL.iter().position(|x| *x == m).unwrap();
        if e.0[slot].replace(v).is_some() {
            return Err(Error::Parse { line: line_no, msg: format!("duplicate {m} for {id} {year}") });
        }
        match m.family() {
            MetricFamily::Rainfall => e.1.insert(fl),
            MetricFamily::Temperature => e.2.insert(fl),
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (vals, rf, tf) = acc.remove(&key).unwrap();
            let family = |range: std::ops::Range<usize>| -> Result<Option<Vec<f64>>> {
                let part = &vals[range];
                match part.iter().filter(|v| v.is_some()).count() {
                    0 => Ok(None),
                    n if n == part.len() => Ok(Some(part.iter().map(|v| v.unwrap()).collect())),
                    _ => Err(Error::Shape(format!("incomplete metric family for {} {}", key.0, key.1))),
                }
            };
            let rain = family(0..14)?.map(|v| RainfallMetrics {
                mean_daily_mm: v[0],
                median_daily_mm: v[1],
                variance: v[2],
                skew: v[3],
                total_mm: v[4],
                dev_total_mm: v[5],
                z_total: v[6],
                rain_days: v[7],
                dev_rain_days: v[8],
                no_rain_days: v[9],
                dev_no_rain_days: v[10],
                share_rain_days: v[11],
                dev_share_rain_days: v[12],
                max_dry_spell_days: v[13],
                flags: rf,
            });
            let temp = family(14..22)?.map(|v| TemperatureMetrics {
                mean_c: v[0],
                median_c: v[1],
                variance: v[2],
                skew: v[3],
                gdd_days: v[4],
                dev_gdd: v[5],
                z_gdd: v[6],
                mean_daily_max_c: v[7],
                flags: tf,
            });
            Ok(MetricRow { feature_id: key.0, harvest_year: key.1, rain, temp })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{feature_metrics, GddBounds, SeasonCalendar};
    use crate::geomask::SeasonRegion;
    use crate::raster::{DailySeries, Variable};
    use chrono::NaiveDate;

    #[test]
    fn shipped_registry_matches_enum() {
        assert_eq!(REGISTRY_CSV, Metric::registry_csv());
    }

    fn rows(variable: Variable) -> Vec<MetricRow> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let s = DailySeries {
            feature_id: "h1:hh_simple".into(),
            start,
            values: (0..1500).map(|i| ((i * 37) % 11) as f64 * 1.7).collect(),
        };
        let w = SeasonCalendar::builtin("tanzania").unwrap().window(SeasonRegion::Unimodal).unwrap();
        feature_metrics(&s, variable, w, GddBounds::default(), None).unwrap()
    }

    #[test]
    fn long_round_trip_keeps_rows_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        for v in [Variable::Precipitation, Variable::Temperature] {
            let r = rows(v);
            write_metrics_long(&r, &p).unwrap();
            assert_eq!(read_metrics_long(&p).unwrap(), r);
        }
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.lines().any(|l| l.contains(",mean_daily_max_c,") && l.ends_with(",max_from_mean")));
        assert!(text.lines().any(|l| l.contains(",mean_c,") && l.ends_with(',')));
    }

    #[test]
    fn wide_has_22_metric_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        write_metrics_wide(&rows(Variable::Precipitation), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), 2 + 22 + 1);
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), header.len());
        assert!(first[16..24].iter().all(|c| c.is_empty()));
        assert!(first[2..16].iter().all(|c| !c.is_empty()));
    }

    #[test]
    fn partial_family_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "feature_id,harvest_year,metric_name,value,flags\na,2000,total_mm,3,\n").unwrap();
        assert!(matches!(read_metrics_long(&p), Err(Error::Shape(_))));
    }
}
