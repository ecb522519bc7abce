//! Extracted series files.
//!
//! CSV: `feature_id,date,value`, one row per feature-day.
//!
//! Binary `.wxseries` (little-endian, same conventions as `.wxstack`):
//!
//! ```text
//! b"WXE1" | u32 n_series | u32 n_days | i64 start_date (days since 1970-01-01)
//! n_series × (u16 id_len, id bytes UTF-8)
//! f64 × n_series × n_days   (series-major)
//! ```
//! Values are kept at working precision so extraction output is lossless.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::num::fmt_f64;
use crate::raster::wxstack::Cursor;
use crate::raster::{date_from_epoch_days, days_since_epoch, DailySeries};

pub const SERIES_MAGIC: &[u8; 4] = b"WXE1";

fn common_shape(series: &[DailySeries]) -> Result<(NaiveDate, usize)> {
    let first = series.first().ok_or_else(|| Error::Shape("no series to write".into()))?;
    let (start, n) = (first.start, first.values.len());
    if n == 0 {
        return Err(Error::Shape("series with zero days".into()));
    }
    if let Some(s) = series.iter().find(|s| s.start != start || s.values.len() != n) {
        return Err(Error::Shape(format!("series {} does not share the common date range", s.feature_id)));
    }
    Ok((start, n))
}

pub fn write_series_bin(series: &[DailySeries], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (start, n_days) = common_shape(series)?;
    let mut out = Vec::with_capacity(20 + series.len() * (n_days * 8 + 24));
    out.extend_from_slice(SERIES_MAGIC);
    out.extend_from_slice(&(series.len() as u32).to_le_bytes());
    out.extend_from_slice(&(n_days as u32).to_le_bytes());
    out.extend_from_slice(&days_since_epoch(start).to_le_bytes());
    for s in series {
        let id = s.feature_id.as_bytes();
        let len = u16::try_from(id.len()).map_err(|_| Error::Shape(format!("feature id too long: {}", s.feature_id)))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id);
    }
    for s in series {
        for v in &s.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_series_bin(path: impl AsRef<Path>) -> Result<Vec<DailySeries>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 4 || &bytes[..4] != SERIES_MAGIC {
        return Err(Error::Format(format!("{}: missing WXE1 magic", path.display())));
    }
    let mut cur = Cursor::new(&bytes[4..]);
    let n_series = cur.u32()? as usize;
    let n_days = cur.u32()? as usize;
    let start = date_from_epoch_days(cur.i64()?)?;
    let mut ids = Vec::with_capacity(n_series);
    for _ in 0..n_series {
        let len = cur.u16()? as usize;
        let id = std::str::from_utf8(cur.bytes(len)?).map_err(|_| Error::Format("feature id is not UTF-8".into()))?;
        ids.push(id.to_string());
    }
    if cur.remaining() != n_series * n_days * 8 {
        return Err(Error::Shape(format!("{}: payload size does not match header", path.display())));
    }
    ids.into_iter()
        .map(|feature_id| {
            let values = cur
                .bytes(n_days * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(DailySeries { feature_id, start, values })
        })
        .collect()
}

pub fn write_series_csv(series: &[DailySeries], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "feature_id,date,value").map_err(io)?;
    for s in series {
        for (i, v) in s.values.iter().enumerate() {
            writeln!(w, "{},{},{}", s.feature_id, s.start + Days::new(i as u64), fmt_f64(*v)).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_series_csv(path: impl AsRef<Path>) -> Result<Vec<DailySeries>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "feature_id,date,value")) => {}
        _ => return Err(Error::Parse { line: 1, msg: "expected header feature_id,date,value".into() }),
    }
    let mut out: Vec<DailySeries> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.rsplitn(3, ',');
        let (Some(v), Some(d), Some(id)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse { line: i + 1, msg: format!("expected 3 fields in {line:?}") });
        };
        let date: NaiveDate = d.parse().map_err(|_| Error::ParseToken { line: i + 1, token: d.into() })?;
        let value: f64 = v.parse().map_err(|_| Error::ParseToken { line: i + 1, token: v.into() })?;
        let k = *slot.entry(id.to_string()).or_insert_with(|| {
            out.push(DailySeries { feature_id: id.to_string(), start: date, values: Vec::new() });
            out.len() - 1
        });
        let s = &mut out[k];
        if s.start + Days::new(s.values.len() as u64) != date {
            return Err(Error::Shape(format!("line {}: dates for {id} are not contiguous", i + 1)));
        }
        s.values.push(value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Vec<DailySeries> {
        let start = NaiveDate::from_ymd_opt(2016, 2, 28).unwrap();
        vec![
            DailySeries { feature_id: "h1:hh_simple".into(), start, values: vec![0.0, 1.5, -2.25] },
            DailySeries { feature_id: "h2:admin_zone".into(), start, values: vec![1.0 / 3.0, 7.0, 1e-7] },
        ]
    }

    #[test]
    fn csv_round_trip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_series_csv(&sample(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("feature_id,date,value\nh1:hh_simple,2016-02-28,0\nh1:hh_simple,2016-02-29,1.5\n"));
        assert_eq!(read_series_csv(&p).unwrap(), sample());
    }

    #[test]
    fn csv_gap_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::write(&p, "feature_id,date,value\na,2000-01-01,1\na,2000-01-03,1\n").unwrap();
        assert!(matches!(read_series_csv(&p), Err(Error::Shape(_))));
    }

    #[test]
    fn binary_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wxseries");
        write_series_bin(&sample(), &p).unwrap();
        let mut b = std::fs::read(&p).unwrap();
        b.pop();
        std::fs::write(&p, &b).unwrap();
        assert!(matches!(read_series_bin(&p), Err(Error::Shape(_))));
        b[0] = b'Z';
        std::fs::write(&p, &b).unwrap();
        assert!(matches!(read_series_bin(&p), Err(Error::Format(_))));
        let mut ragged = sample();
        ragged[1].values.pop();
        assert!(matches!(write_series_bin(&ragged, &p), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn binary_round_trip(vals in proptest::collection::vec(-1e3f64..1e3, 1..40), n in 1usize..4) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("s.wxseries");
            let start = NaiveDate::from_ymd_opt(1983, 1, 1).unwrap();
            let series: Vec<DailySeries> = (0..n)
                .map(|k| DailySeries { feature_id: format!("f{k}"), start, values: vals.iter().map(|v| v + k as f64).collect() })
                .collect();
            write_series_bin(&series, &p).unwrap();
            prop_assert_eq!(read_series_bin(&p).unwrap(), series);
        }
    }
}
