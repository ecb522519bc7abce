//! Growing-season slicing and the 22 seasonal weather metrics.

mod io;

pub use io::{read_metrics_long, write_metrics_long, write_metrics_wide, REGISTRY_CSV};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geomask::SeasonRegion;
use crate::num::{mean, median, population_moments, sample_sd};
use crate::raster::{DailySeries, Variable};

pub const RAIN_DAY_MM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl MonthDay {
    pub fn new(month: u32, day: u32) -> Result<Self> {
        // 29 Feb would make the window undefined in common years.
        if NaiveDate::from_ymd_opt(2001, month, day).is_none() {
            return Err(Error::Invalid(format!("season boundary {month:02}-{day:02} is not a day of every year")));
        }
        Ok(MonthDay { month, day })
    }

    fn in_year(self, year: i32) -> Option<NaiveDate> {
        NaiveDate::from_ymd_opt(year, self.month, self.day)
    }
}

impl fmt::Display for MonthDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}-{:02}", self.month, self.day)
    }
}

impl FromStr for MonthDay {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("expected MM-DD, got {s:?}"));
        let (m, d) = s.split_once('-').ok_or_else(bad)?;
        MonthDay::new(m.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?)
    }
}

impl TryFrom<String> for MonthDay {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MonthDay> for String {
    fn from(m: MonthDay) -> String {
        m.to_string()
    }
}

/// Inclusive season window. A window whose end precedes its start in the
/// calendar year runs into the following year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonWindow {
    pub start: MonthDay,
    pub end: MonthDay,
}

impl SeasonWindow {
    pub fn new(start: MonthDay, end: MonthDay) -> Result<Self> {
        if start == end {
            return Err(Error::Invalid(format!("season window {start}..{end} is empty")));
        }
        Ok(SeasonWindow { start, end })
    }

    pub fn crosses_year(&self) -> bool {
        self.end < self.start
    }

    /// Dates of the season that starts in `year`.
    pub fn dates(&self, year: i32) -> (NaiveDate, NaiveDate) {
        let end_year = if self.crosses_year() { year + 1 } else { year };
        (self.start.in_year(year).unwrap(), self.end.in_year(end_year).unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonCalendar {
    pub country: String,
    pub regions: BTreeMap<SeasonRegion, SeasonWindow>,
}

fn md(month: u32, day: u32) -> MonthDay {
    MonthDay { month, day }
}

impl SeasonCalendar {
    pub const BUILTIN: [&'static str; 6] = ["ethiopia", "malawi", "niger", "nigeria", "tanzania", "uganda"];

    pub fn new(country: impl Into<String>, regions: BTreeMap<SeasonRegion, SeasonWindow>) -> Result<Self> {
        let cal = SeasonCalendar { country: country.into(), regions };
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<()> {
        let keys: Vec<SeasonRegion> = self.regions.keys().copied().collect();
        let ok = keys == [SeasonRegion::Unimodal] || keys == [SeasonRegion::North, SeasonRegion::South];
        if !ok {
            return Err(Error::Invalid(format!(
                "calendar {:?} must define either a unimodal season or both north and south",
                self.country
            )));
        }
        for w in self.regions.values() {
            SeasonWindow::new(MonthDay::new(w.start.month, w.start.day)?, MonthDay::new(w.end.month, w.end.day)?)?;
        }
        Ok(())
    }

    pub fn builtin(country: &str) -> Option<Self> {
        use SeasonRegion::*;
        let one = |s, e| BTreeMap::from([(Unimodal, SeasonWindow { start: s, end: e })]);
        let two = |ns, ne, ss, se| {
            BTreeMap::from([
                (North, SeasonWindow { start: ns, end: ne }),
                (South, SeasonWindow { start: ss, end: se }),
            ])
        };
        let regions = match country.to_ascii_lowercase().as_str() {
            "ethiopia" => one(md(3, 1), md(11, 30)),
            "malawi" => one(md(10, 1), md(4, 30)),
            "niger" => one(md(6, 1), md(11, 30)),
            "nigeria" => two(md(5, 1), md(9, 30), md(3, 1), md(8, 31)),
            "tanzania" => one(md(11, 1), md(4, 30)),
            "uganda" => two(md(4, 1), md(9, 30), md(2, 1), md(7, 31)),
            _ => return None,
        };
        Some(SeasonCalendar { country: country.to_ascii_lowercase(), regions })
    }

    pub fn crosses_year(&self) -> bool {
        self.regions.values().any(SeasonWindow::crosses_year)
    }

    pub fn window(&self, region: SeasonRegion) -> Result<SeasonWindow> {
        self.regions.get(&region).copied().ok_or_else(|| Error::UnknownRegion {
            country: self.country.clone(),
            region: region.name().into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonSlice {
    pub feature_id: String,
    /// Calendar year in which the season ends.
    pub harvest_year: i32,
    pub start: NaiveDate,
    pub values: Vec<f64>,
}

/// Every complete season of `region` covered by `series`.
pub fn slice_seasons(series: &DailySeries, calendar: &SeasonCalendar, region: SeasonRegion) -> Result<Vec<SeasonSlice>> {
    let window = calendar.window(region)?;
    let Some(last) = series.end() else {
        return Err(Error::InsufficientData(format!("series {} is empty", series.feature_id)));
    };
    let mut out = Vec::new();
    for year in series.start.year() - 1..=last.year() {
        let (from, to) = window.dates(year);
        if let Some(values) = series.window(from, to) {
            out.push(SeasonSlice {
                feature_id: series.feature_id.clone(),
                harvest_year: to.year(),
                start: from,
                values: values.to_vec(),
            });
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientData(format!(
            "series {} ({}..{}) holds no complete {} season",
            series.feature_id,
            series.start,
            last,
            region.name()
        )));
    }
    Ok(out)
}

/// Growing-degree-day bounds, inclusive on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GddBounds {
    pub base_c: f64,
    pub cap_c: f64,
}

impl Default for GddBounds {
    fn default() -> Self {
        GddBounds { base_c: 10.0, cap_c: 30.0 }
    }
}

impl GddBounds {
    pub fn validate(&self) -> Result<()> {
        if self.base_c.is_nan() || self.cap_c.is_nan() || self.base_c > self.cap_c {
            return Err(Error::Invalid(format!("GDD bounds ({}, {}) are not ordered", self.base_c, self.cap_c)));
        }
        Ok(())
    }

    pub fn count(&self, values: &[f64]) -> usize {
        values.iter().filter(|&&t| self.base_c <= t && t <= self.cap_c).count()
    }
}

/// Per-value annotations carried into the metric export.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Flags(u8);

impl Flags {
    /// Within-season variance is zero, so skew was set to 0.
    pub const ZERO_VARIANCE: Flags = Flags(1);
    /// Long-run standard deviation is zero, so the z-score was set to 0.
    pub const LONGRUN_SD_ZERO: Flags = Flags(2);
    /// Fewer than two seasons in the record, so the z-score was set to 0.
    pub const LONGRUN_SD_UNDEFINED: Flags = Flags(4);
    /// No daily-max series was supplied; the daily mean stands in.
    pub const MAX_FROM_MEAN: Flags = Flags(8);

    const NAMES: [(Flags, &'static str); 4] = [
        (Flags::ZERO_VARIANCE, "zero_variance"),
        (Flags::LONGRUN_SD_ZERO, "longrun_sd_zero"),
        (Flags::LONGRUN_SD_UNDEFINED, "longrun_sd_undefined"),
        (Flags::MAX_FROM_MEAN, "max_from_mean"),
    ];

    pub const fn empty() -> Self {
        Flags(0)
    }
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
    pub fn contains(self, other: Flags) -> bool {
        self.0 & other.0 == other.0
    }
    pub fn insert(&mut self, other: Flags) {
        self.0 |= other.0;
    }
    pub fn intersect(self, other: Flags) -> Flags {
        Flags(self.0 & other.0)
    }
    pub fn union(self, other: Flags) -> Flags {
        Flags(self.0 | other.0)
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = Flags::NAMES.iter().filter(|(fl, _)| self.contains(*fl)).map(|(_, n)| *n).collect();
        f.write_str(&names.join("|"))
    }
}

impl FromStr for Flags {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Flags::empty();
        for part in s.split('|').filter(|p| !p.is_empty()) {
            let (fl, _) = Flags::NAMES
                .iter()
                .find(|(_, n)| *n == part)
                .ok_or_else(|| Error::Invalid(format!("unknown flag {part:?}")))?;
            out.insert(*fl);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricFamily {
    Rainfall,
    Temperature,
}

impl MetricFamily {
    pub fn variable(self) -> Variable {
        match self {
            MetricFamily::Rainfall => Variable::Precipitation,
            MetricFamily::Temperature => Variable::Temperature,
        }
    }
    pub fn of(variable: Variable) -> Self {
        match variable {
            Variable::Precipitation => MetricFamily::Rainfall,
            Variable::Temperature => MetricFamily::Temperature,
        }
    }
    pub fn metrics(self) -> &'static [Metric] {
        match self {
            MetricFamily::Rainfall => &Metric::ALL[..14],
            MetricFamily::Temperature => &Metric::ALL[14..],
        }
    }
}

macro_rules! metrics {
    ($($var:ident => $name:literal, $fam:ident, $unit:literal, $desc:literal;)*) => {
        /// The metric registry. Order is the export column order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub enum Metric { $($var),* }

        impl Metric {
            pub const ALL: [Metric; 22] = [$(Metric::$var),*];

            pub fn name(self) -> &'static str {
                match self { $(Metric::$var => $name),* }
            }
            pub fn family(self) -> MetricFamily {
                match self { $(Metric::$var => MetricFamily::$fam),* }
            }
            pub fn unit(self) -> &'static str {
                match self { $(Metric::$var => $unit),* }
            }
            pub fn description(self) -> &'static str {
                match self { $(Metric::$var => $desc),* }
            }
        }
    };
}

metrics! {
    MeanDailyMm => "mean_daily_mm", Rainfall, "mm", "mean daily rainfall";
    MedianDailyMm => "median_daily_mm", Rainfall, "mm", "median daily rainfall";
    VarianceRain => "variance_rain", Rainfall, "mm2", "population variance of daily rainfall";
    SkewRain => "skew_rain", Rainfall, "1", "population skewness of daily rainfall";
    TotalMm => "total_mm", Rainfall, "mm", "seasonal total rainfall";
    DevTotalMm => "dev_total_mm", Rainfall, "mm", "total rainfall minus long-run mean total";
    ZTotal => "z_total", Rainfall, "1", "deviation in total rainfall over long-run sd";
    RainDays => "rain_days", Rainfall, "days", "days with at least 1 mm";
    DevRainDays => "dev_rain_days", Rainfall, "days", "rain days minus long-run mean";
    NoRainDays => "no_rain_days", Rainfall, "days", "days with less than 1 mm";
    DevNoRainDays => "dev_no_rain_days", Rainfall, "days", "no-rain days minus long-run mean";
    ShareRainDays => "share_rain_days", Rainfall, "1", "rain days over season length";
    DevShareRainDays => "dev_share_rain_days", Rainfall, "1", "share of rain days minus long-run mean";
    MaxDrySpellDays => "max_dry_spell_days", Rainfall, "days", "longest within-season run of no-rain days";
    MeanC => "mean_c", Temperature, "degC", "mean daily temperature";
    MedianC => "median_c", Temperature, "degC", "median daily temperature";
    VarianceTemp => "variance_temp", Temperature, "degC2", "population variance of daily temperature";
    SkewTemp => "skew_temp", Temperature, "1", "population skewness of daily temperature";
    GddDays => "gdd_days", Temperature, "days", "days with temperature inside the GDD bounds";
    DevGdd => "dev_gdd", Temperature, "days", "GDD days minus long-run mean";
    ZGdd => "z_gdd", Temperature, "1", "deviation in GDD days over long-run sd";
    MeanDailyMaxC => "mean_daily_max_c", Temperature, "degC", "mean of daily maximum temperature";
}

impl Metric {
    /// Flags that can attach to this metric's values.
    pub fn relevant_flags(self) -> Flags {
        match self {
            Metric::SkewRain | Metric::SkewTemp => Flags::ZERO_VARIANCE,
            Metric::ZTotal | Metric::ZGdd => Flags::LONGRUN_SD_ZERO.union(Flags::LONGRUN_SD_UNDEFINED),
            Metric::MeanDailyMaxC => Flags::MAX_FROM_MEAN,
            _ => Flags::empty(),
        }
    }

    pub fn registry_csv() -> String {
        let mut s = String::from("name,family,unit,description\n");
        for m in Metric::ALL {
            let fam = match m.family() {
                MetricFamily::Rainfall => "rainfall",
                MetricFamily::Temperature => "temperature",
            };
            s.push_str(&format!("{},{},{},{}\n", m.name(), fam, m.unit(), m.description()));
        }
        s
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown metric {s:?}")))
    }
}

impl TryFrom<String> for Metric {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Metric> for String {
    fn from(m: Metric) -> String {
        m.name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample sd over seasons; `None` with a single season.
    pub sd: Option<f64>,
}

impl Stat {
    fn of(xs: &[f64]) -> Self {
        Stat { mean: mean(xs), sd: sample_sd(xs) }
    }

    /// Deviation and z-score of `x`; degenerate spreads give a z of 0 and a flag.
    pub fn score(&self, x: f64) -> (f64, f64, Flags) {
        let dev = x - self.mean;
        match self.sd {
            None => (dev, 0.0, Flags::LONGRUN_SD_UNDEFINED),
            Some(0.0) => (dev, 0.0, Flags::LONGRUN_SD_ZERO),
            Some(sd) => (dev, dev / sd, Flags::empty()),
        }
    }
}

/// Long-run statistics of seasonal aggregates for one feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongRunStats {
    pub n_seasons: usize,
    pub total: Stat,
    pub rain_days: Stat,
    pub no_rain_days: Stat,
    pub share_rain_days: Stat,
    pub gdd: Stat,
}

fn rain_counts(values: &[f64]) -> (usize, usize) {
    let rain = values.iter().filter(|&&v| v >= RAIN_DAY_MM).count();
    (rain, values.len() - rain)
}

pub fn compute_longrun(slices: &[SeasonSlice], gdd: GddBounds) -> Result<LongRunStats> {
    if slices.is_empty() {
        return Err(Error::InsufficientData("no seasons for long-run statistics".into()));
    }
    let n = slices.len();
    let (mut total, mut rain, mut dry, mut share, mut g) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for s in slices {
        let (r, d) = rain_counts(&s.values);
        total.push(s.values.iter().sum());
        rain.push(r as f64);
        dry.push(d as f64);
        share.push(r as f64 / s.values.len() as f64);
        g.push(gdd.count(&s.values) as f64);
    }
    Ok(LongRunStats {
        n_seasons: n,
        total: Stat::of(&total),
        rain_days: Stat::of(&rain),
        no_rain_days: Stat::of(&dry),
        share_rain_days: Stat::of(&share),
        gdd: Stat::of(&g),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainfallMetrics {
    pub mean_daily_mm: f64,
    pub median_daily_mm: f64,
    pub variance: f64,
    pub skew: f64,
    pub total_mm: f64,
    pub dev_total_mm: f64,
    pub z_total: f64,
    pub rain_days: f64,
    pub dev_rain_days: f64,
    pub no_rain_days: f64,
    pub dev_no_rain_days: f64,
    pub share_rain_days: f64,
    pub dev_share_rain_days: f64,
    pub max_dry_spell_days: f64,
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureMetrics {
    pub mean_c: f64,
    pub median_c: f64,
    pub variance: f64,
    pub skew: f64,
    pub gdd_days: f64,
    pub dev_gdd: f64,
    pub z_gdd: f64,
    pub mean_daily_max_c: f64,
    pub flags: Flags,
}

fn moments(values: &[f64], flags: &mut Flags) -> (f64, f64) {
    let (var, skew) = population_moments(values);
    (var, skew.unwrap_or_else(|| {
        flags.insert(Flags::ZERO_VARIANCE);
        0.0
    }))
}

pub fn max_dry_spell(values: &[f64]) -> usize {
    let (mut best, mut run) = (0, 0);
    for &v in values {
        if v < RAIN_DAY_MM {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

fn nonempty(slice: &SeasonSlice) -> Result<()> {
    if slice.values.is_empty() {
        return Err(Error::InsufficientData(format!("empty season {} for {}", slice.harvest_year, slice.feature_id)));
    }
    Ok(())
}

pub fn rainfall_metrics(slice: &SeasonSlice, longrun: &LongRunStats) -> Result<RainfallMetrics> {
    nonempty(slice)?;
    let v = &slice.values;
    let mut flags = Flags::empty();
    let (variance, skew) = moments(v, &mut flags);
    let total: f64 = v.iter().sum();
    let (rain, dry) = rain_counts(v);
    let share = rain as f64 / v.len() as f64;
    let (dev_total, z_total, zf) = longrun.total.score(total);
    flags.insert(zf);
    Ok(RainfallMetrics {
        mean_daily_mm: mean(v),
        median_daily_mm: median(v),
        variance,
        skew,
        total_mm: total,
        dev_total_mm: dev_total,
        z_total,
        rain_days: rain as f64,
        dev_rain_days: rain as f64 - longrun.rain_days.mean,
        no_rain_days: dry as f64,
        dev_no_rain_days: dry as f64 - longrun.no_rain_days.mean,
        share_rain_days: share,
        dev_share_rain_days: share - longrun.share_rain_days.mean,
        max_dry_spell_days: max_dry_spell(v) as f64,
        flags,
    })
}

/// `daily_max` is the parallel daily-maximum slice when the product has one.
pub fn temperature_metrics(
    slice: &SeasonSlice,
    longrun: &LongRunStats,
    gdd: GddBounds,
    daily_max: Option<&SeasonSlice>,
) -> Result<TemperatureMetrics> {
    nonempty(slice)?;
    let v = &slice.values;
    let mut flags = Flags::empty();
    let (variance, skew) = moments(v, &mut flags);
    let g = gdd.count(v) as f64;
    let (dev_gdd, z_gdd, zf) = longrun.gdd.score(g);
    flags.insert(zf);
    let mean_daily_max_c = match daily_max {
        Some(mx) if mx.values.len() == v.len() => mean(&mx.values),
        Some(mx) => {
            return Err(Error::Shape(format!(
                "daily-max season has {} days, mean season {}",
                mx.values.len(),
                v.len()
            )))
        }
        None => {
            flags.insert(Flags::MAX_FROM_MEAN);
            mean(v)
        }
    };
    Ok(TemperatureMetrics {
        mean_c: mean(v),
        median_c: median(v),
        variance,
        skew,
        gdd_days: g,
        dev_gdd,
        z_gdd,
        mean_daily_max_c,
        flags,
    })
}

/// One feature-season. Exactly one of the two metric families is usually present.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub feature_id: String,
    pub harvest_year: i32,
    pub rain: Option<RainfallMetrics>,
    pub temp: Option<TemperatureMetrics>,
}

impl MetricRow {
    pub fn get(&self, m: Metric) -> Option<f64> {
        use Metric::*;
        if m.family() == MetricFamily::Rainfall {
            let r = self.rain.as_ref()?;
            Some(match m {
                MeanDailyMm => r.mean_daily_mm,
                MedianDailyMm => r.median_daily_mm,
                VarianceRain => r.variance,
                SkewRain => r.skew,
                TotalMm => r.total_mm,
                DevTotalMm => r.dev_total_mm,
                ZTotal => r.z_total,
                RainDays => r.rain_days,
                DevRainDays => r.dev_rain_days,
                NoRainDays => r.no_rain_days,
                DevNoRainDays => r.dev_no_rain_days,
                ShareRainDays => r.share_rain_days,
                DevShareRainDays => r.dev_share_rain_days,
                _ => r.max_dry_spell_days,
            })
        } else {
            let t = self.temp.as_ref()?;
            Some(match m {
                MeanC => t.mean_c,
                MedianC => t.median_c,
                VarianceTemp => t.variance,
                SkewTemp => t.skew,
                GddDays => t.gdd_days,
                DevGdd => t.dev_gdd,
                ZGdd => t.z_gdd,
                _ => t.mean_daily_max_c,
            })
        }
    }

    /// Flags attached to metric `m` in this row.
    pub fn flags(&self, m: Metric) -> Flags {
        let fam = match m.family() {
            MetricFamily::Rainfall => self.rain.map(|r| r.flags),
            MetricFamily::Temperature => self.temp.map(|t| t.flags),
        };
        fam.unwrap_or_default().intersect(m.relevant_flags())
    }

    pub fn all_flags(&self) -> Flags {
        self.rain.map(|r| r.flags).unwrap_or_default().union(self.temp.map(|t| t.flags).unwrap_or_default())
    }
}

/// Seasonal metrics for one feature's full record.
pub fn feature_metrics(
    series: &DailySeries,
    variable: Variable,
    window: SeasonWindow,
    gdd: GddBounds,
    daily_max: Option<&DailySeries>,
) -> Result<Vec<MetricRow>> {
    let cal = SeasonCalendar { country: String::new(), regions: BTreeMap::from([(SeasonRegion::Unimodal, window)]) };
    let slices = slice_seasons(series, &cal, SeasonRegion::Unimodal)?;
    let max_slices = daily_max.map(|m| slice_seasons(m, &cal, SeasonRegion::Unimodal)).transpose()?;
    if let Some(ms) = &max_slices {
        if ms.len() != slices.len() || ms.iter().zip(&slices).any(|(a, b)| a.start != b.start) {
            return Err(Error::Shape(format!("daily-max record for {} covers different seasons", series.feature_id)));
        }
    }
    let longrun = compute_longrun(&slices, gdd)?;
    slices
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut row = MetricRow { feature_id: s.feature_id.clone(), harvest_year: s.harvest_year, rain: None, temp: None };
            match variable {
                Variable::Precipitation => row.rain = Some(rainfall_metrics(s, &longrun)?),
                Variable::Temperature => {
                    let mx = max_slices.as_ref().map(|m| &m[i]);
                    row.temp = Some(temperature_metrics(s, &longrun, gdd, mx)?);
                }
            }
            Ok(row)
        })
        .collect()
}

/// Work item for [`metrics_all`]: a series, its season window and an optional daily-max companion.
pub struct MetricJob<'a> {
    pub series: &'a DailySeries,
    pub window: SeasonWindow,
    pub daily_max: Option<&'a DailySeries>,
}

pub fn metrics_all(jobs: &[MetricJob<'_>], variable: Variable, gdd: GddBounds) -> Result<Vec<MetricRow>> {
    gdd.validate()?;
    let per: Vec<Vec<MetricRow>> = jobs
        .par_iter()
        .map(|j| feature_metrics(j.series, variable, j.window, gdd, j.daily_max))
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Days in the season starting in `year`; used by callers that need window lengths.
pub fn season_length(window: SeasonWindow, year: i32) -> usize {
    let (from, to) = window.dates(year);
    (to - from).num_days() as usize + 1
}
