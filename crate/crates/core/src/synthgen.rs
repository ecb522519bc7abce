//! Synthetic weather, households and outcome panels with known ground truth.
//!
//! Weather is a smooth field on a fine grid: a seasonal climatology plus a
//! handful of plane-wave basis functions whose coefficients follow an AR(1)
//! process over days, plus white noise. Every coarser product is a block
//! average of the fine grid. Admin units are rectangular tiles, EAs are
//! clusters of households inside one tile, and outcomes follow
//! `asinh(y) = α_h + γ_t + β₁·w + β₂·w² + ε`.
//!
//! The fine field is rounded to `f32` as it is generated, so a `.wxstack`
//! round trip reproduces it exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{apply_plan, ExtractionPlan, Interpolation};
use crate::geo::{Point, EARTH_RADIUS_KM};
use crate::geomask::{ea_center, fnv1a64, write_households, write_polygons, AdminPolygon, Household, SeasonRegion, Stratum};
use crate::metrics::{feature_metrics, GddBounds, Metric, MetricRow, SeasonCalendar};
use crate::multiverse::{write_outcomes_csv, OutcomeRecord};
use crate::num::fmt_f64;
use crate::raster::{write_stack, DailySeries, GridGeoref, GridStack, Variable};

const NODATA: f64 = -9999.0;
const KM_PER_DEG: f64 = EARTH_RADIUS_KM * PI / 180.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthProduct {
    pub name: String,
    pub variable: Variable,
    /// Degrees; must be a whole multiple of the finest product's cell size.
    pub cell_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    pub mean: f64,
    /// Half the seasonal swing, peaking in mid July.
    pub amplitude: f64,
    pub field_sd: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dgp {
    /// Weather metric `w` entering the outcome equation.
    pub metric: Metric,
    pub beta1: f64,
    pub beta2: f64,
    /// Mean of the household effects.
    pub intercept: f64,
    pub household_sd: f64,
    pub year_sd: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    /// Built-in growing-season calendar; every household uses its unimodal window.
    pub calendar: String,
    pub products: Vec<SynthProduct>,
    pub n_eas: usize,
    pub households_per_ea: usize,
    pub n_admin_units: usize,
    pub admin_tile_deg: f64,
    /// South-west corner of the admin tile block.
    pub origin_lat: f64,
    pub origin_lon: f64,
    /// Households lie within this many km of their EA anchor along each axis.
    pub ea_spread_km: f64,
    pub urban_share: f64,
    pub start_year: i32,
    pub end_year: i32,
    pub rainfall: FieldParams,
    pub temperature: FieldParams,
    pub n_basis: usize,
    pub correlation_km: f64,
    pub ar1: f64,
    pub dgp: Dgp,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let p = |name: &str, variable, cell_size| SynthProduct { name: name.into(), variable, cell_size };
        SynthConfig {
            seed: 0,
            calendar: "ethiopia".into(),
            products: vec![
                p("rain_fine", Variable::Precipitation, 0.05),
                p("rain_mid", Variable::Precipitation, 0.25),
                p("rain_coarse", Variable::Precipitation, 0.5),
                p("temp_fine", Variable::Temperature, 0.05),
                p("temp_coarse", Variable::Temperature, 0.5),
            ],
            n_eas: 40,
            households_per_ea: 5,
            n_admin_units: 4,
            admin_tile_deg: 0.5,
            origin_lat: 8.0,
            origin_lon: 38.0,
            ea_spread_km: 2.0,
            urban_share: 0.3,
            start_year: 2008,
            end_year: 2017,
            rainfall: FieldParams { mean: 3.0, amplitude: 2.5, field_sd: 2.5, noise_sd: 1.5 },
            temperature: FieldParams { mean: 22.0, amplitude: 4.0, field_sd: 2.0, noise_sd: 0.5 },
            n_basis: 6,
            correlation_km: 40.0,
            ar1: 0.7,
            dgp: Dgp {
                metric: Metric::TotalMm,
                beta1: 0.002,
                beta2: 0.0,
                intercept: 7.0,
                household_sd: 0.5,
                year_sd: 0.2,
                noise_sd: 0.3,
            },
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if self.products.is_empty() {
            return bad("synthetic config needs at least one product".into());
        }
        if let Some(p) = self.products.iter().find(|p| !(p.cell_size > 0.0 && p.cell_size.is_finite())) {
            return bad(format!("product {} has cell size {}", p.name, p.cell_size));
        }
        self.blocks()?;
        for (name, f) in [("rainfall", &self.rainfall), ("temperature", &self.temperature)] {
            if !(f.field_sd >= 0.0 && f.noise_sd >= 0.0) {
                return bad(format!("{name} standard deviations must be non-negative"));
            }
        }
        let d = &self.dgp;
        if !(d.household_sd >= 0.0 && d.year_sd >= 0.0 && d.noise_sd >= 0.0) {
            return bad("outcome standard deviations must be non-negative".into());
        }
        if !(self.ar1.abs() < 1.0) {
            return bad(format!("AR(1) coefficient {} must lie in (-1, 1)", self.ar1));
        }
        if !(self.correlation_km > 0.0) {
            return bad("correlation length must be positive".into());
        }
        if self.n_eas == 0 || self.households_per_ea == 0 || self.n_admin_units == 0 {
            return bad("population sizes must be positive".into());
        }
        if self.end_year < self.start_year {
            return bad("end_year precedes start_year".into());
        }
        if !(0.0..=1.0).contains(&self.urban_share) {
            return bad("urban_share must lie in [0, 1]".into());
        }
        let spread_deg = self.spread_deg();
        if !(self.ea_spread_km >= 0.0 && self.admin_tile_deg > 2.0 * spread_deg.0.max(spread_deg.1)) {
            return bad("admin tiles must be wider than two EA spreads".into());
        }
        if self.origin_lat.abs() > 60.0 {
            return bad("origin latitude must lie within 60 degrees of the equator".into());
        }
        let cal = SeasonCalendar::builtin(&self.calendar)
            .ok_or_else(|| Error::Invalid(format!("unknown calendar {:?}", self.calendar)))?;
        cal.window(SeasonRegion::Unimodal)?;
        if !self.products.iter().any(|p| p.variable == self.dgp.metric.family().variable()) {
            return bad(format!("no product carries the {} series needed by the outcome metric", self.dgp.metric.family().variable().name()));
        }
        Ok(())
    }

    fn fine_cell(&self) -> f64 {
        self.products.iter().map(|p| p.cell_size).fold(f64::INFINITY, f64::min)
    }

    /// Block factor of each product relative to the finest cell.
    fn blocks(&self) -> Result<Vec<usize>> {
        let fine = self.fine_cell();
        self.products
            .iter()
            .map(|p| {
                let r = p.cell_size / fine;
                let b = r.round();
                if (r - b).abs() > 1e-9 {
                    Err(Error::Invalid(format!("cell size {} of {} is not a multiple of {fine}", p.cell_size, p.name)))
                } else {
                    Ok(b as usize)
                }
            })
            .collect()
    }

    /// (lat, lon) degrees for `ea_spread_km`.
    fn spread_deg(&self) -> (f64, f64) {
        let lat = self.ea_spread_km / KM_PER_DEG;
        (lat, lat / self.origin_lat.to_radians().cos())
    }

    fn tile_layout(&self) -> (usize, usize) {
        let cols = (self.n_admin_units as f64).sqrt().ceil() as usize;
        (self.n_admin_units.div_ceil(cols), cols)
    }

    fn dates(&self) -> (NaiveDate, usize) {
        let start = NaiveDate::from_ymd_opt(self.start_year, 1, 1).expect("valid year");
        let end = NaiveDate::from_ymd_opt(self.end_year, 12, 31).expect("valid year");
        (start, (end - start).num_days() as usize + 1)
    }

    /// Fine grid covering the tiles plus a margin, sized so every product's blocks tile it exactly.
    pub fn fine_georef(&self) -> Result<GridGeoref> {
        let fine = self.fine_cell();
        let blocks = self.blocks()?;
        let l = blocks.iter().fold(1, |a, &b| lcm(a, b));
        let coarse = fine * *blocks.iter().max().unwrap() as f64;
        let margin = coarse.max(0.25);
        let (rows_t, cols_t) = self.tile_layout();
        let span = |n_tiles: usize| {
            let cells = ((n_tiles as f64 * self.admin_tile_deg + 2.0 * margin) / fine).ceil() as usize;
            cells.div_ceil(l) * l
        };
        GridGeoref::new(span(cols_t), span(rows_t), self.origin_lon - margin, self.origin_lat - margin, fine, NODATA)
    }

    fn rng(&self, key: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(fnv1a64(key.as_bytes()));
        rng
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

#[derive(Debug, Clone)]
pub struct Weather {
    /// Finest-resolution field per variable.
    pub fine: BTreeMap<Variable, GridStack>,
    /// One stack per configured product, in configured order.
    pub products: Vec<(SynthProduct, GridStack)>,
}

impl Weather {
    pub fn product(&self, name: &str) -> Option<&GridStack> {
        self.products.iter().find(|(p, _)| p.name == name).map(|(_, s)| s)
    }
}

fn gen_field(cfg: &SynthConfig, georef: GridGeoref, variable: Variable) -> Result<GridStack> {
    let params = match variable {
        Variable::Precipitation => cfg.rainfall,
        Variable::Temperature => cfg.temperature,
    };
    let (start, n_days) = cfg.dates();
    let k = cfg.n_basis;
    let n_cells = georef.n_cells();

    // Plane waves over local km coordinates.
    let mut rng = cfg.rng(&format!("{}|basis", variable.name()));
    let waves: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| {
            let theta = rng.random_range(0.0..2.0 * PI);
            let lambda = cfg.correlation_km * rng.random_range(1.0..3.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            let f = 2.0 * PI / lambda;
            (f * theta.cos(), f * theta.sin(), phase)
        })
        .collect();
    let coslat = cfg.origin_lat.to_radians().cos();
    let norm = (2.0 / k.max(1) as f64).sqrt();
    let basis: Vec<f64> = (0..n_cells)
        .flat_map(|i| {
            let (r, c) = georef.row_col(i);
            let p = georef.cell_center(r, c);
            let x = (p.lon - cfg.origin_lon) * KM_PER_DEG * coslat;
            let y = (p.lat - cfg.origin_lat) * KM_PER_DEG;
            waves.iter().map(move |(fx, fy, ph)| norm * (fx * x + fy * y + ph).cos()).collect::<Vec<_>>()
        })
        .collect();

    let innovations: Vec<Vec<f64>> = (0..n_days)
        .into_par_iter()
        .map(|d| {
            let mut r = cfg.rng(&format!("{}|ar|{d}", variable.name()));
            (0..k).map(|_| normal(&mut r)).collect()
        })
        .collect();
    let rho = cfg.ar1;
    let scale = (1.0 - rho * rho).sqrt();
    let mut coeffs = vec![vec![0.0; k]; n_days];
    for d in 0..n_days {
        for j in 0..k {
            coeffs[d][j] = if d == 0 {
                params.field_sd * innovations[0][j]
            } else {
                rho * coeffs[d - 1][j] + params.field_sd * scale * innovations[d][j]
            };
        }
    }

    let clip = variable == Variable::Precipitation;
    let values: Vec<f64> = (0..n_days)
        .into_par_iter()
        .flat_map_iter(|d| {
            let date = start + chrono::Days::new(d as u64);
            let doy = date.ordinal0() as f64;
            let clim = params.mean + params.amplitude * (2.0 * PI * (doy - 105.0) / 365.25).sin();
            let mut noise = cfg.rng(&format!("{}|noise|{d}", variable.name()));
            let a = &coeffs[d];
            let basis = &basis;
            (0..n_cells)
                .map(move |i| {
                    let field: f64 = basis[i * k..(i + 1) * k].iter().zip(a).map(|(phi, a)| phi * a).sum();
                    let mut v = clim + field + params.noise_sd * normal(&mut noise);
                    if clip {
                        v = v.max(0.0);
                    }
                    v as f32 as f64
                })
                .collect::<Vec<_>>()
        })
        .collect();
    GridStack::new(georef, start, variable, values)
}

/// Mean of each `block × block` group of fine cells.
pub fn block_average(fine: &GridStack, block: usize, cell_size: f64) -> Result<GridStack> {
    let g = fine.georef;
    if block == 0 || !g.n_cols.is_multiple_of(block) || !g.n_rows.is_multiple_of(block) {
        return Err(Error::Shape(format!("{}x{} grid does not split into {block}-cell blocks", g.n_rows, g.n_cols)));
    }
    if block == 1 {
        return Ok(fine.clone());
    }
    let cg = GridGeoref::new(g.n_cols / block, g.n_rows / block, g.x_ll, g.y_ll, cell_size, g.nodata)?;
    let denom = (block * block) as f64;
    let values: Vec<f64> = (0..fine.n_days)
        .into_par_iter()
        .flat_map_iter(|d| {
            let day = fine.day(d);
            (0..cg.n_cells()).map(move |i| {
                let (r, c) = cg.row_col(i);
                let mut s = 0.0;
                for rr in r * block..(r + 1) * block {
                    for cc in c * block..(c + 1) * block {
                        s += day[g.index(rr, cc)];
                    }
                }
                s / denom
            })
        })
        .collect();
    GridStack::new(cg, fine.start_date, fine.variable, values)
}

pub fn gen_weather(cfg: &SynthConfig) -> Result<Weather> {
    cfg.validate()?;
    let georef = cfg.fine_georef()?;
    let fine_cell = cfg.fine_cell();
    let mut fine = BTreeMap::new();
    for p in &cfg.products {
        if let std::collections::btree_map::Entry::Vacant(e) = fine.entry(p.variable) {
            e.insert(gen_field(cfg, georef, p.variable)?);
        }
    }
    let products = cfg
        .products
        .iter()
        .zip(cfg.blocks()?)
        .map(|(p, b)| {
            let cell = if b == 1 { fine_cell } else { p.cell_size };
            Ok((p.clone(), block_average(&fine[&p.variable], b, cell)?))
        })
        .collect::<Result<_>>()?;
    Ok(Weather { fine, products })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthEa {
    pub ea_id: String,
    pub admin_id: String,
    pub stratum: Stratum,
    /// Mean of member coordinates.
    pub center: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub households: Vec<Household>,
    pub eas: Vec<SynthEa>,
    pub admins: Vec<AdminPolygon>,
}

pub fn gen_population(cfg: &SynthConfig) -> Result<Population> {
    cfg.validate()?;
    let (_, cols_t) = cfg.tile_layout();
    let t = cfg.admin_tile_deg;
    let tiles: Vec<(f64, f64)> = (0..cfg.n_admin_units)
        .map(|i| (cfg.origin_lat + (i / cols_t) as f64 * t, cfg.origin_lon + (i % cols_t) as f64 * t))
        .collect();
    let admins = tiles
        .iter()
        .enumerate()
        .map(|(i, &(lat, lon))| {
            let ring = vec![Point::new(lat, lon), Point::new(lat, lon + t), Point::new(lat + t, lon + t), Point::new(lat + t, lon)];
            AdminPolygon::new(format!("a{i:03}"), vec![ring])
        })
        .collect::<Result<Vec<_>>>()?;

    let (slat, slon) = cfg.spread_deg();
    let mut rng = cfg.rng("population");
    let mut households = Vec::with_capacity(cfg.n_eas * cfg.households_per_ea);
    let mut eas = Vec::with_capacity(cfg.n_eas);
    for e in 0..cfg.n_eas {
        let a = e % cfg.n_admin_units;
        let (lat0, lon0) = tiles[a];
        let anchor_lat = rng.random_range(lat0 + slat..=lat0 + t - slat);
        let anchor_lon = rng.random_range(lon0 + slon..=lon0 + t - slon);
        let stratum = if rng.random::<f64>() < cfg.urban_share { Stratum::Urban } else { Stratum::Rural };
        let ea_id = format!("e{e:04}");
        let start = households.len();
        for j in 0..cfg.households_per_ea {
            let jitter = |rng: &mut ChaCha8Rng, s: f64| if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 };
            households.push(Household {
                household_id: format!("h{e:04}{j:02}"),
                ea_id: ea_id.clone(),
                admin_id: admins[a].admin_id.clone(),
                lat: anchor_lat + jitter(&mut rng, slat),
                lon: anchor_lon + jitter(&mut rng, slon),
                stratum,
                season_region: SeasonRegion::Unimodal,
            });
        }
        let members: Vec<&Household> = households[start..].iter().collect();
        eas.push(SynthEa { ea_id, admin_id: admins[a].admin_id.clone(), stratum, center: ea_center(&members)? });
    }
    Ok(Population { households, eas, admins })
}

/// Latent outcome components for one household-year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub w: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub eps_yield: f64,
    pub eps_value: f64,
}

impl TruthRow {
    pub fn latent(&self, dgp: &Dgp, eps: f64) -> f64 {
        self.alpha + self.gamma + dgp.beta1 * self.w + dgp.beta2 * self.w * self.w + eps
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Household-location series from bilinear extraction on the finest grid, keyed by household id.
    pub series: Vec<DailySeries>,
    pub metrics: Vec<MetricRow>,
    pub components: BTreeMap<(String, i32), TruthRow>,
}

/// Draws effects and noise and emits outcomes for every household-year present in `w`.
/// Both outcomes share `α_h` and `γ_t`; each has its own noise draw.
pub fn gen_outcomes(
    cfg: &SynthConfig,
    households: &[Household],
    w: &BTreeMap<(String, i32), f64>,
) -> Result<(Vec<OutcomeRecord>, BTreeMap<(String, i32), TruthRow>)> {
    let d = cfg.dgp;
    let mut years: Vec<i32> = w.keys().map(|k| k.1).collect();
    years.sort_unstable();
    years.dedup();
    let mut rng = cfg.rng("outcomes");
    let gamma: BTreeMap<i32, f64> = years.iter().map(|&y| (y, d.year_sd * normal(&mut rng))).collect();
    let mut records = Vec::new();
    let mut truth = BTreeMap::new();
    for h in households {
        let alpha = d.intercept + d.household_sd * normal(&mut rng);
        for &y in &years {
            let (e1, e2) = (d.noise_sd * normal(&mut rng), d.noise_sd * normal(&mut rng));
            let Some(&wv) = w.get(&(h.household_id.clone(), y)) else { continue };
            let row = TruthRow { w: wv, alpha, gamma: gamma[&y], eps_yield: e1, eps_value: e2 };
            let (ly, lv) = (row.latent(&d, e1), row.latent(&d, e2));
            if ly < 0.0 || lv < 0.0 {
                return Err(Error::Invalid(format!(
                    "household {} year {y} draws a negative outcome; raise dgp.intercept",
                    h.household_id
                )));
            }
            records.push(OutcomeRecord {
                household_id: h.household_id.clone(),
                year: y,
                yield_kg_ha: Some(ly.sinh()),
                harvest_value_usd_ha: Some(lv.sinh()),
            });
            truth.insert((h.household_id.clone(), y), row);
        }
    }
    Ok((records, truth))
}

/// Bilinear series at each household's true location on the finest grid of `variable`.
pub fn true_series(weather: &Weather, households: &[Household], variable: Variable) -> Result<Vec<DailySeries>> {
    let stack = weather
        .fine
        .get(&variable)
        .ok_or_else(|| Error::Invalid(format!("no {} field generated", variable.name())))?;
    households
        .par_iter()
        .map(|h| {
            let plan = ExtractionPlan::bilinear(&stack.georef, h.point(), Interpolation::Bilinear)?;
            apply_plan(stack, &plan, &h.household_id)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SynthWorld {
    pub config: SynthConfig,
    pub weather: Weather,
    pub population: Population,
    pub outcomes: Vec<OutcomeRecord>,
    pub truth: GroundTruth,
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthWorld> {
    cfg.validate()?;
    let weather = gen_weather(cfg)?;
    let population = gen_population(cfg)?;
    let variable = cfg.dgp.metric.family().variable();
    let series = true_series(&weather, &population.households, variable)?;
    let window = SeasonCalendar::builtin(&cfg.calendar).expect("validated").window(SeasonRegion::Unimodal)?;
    let per: Vec<Vec<MetricRow>> = series
        .par_iter()
        .map(|s| feature_metrics(s, variable, window, GddBounds::default(), None))
        .collect::<Result<_>>()?;
    let metrics: Vec<MetricRow> = per.into_iter().flatten().collect();
    let mut w = BTreeMap::new();
    for r in &metrics {
        let v = r.get(cfg.dgp.metric).filter(|v| v.is_finite()).ok_or_else(|| {
            Error::InsufficientData(format!("{} undefined for {} in {}", cfg.dgp.metric.name(), r.feature_id, r.harvest_year))
        })?;
        w.insert((r.feature_id.clone(), r.harvest_year), v);
    }
    let (outcomes, components) = gen_outcomes(cfg, &population.households, &w)?;
    Ok(SynthWorld {
        config: cfg.clone(),
        weather,
        population,
        outcomes,
        truth: GroundTruth { series, metrics, components },
    })
}

/// Writes the fixture in the pipeline's own input formats:
/// `stacks/<product>.wxstack`, `households.csv`, `admins.txt`, `outcomes.csv`,
/// plus `truth.csv` and `synth_config.json`.
pub fn write_fixture(world: &SynthWorld, dir: &Path) -> Result<()> {
    let stacks = dir.join("stacks");
    std::fs::create_dir_all(&stacks).map_err(|e| Error::io(&stacks, e))?;
    for (p, s) in &world.weather.products {
        write_stack(s, stacks.join(format!("{}.wxstack", p.name)))?;
    }
    write_households(&world.population.households, dir.join("households.csv"))?;
    write_polygons(&world.population.admins, dir.join("admins.txt"))?;
    write_outcomes_csv(&world.outcomes, &dir.join("outcomes.csv"))?;

    let mut truth = String::from("household_id,year,w,alpha,gamma,eps_yield,eps_value\n");
    for ((h, y), r) in &world.truth.components {
        truth.push_str(&format!(
            "{h},{y},{},{},{},{},{}\n",
            fmt_f64(r.w),
            fmt_f64(r.alpha),
            fmt_f64(r.gamma),
            fmt_f64(r.eps_yield),
            fmt_f64(r.eps_value)
        ));
    }
    let p = dir.join("truth.csv");
    std::fs::write(&p, truth).map_err(|e| Error::io(&p, e))?;
    let p = dir.join("synth_config.json");
    let text = serde_json::to_string_pretty(&world.config).expect("config serializes");
    std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::point_in_polygon;
    use crate::raster::read_stack;

    fn small() -> SynthConfig {
        SynthConfig {
            seed: 4,
            n_eas: 8,
            households_per_ea: 3,
            start_year: 2014,
            end_year: 2016,
            ..Default::default()
        }
    }

    #[test]
    fn zero_noise_zero_basis_is_constant() {
        let mut c = small();
        c.temperature = FieldParams { mean: 21.5, amplitude: 0.0, field_sd: 0.0, noise_sd: 0.0 };
        c.products.retain(|p| p.variable == Variable::Temperature);
        c.dgp.metric = Metric::MeanC;
        let w = gen_weather(&c).unwrap();
        for (_, s) in &w.products {
            assert!(s.values.iter().all(|&v| v == 21.5));
        }
    }

    #[test]
    fn coarse_cells_are_block_means_and_rain_is_nonnegative() {
        let w = gen_weather(&small()).unwrap();
        let fine = &w.fine[&Variable::Precipitation];
        assert!(fine.values.iter().all(|&v| v >= 0.0));
        let coarse = w.product("rain_coarse").unwrap();
        let b = 10;
        assert_eq!(coarse.georef.n_cols * b, fine.georef.n_cols);
        for d in [0, 17, fine.n_days - 1] {
            for r in 0..coarse.georef.n_rows {
                for c in 0..coarse.georef.n_cols {
                    let mut s = 0.0;
                    for rr in 0..b {
                        for cc in 0..b {
                            s += fine.day(d)[fine.georef.index(r * b + rr, c * b + cc)];
                        }
                    }
                    let v = coarse.day(d)[coarse.georef.index(r, c)];
                    assert!((v - s / 100.0).abs() < 1e-12);
                }
            }
        }
        let again = gen_weather(&small()).unwrap();
        assert_eq!(again.product("rain_mid"), w.product("rain_mid"));
    }

    #[test]
    fn field_has_spatial_variation() {
        let w = gen_weather(&small()).unwrap();
        let t = &w.fine[&Variable::Temperature];
        let day = t.day(100);
        let (lo, hi) = day.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi - lo > 1.0);
    }

    #[test]
    fn population_geometry() {
        let c = small();
        let p = gen_population(&c).unwrap();
        assert_eq!(p.households.len(), c.n_eas * c.households_per_ea);
        assert_eq!(p.admins.len(), c.n_admin_units);
        for h in &p.households {
            let a = p.admins.iter().find(|a| a.admin_id == h.admin_id).unwrap();
            assert!(point_in_polygon(h.point(), &a.rings));
        }
        for ea in &p.eas {
            let m: Vec<&Household> = p.households.iter().filter(|h| h.ea_id == ea.ea_id).collect();
            let lat = m.iter().map(|h| h.lat).sum::<f64>() / m.len() as f64;
            let lon = m.iter().map(|h| h.lon).sum::<f64>() / m.len() as f64;
            assert!((ea.center.lat - lat).abs() < 1e-12 && (ea.center.lon - lon).abs() < 1e-12);
        }
        assert!(c.fine_georef().unwrap().contains(p.households[0].point()));
    }

    #[test]
    fn outcome_identity_and_fixture_files() {
        let world = generate(&small()).unwrap();
        let d = world.config.dgp;
        assert_eq!(world.outcomes.len(), 24 * 3);
        for o in &world.outcomes {
            let t = world.truth.components[&(o.household_id.clone(), o.year)];
            assert!((o.yield_kg_ha.unwrap().asinh() - t.latent(&d, t.eps_yield)).abs() < 1e-12);
            assert!((o.harvest_value_usd_ha.unwrap().asinh() - t.latent(&d, t.eps_value)).abs() < 1e-12);
        }
        let dir = tempfile::tempdir().unwrap();
        write_fixture(&world, dir.path()).unwrap();
        let back = read_stack(dir.path().join("stacks/rain_fine.wxstack")).unwrap();
        assert_eq!(&back, world.weather.product("rain_fine").unwrap());
        assert!(dir.path().join("synth_config.json").exists());
    }

    #[test]
    fn config_validation() {
        let mut c = small();
        c.ar1 = 1.0;
        assert!(c.validate().is_err());
        let mut c = small();
        c.products[1].cell_size = 0.07;
        assert!(c.validate().is_err());
        let mut c = small();
        c.rainfall.noise_sd = -1.0;
        assert!(c.validate().is_err());
    }
}
