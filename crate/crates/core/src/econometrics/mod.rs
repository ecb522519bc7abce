//! Panel regressions of asinh outcomes on one weather metric.
//!
//! Four specifications: pooled or two-way fixed effects, each linear or
//! quadratic in the weather variable. Fixed effects are absorbed by
//! demeaning within household; year effects enter as demeaned dummies.
//! Standard errors are CR1 clustered by household.

mod linalg;

pub use linalg::{cluster_covariance, cluster_se, ols, Matrix, OlsFit, RANK_TOL};

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn asinh_transform(y: f64) -> f64 {
    y.asinh()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelObservation {
    pub household_id: String,
    pub year: i32,
    /// Yield or harvest value; `None` when missing.
    pub outcome_raw: Option<f64>,
    pub weather: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RegressionSpec {
    pub form: Form,
    pub fixed_effects: bool,
}

impl RegressionSpec {
    pub const ALL: [RegressionSpec; 4] = [
        RegressionSpec { form: Form::Linear, fixed_effects: false },
        RegressionSpec { form: Form::Linear, fixed_effects: true },
        RegressionSpec { form: Form::Quadratic, fixed_effects: false },
        RegressionSpec { form: Form::Quadratic, fixed_effects: true },
    ];

    pub fn name(self) -> &'static str {
        match (self.form, self.fixed_effects) {
            (Form::Linear, false) => "linear",
            (Form::Linear, true) => "linear_fe",
            (Form::Quadratic, false) => "quadratic",
            (Form::Quadratic, true) => "quadratic_fe",
        }
    }
}

impl fmt::Display for RegressionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegressionSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RegressionSpec::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown regression spec {s:?}")))
    }
}

impl TryFrom<String> for RegressionSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RegressionSpec> for String {
    fn from(r: RegressionSpec) -> String {
        r.name().into()
    }
}

/// Outcome transform applied before estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transform {
    #[default]
    Asinh,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub beta1: f64,
    pub se1: f64,
    pub p1: f64,
    pub beta2: Option<f64>,
    pub se2: Option<f64>,
    pub p2: Option<f64>,
    pub loglik: f64,
    pub n_obs: usize,
    pub n_clusters: usize,
    /// Parameters estimated, counting absorbed household effects.
    pub dof_used: usize,
    /// Observations removed by listwise deletion.
    pub n_dropped: usize,
}

pub fn fit(observations: &[PanelObservation], spec: RegressionSpec) -> Result<RegressionResult> {
    fit_with(observations, spec, Transform::Asinh)
}

/// Design matrix and response after deletion, transform and (for FE) demeaning.
pub struct Design {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub names: Vec<String>,
    pub clusters: Vec<usize>,
    pub n_clusters: usize,
    pub n_dropped: usize,
}

pub fn build_design(observations: &[PanelObservation], spec: RegressionSpec, transform: Transform) -> Result<Design> {
    let mut seen = BTreeSet::new();
    let mut rows = Vec::with_capacity(observations.len());
    for o in observations {
        if !seen.insert((o.household_id.as_str(), o.year)) {
            return Err(Error::Invalid(format!("duplicate observation for {} in {}", o.household_id, o.year)));
        }
        match (o.outcome_raw, o.weather) {
            (Some(y), Some(w)) if y.is_finite() && w.is_finite() => {
                if y < 0.0 {
                    return Err(Error::Invalid(format!("negative outcome {y} for {} in {}", o.household_id, o.year)));
                }
                rows.push((o, y, w));
            }
            _ => {}
        }
    }
    let n_dropped = observations.len() - rows.len();
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptySubset);
    }

    let mut cluster_of: HashMap<&str, usize> = HashMap::new();
    let clusters: Vec<usize> = rows
        .iter()
        .map(|(o, _, _)| {
            let k = cluster_of.len();
            *cluster_of.entry(o.household_id.as_str()).or_insert(k)
        })
        .collect();
    let n_clusters = cluster_of.len();
    if n_clusters < 2 {
        return Err(Error::Cluster(n_clusters));
    }

    let y: Vec<f64> = rows
        .iter()
        .map(|(_, y, _)| match transform {
            Transform::Asinh => asinh_transform(*y),
            Transform::Identity => *y,
        })
        .collect();
    let w: Vec<f64> = rows.iter().map(|(_, _, w)| *w).collect();

    let mut names = Vec::new();
    let mut cols = Vec::new();
    if !spec.fixed_effects {
        names.push("intercept".to_string());
        cols.push(vec![1.0; n]);
    }
    names.push("weather".to_string());
    cols.push(w.clone());
    if spec.form == Form::Quadratic {
        names.push("weather_sq".to_string());
        cols.push(w.iter().map(|v| v * v).collect());
    }
    let mut y = y;
    if spec.fixed_effects {
        let years: BTreeSet<i32> = rows.iter().map(|(o, _, _)| o.year).collect();
        for &yr in years.iter().skip(1) {
            names.push(format!("year_{yr}"));
            cols.push(rows.iter().map(|(o, _, _)| if o.year == yr { 1.0 } else { 0.0 }).collect());
        }
        let mut size = vec![0usize; n_clusters];
        clusters.iter().for_each(|&c| size[c] += 1);
        let demean = |v: &mut Vec<f64>| {
            let mut sum = vec![0.0; n_clusters];
            for (x, &c) in v.iter().zip(&clusters) {
                sum[c] += x;
            }
            for (x, &c) in v.iter_mut().zip(&clusters) {
                *x -= sum[c] / size[c] as f64;
            }
        };
        demean(&mut y);
        cols.iter_mut().for_each(demean);
    }
    let x = Matrix::from_columns(n, cols)?;
    Ok(Design { x, y, names, clusters, n_clusters, n_dropped })
}

pub fn fit_with(observations: &[PanelObservation], spec: RegressionSpec, transform: Transform) -> Result<RegressionResult> {
    let d = build_design(observations, spec, transform)?;
    let n = d.y.len();
    let k = d.x.n_cols;
    let dof_used = k + if spec.fixed_effects { d.n_clusters } else { 0 };
    if n <= k {
        return Err(Error::DegenerateFit(format!("{n} observations for {k} regressors")));
    }
    let f = ols(&d.x, &d.y, &d.names)?;
    // Within residuals coincide with the dummy-variable residuals.
    let rss: f64 = f.residuals.iter().map(|u| u * u).sum();
    if rss == 0.0 {
        return Err(Error::DegenerateFit("zero residual variance".into()));
    }
    let loglik = -(n as f64) / 2.0 * ((2.0 * std::f64::consts::PI).ln() + (rss / n as f64).ln() + 1.0);
    let se = cluster_se(&d.x, &f.residuals, &d.clusters, &f.xtx_inv)?;
    let t = StudentsT::new(0.0, 1.0, (d.n_clusters - 1) as f64).map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let p_value = |b: f64, s: f64| {
        let stat = (b / s).abs();
        if stat.is_nan() {
            1.0
        } else {
            (2.0 * t.sf(stat)).min(1.0)
        }
    };
    let i1 = usize::from(!spec.fixed_effects);
    let (beta1, se1) = (f.beta[i1], se[i1]);
    let quad = (spec.form == Form::Quadratic).then(|| (f.beta[i1 + 1], se[i1 + 1]));
    Ok(RegressionResult {
        beta1,
        se1,
        p1: p_value(beta1, se1),
        beta2: quad.map(|q| q.0),
        se2: quad.map(|q| q.1),
        p2: quad.map(|(b, s)| p_value(b, s)),
        loglik,
        n_obs: n,
        n_clusters: d.n_clusters,
        dof_used,
        n_dropped: d.n_dropped,
    })
}
