//! Result tables, grouped aggregates and charts.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use super::{
    difference_test, mean_loglik, share_significant, spec_curve, Axis, HeuristicVerdict, MeanCi, Outcome, OutcomeRecord, Product,
    ProportionCi, RegressionTask, Share, Statistic, TaskError, TaskOutcome, TaskRecord,
};
use crate::chart::{bar_chart, spec_curve_chart, Bar};
use crate::econometrics::{RegressionResult, RegressionSpec};
use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricFamily};
use crate::num::fmt_f64;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse { line: 0, msg: format!("{}: {other:?}", path.display()) },
    }
}

fn err(p: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| csv_err(p, e)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn family_name(f: MetricFamily) -> &'static str {
    match f {
        MetricFamily::Rainfall => "rainfall",
        MetricFamily::Temperature => "temperature",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_tasks_csv(tasks: &[RegressionTask], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| csv_err(path, e);
    w.write_record(["task_id", "country", "product", "family", "method", "metric", "outcome", "spec"]).map_err(err)?;
    for t in tasks {
        w.write_record([
            t.task_id.as_str(),
            &t.country,
            &t.product.name,
            family_name(t.product.family),
            &t.method,
            t.metric.name(),
            t.outcome.name(),
            t.spec.name(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_tasks_csv(path: &Path) -> Result<Vec<RegressionTask>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        if rec.len() != 8 {
            return Err(Error::Parse { line, msg: "tasks row needs 8 fields".into() });
        }
        let family = match &rec[3] {
            "rainfall" => MetricFamily::Rainfall,
            "temperature" => MetricFamily::Temperature,
            f => return Err(Error::ParseToken { line, token: f.into() }),
        };
        let metric: Metric = rec[5].parse()?;
        let outcome: Outcome = rec[6].parse()?;
        let spec: RegressionSpec = rec[7].parse()?;
        let t = RegressionTask::new(&rec[1], &Product::new(&rec[2], family), &rec[4], metric, outcome, spec);
        if t.task_id != rec[0] {
            return Err(Error::Parse { line, msg: format!("task id {} does not match its axes", &rec[0]) });
        }
        out.push(t);
    }
    Ok(out)
}

/// `household_id,year,yield_kg_ha,harvest_value_usd_ha`; blank cells are missing values.
pub fn write_outcomes_csv(records: &[OutcomeRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| csv_err(path, e);
    w.write_record(["household_id", "year", "yield_kg_ha", "harvest_value_usd_ha"]).map_err(err)?;
    for r in records {
        w.write_record([r.household_id.clone(), r.year.to_string(), opt(r.yield_kg_ha), opt(r.harvest_value_usd_ha)])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_outcomes_csv(path: &Path) -> Result<Vec<OutcomeRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let expected = ["household_id", "year", "yield_kg_ha", "harvest_value_usd_ha"];
    if r.headers().map_err(|e| csv_err(path, e))?.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse { line: 1, msg: format!("outcome header must be {}", expected.join(",")) });
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        let num = |k: usize| -> Result<Option<f64>> {
            let t = rec[k].trim();
            if t.is_empty() || t.eq_ignore_ascii_case("na") {
                return Ok(None);
            }
            t.parse().map(Some).map_err(|_| Error::ParseToken { line, token: t.into() })
        };
        out.push(OutcomeRecord {
            household_id: rec[0].to_string(),
            year: rec[1].trim().parse().map_err(|_| Error::ParseToken { line, token: rec[1].into() })?,
            yield_kg_ha: num(2)?,
            harvest_value_usd_ha: num(3)?,
        });
    }
    Ok(out)
}

/// `task_id,beta1,se1,p1,beta2,se2,p2,loglik,n_obs,n_clusters`; failed tasks leave the numbers blank.
pub fn write_results_csv(records: &[TaskRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| csv_err(path, e);
    w.write_record(["task_id", "beta1", "se1", "p1", "beta2", "se2", "p2", "loglik", "n_obs", "n_clusters"])
        .map_err(err)?;
    for rec in records {
        let row: Vec<String> = match &rec.outcome {
            TaskOutcome::Result(r) => vec![
                rec.task_id.clone(),
                fmt_f64(r.beta1),
                fmt_f64(r.se1),
                fmt_f64(r.p1),
                opt(r.beta2),
                opt(r.se2),
                opt(r.p2),
                fmt_f64(r.loglik),
                r.n_obs.to_string(),
                r.n_clusters.to_string(),
            ],
            TaskOutcome::Error(_) => {
                let mut v = vec![rec.task_id.clone()];
                v.resize(10, String::new());
                v
            }
        };
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_errors_csv(records: &[TaskRecord], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| csv_err(path, e);
    w.write_record(["task_id", "class", "message"]).map_err(err)?;
    for rec in records {
        if let TaskOutcome::Error(e) = &rec.outcome {
            w.write_record([rec.task_id.as_str(), &e.class, &e.message]).map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads results plus the companion errors file. `dof_used` and `n_dropped` are not
/// part of the table and come back as zero.
pub fn read_results_csv(results: &Path, errors: &Path) -> Result<Vec<TaskRecord>> {
    let mut errs: HashMap<String, TaskError> = HashMap::new();
    let mut r = csv::Reader::from_path(errors).map_err(|e| csv_err(errors, e))?;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(errors, e))?;
        errs.insert(rec[0].to_string(), TaskError { class: rec[1].to_string(), message: rec[2].to_string() });
    }
    let mut r = csv::Reader::from_path(results).map_err(|e| csv_err(results, e))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(results, e))?;
        let line = i + 2;
        let id = rec[0].to_string();
        if rec[1].is_empty() {
            let e = errs
                .remove(&id)
                .ok_or_else(|| Error::Parse { line, msg: format!("task {id} has no result and no error") })?;
            out.push(TaskRecord { task_id: id, outcome: TaskOutcome::Error(e) });
            continue;
        }
        let f = |k: usize| -> Result<f64> { rec[k].parse().map_err(|_| Error::ParseToken { line, token: rec[k].into() }) };
        let o = |k: usize| -> Result<Option<f64>> { if rec[k].is_empty() { Ok(None) } else { f(k).map(Some) } };
        let u = |k: usize| -> Result<usize> { rec[k].parse().map_err(|_| Error::ParseToken { line, token: rec[k].into() }) };
        let r = RegressionResult {
            beta1: f(1)?,
            se1: f(2)?,
            p1: f(3)?,
            beta2: o(4)?,
            se2: o(5)?,
            p2: o(6)?,
            loglik: f(7)?,
            n_obs: u(8)?,
            n_clusters: u(9)?,
            dof_used: 0,
            n_dropped: 0,
        };
        out.push(TaskRecord { task_id: id, outcome: TaskOutcome::Result(r) });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub key: Vec<String>,
    pub n_tasks: usize,
    pub n_ok: usize,
    pub loglik: Option<MeanCi>,
    pub shares: Vec<Share>,
    /// Shares on the quadratic coefficient, over quadratic specs only.
    pub shares_beta2: Vec<Share>,
}

pub fn summarize(
    tasks: &[RegressionTask],
    records: &[TaskRecord],
    axes: &[Axis],
    alphas: &[f64],
    ci: ProportionCi,
) -> Result<Vec<GroupSummary>> {
    if tasks.len() != records.len() {
        return Err(Error::Shape(format!("{} tasks but {} records", tasks.len(), records.len())));
    }
    let mut groups: BTreeMap<Vec<String>, Vec<(&RegressionTask, Option<&RegressionResult>)>> = BTreeMap::new();
    for (t, r) in tasks.iter().zip(records) {
        groups.entry(axes.iter().map(|a| t.axis(*a)).collect()).or_default().push((t, r.result()));
    }
    groups
        .into_iter()
        .map(|(key, members)| {
            let ok: Vec<&RegressionResult> = members.iter().filter_map(|(_, r)| *r).collect();
            let ll: Vec<f64> = ok.iter().map(|r| r.loglik).collect();
            let p1: Vec<f64> = ok.iter().map(|r| r.p1).collect();
            let p2: Vec<f64> = ok.iter().filter_map(|r| r.p2).collect();
            Ok(GroupSummary {
                key,
                n_tasks: members.len(),
                n_ok: ok.len(),
                loglik: if ll.is_empty() { None } else { Some(mean_loglik(&ll)?) },
                shares: if p1.is_empty() { Vec::new() } else { share_significant(&p1, alphas, ci)? },
                shares_beta2: if p2.is_empty() { Vec::new() } else { share_significant(&p2, alphas, ci)? },
            })
        })
        .collect()
}

/// Compares each group with the group that differs only in the method axis,
/// where the method equals `baseline`.
pub fn verdicts_against(
    summaries: &[GroupSummary],
    method_pos: usize,
    baseline: &str,
    statistic: Statistic,
    alpha: f64,
) -> Vec<(Vec<String>, Option<HeuristicVerdict>)> {
    let index: HashMap<&Vec<String>, &GroupSummary> = summaries.iter().map(|s| (&s.key, s)).collect();
    let interval = |s: &GroupSummary| match statistic {
        Statistic::MeanLoglik => s.loglik.map(|m| m.interval()),
        _ => s.shares.iter().find(|x| x.alpha == alpha).map(|x| x.interval()),
    };
    summaries
        .iter()
        .map(|s| {
            let mut base_key = s.key.clone();
            base_key[method_pos] = baseline.to_string();
            let v = index.get(&base_key).and_then(|b| {
                let (a, bi) = (interval(s)?, interval(b)?);
                Some(HeuristicVerdict {
                    comparison: (s.key[method_pos].clone(), baseline.to_string()),
                    statistic,
                    verdict: difference_test(a, bi),
                })
            });
            (s.key.clone(), v)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub alphas: Vec<f64>,
    pub ci: ProportionCi,
    /// Method that verdicts compare against; `None` skips verdicts.
    pub baseline: Option<String>,
    pub charts: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { alphas: vec![0.10, 0.05, 0.01], ci: ProportionCi::Wald, baseline: Some("hh_bilinear".into()), charts: true }
    }
}

fn verdict_cell(v: &Option<HeuristicVerdict>) -> &'static str {
    v.as_ref().map_or("", |h| h.verdict.name())
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes aggregate tables, spec curves and charts into `dir`; returns the files written.
pub fn write_report(dir: &Path, tasks: &[RegressionTask], records: &[TaskRecord], opts: &ReportOptions) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let alpha_main = if opts.alphas.contains(&0.05) { 0.05 } else { opts.alphas.first().copied().unwrap_or(0.05) };

    // Mean log-likelihood by specification and method.
    let ll_axes = [Axis::Spec, Axis::Method];
    let ll = summarize(tasks, records, &ll_axes, &opts.alphas, opts.ci)?;
    let ll_v = opts.baseline.as_deref().map(|b| verdicts_against(&ll, 1, b, Statistic::MeanLoglik, alpha_main));
    let path = dir.join("loglik_by_spec_method.csv");
    let mut w = writer(&path)?;
    w.write_record(["spec", "method", "n_tasks", "n_ok", "mean_loglik", "lo", "hi", "verdict_vs_baseline"])
        .map_err(err(&path))?;
    for (i, s) in ll.iter().enumerate() {
        let (m, lo, hi) = match s.loglik {
            Some(m) => (fmt_f64(m.mean), opt(m.ci.map(|c| c.0)), opt(m.ci.map(|c| c.1))),
            None => Default::default(),
        };
        let v = ll_v.as_ref().map_or("", |v| verdict_cell(&v[i].1));
        w.write_record([&s.key[0], &s.key[1], &s.n_tasks.to_string(), &s.n_ok.to_string(), &m, &lo, &hi, v])
            .map_err(err(&path))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);

    // Significance shares.
    for (name, axes) in [
        ("share_by_family_method", vec![Axis::Family, Axis::Method]),
        ("share_by_country_family_method", vec![Axis::Country, Axis::Family, Axis::Method]),
    ] {
        let sm = summarize(tasks, records, &axes, &opts.alphas, opts.ci)?;
        let mpos = axes.len() - 1;
        let path = dir.join(format!("{name}.csv"));
        let mut w = writer(&path)?;
        let mut header: Vec<&str> = axes.iter().map(|a| a.name()).collect();
        header.extend(["coefficient", "n", "alpha", "share", "lo", "hi", "verdict_vs_baseline"]);
        w.write_record(&header).map_err(err(&path))?;
        for &alpha in &opts.alphas {
            let verdicts = opts.baseline.as_deref().map(|b| verdicts_against(&sm, mpos, b, Statistic::ShareSignificant, alpha));
            for (i, s) in sm.iter().enumerate() {
                for (coef, shares) in [("beta1", &s.shares), ("beta2", &s.shares_beta2)] {
                    let Some(sh) = shares.iter().find(|x| x.alpha == alpha) else { continue };
                    let v = if coef == "beta1" { verdicts.as_ref().map_or("", |v| verdict_cell(&v[i].1)) } else { "" };
                    let mut row: Vec<String> = s.key.clone();
                    row.extend([
                        coef.to_string(),
                        sh.n.to_string(),
                        fmt_f64(alpha),
                        fmt_f64(sh.share),
                        fmt_f64(sh.lo),
                        fmt_f64(sh.hi),
                        v.to_string(),
                    ]);
                    w.write_record(&row).map_err(err(&path))?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);

        if opts.charts && name == "share_by_family_method" {
            for fam in ["rainfall", "temperature"] {
                let bars: Vec<Bar> = sm
                    .iter()
                    .filter(|s| s.key[0] == fam)
                    .filter_map(|s| {
                        let sh = s.shares.iter().find(|x| x.alpha == alpha_main)?;
                        Some(Bar { label: s.key[1].clone(), value: sh.share, lo: sh.lo, hi: sh.hi })
                    })
                    .collect();
                if bars.is_empty() {
                    continue;
                }
                let base = opts.baseline.as_ref().and_then(|b| bars.iter().find(|x| &x.label == b)).map(|b| b.value);
                let title = format!("{fam}: share of beta1 with p < {}", fmt_f64(alpha_main));
                let path = dir.join(format!("share_{fam}.svg"));
                std::fs::write(&path, bar_chart(&title, "share significant", &bars, base)).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
    }

    if opts.charts {
        for spec in RegressionSpec::ALL {
            let bars: Vec<Bar> = ll
                .iter()
                .filter(|s| s.key[0] == spec.name())
                .filter_map(|s| {
                    let m = s.loglik?;
                    let iv = m.interval();
                    Some(Bar { label: s.key[1].clone(), value: iv.value, lo: iv.lo, hi: iv.hi })
                })
                .collect();
            if bars.is_empty() {
                continue;
            }
            let base = opts.baseline.as_ref().and_then(|b| bars.iter().find(|x| &x.label == b)).map(|b| b.value);
            let path = dir.join(format!("loglik_{}.svg", spec.name()));
            let title = format!("mean log likelihood, {}", spec.name());
            std::fs::write(&path, bar_chart(&title, "mean log likelihood", &bars, base)).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }

    // Coefficient verdicts against the baseline method's task.
    if let Some(base) = &opts.baseline {
        let by_axes: HashMap<(String, String, Metric, Outcome, RegressionSpec, String), (&RegressionTask, &TaskRecord)> = tasks
            .iter()
            .zip(records)
            .map(|(t, r)| ((t.country.clone(), t.product.name.clone(), t.metric, t.outcome, t.spec, t.method.clone()), (t, r)))
            .collect();
        let path = dir.join("coefficient_verdicts.csv");
        let mut w = writer(&path)?;
        w.write_record(["task_id", "baseline_task_id", "verdict"]).map_err(err(&path))?;
        for (t, r) in tasks.iter().zip(records) {
            if &t.method == base {
                continue;
            }
            let key = (t.country.clone(), t.product.name.clone(), t.metric, t.outcome, t.spec, base.clone());
            let Some((bt, br)) = by_axes.get(&key) else { continue };
            let (Some(a), Some(b)) = (r.result(), br.result()) else { continue };
            let rows = [(t, a), (*bt, b)];
            let curve = spec_curve(&rows.iter().map(|(t, r)| (*t, *r)).collect::<Vec<_>>());
            let iv = |id: &str| {
                let c = curve.iter().find(|c| c.task.task_id == id).unwrap();
                super::Interval { value: c.beta, lo: c.lo, hi: c.hi }
            };
            let v = difference_test(iv(&t.task_id), iv(&bt.task_id));
            w.write_record([t.task_id.as_str(), &bt.task_id, v.name()]).map_err(err(&path))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    // Specification curves: one panel per country, metric and specification.
    let mut panels: BTreeMap<(String, Metric, RegressionSpec), Vec<(&RegressionTask, &RegressionResult)>> = BTreeMap::new();
    for (t, r) in tasks.iter().zip(records) {
        if let Some(res) = r.result() {
            panels.entry((t.country.clone(), t.metric, t.spec)).or_default().push((t, res));
        }
    }
    let path = dir.join("spec_curves.csv");
    let mut w = writer(&path)?;
    w.write_record([
        "country", "metric", "spec", "rank", "task_id", "product", "method", "outcome", "beta1", "lo", "hi", "significant",
    ])
    .map_err(err(&path))?;
    let curve_dir = dir.join("spec_curves");
    if opts.charts {
        std::fs::create_dir_all(&curve_dir).map_err(|e| Error::io(&curve_dir, e))?;
    }
    for ((country, metric, spec), rows) in &panels {
        let curve = spec_curve(rows);
        for (rank, c) in curve.iter().enumerate() {
            w.write_record([
                country.as_str(),
                metric.name(),
                spec.name(),
                &rank.to_string(),
                &c.task.task_id,
                &c.task.product.name,
                &c.task.method,
                c.task.outcome.name(),
                &fmt_f64(c.beta),
                &fmt_f64(c.lo),
                &fmt_f64(c.hi),
                if c.significant { "1" } else { "0" },
            ])
            .map_err(err(&path))?;
        }
        if opts.charts {
            let p = curve_dir.join(format!("{}_{}_{}.svg", file_safe(country), metric.name(), spec.name()));
            let title = format!("{country} / {} / {}", metric.name(), spec.name());
            let svg = spec_curve_chart(&title, &curve, &[Axis::Method, Axis::Product, Axis::Outcome]);
            std::fs::write(&p, svg).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}
