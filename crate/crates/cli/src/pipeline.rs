//! Pipeline stages. Each stage writes into a hidden partial directory and
//! renames it into place when complete, so a stage directory that exists is
//! finished, and rerunning it is a no-op.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use geomv::extraction::{extract_all, read_series_bin, write_series_bin};
use geomv::geomask::{build_features, read_features, read_households, read_polygons, write_features, Method, SeasonRegion};
use geomv::metrics::{metrics_all, read_metrics_long, write_metrics_long, write_metrics_wide, MetricFamily, MetricJob, MetricRow};
use geomv::multiverse::{
    dataset_name, enumerate_tasks, read_journal, read_outcomes_csv, read_results_csv, read_tasks_csv, run_lattice, write_errors_csv, write_journal,
    write_report, write_results_csv, write_tasks_csv, BlindingKey, PanelStore, ReportOptions, TaskRecord,
};
use geomv::raster::read_stack;
use geomv::synthgen::{generate, write_fixture};
use geomv::{Error, Result};

use crate::manifest::{CountryEntry, ProductEntry, RunManifest};

pub const STAGES: [&str; 6] = ["mask", "extract", "metrics", "run", "unblind", "synth"];

/// A validated manifest bound to its content-addressed output directory.
pub struct Context {
    pub manifest: RunManifest,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageStatus {
    Done,
    Skipped,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub tasks: usize,
    pub computed: usize,
    pub reused: usize,
    pub errors: usize,
}

fn io<P: AsRef<Path>>(p: P) -> impl FnOnce(std::io::Error) -> Error {
    move |e| Error::io(p.as_ref(), e)
}

impl Context {
    /// `root` overrides the manifest's output root (the `GEOMV_OUT` setting).
    pub fn new(manifest: RunManifest, root: Option<PathBuf>) -> Result<Self> {
        let root = root.unwrap_or_else(|| manifest.out_dir.clone());
        let out = root.join(manifest.content_hash()?);
        Ok(Context { manifest, out })
    }

    pub fn stage_dir(&self, stage: &str) -> PathBuf {
        self.out.join(stage)
    }

    fn partial(&self, stage: &str) -> PathBuf {
        self.out.join(format!(".{stage}.partial"))
    }

    pub fn is_done(&self, stage: &str) -> bool {
        self.stage_dir(stage).is_dir()
    }

    fn write_manifest(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(io(&self.out))?;
        let p = self.out.join("manifest.toml");
        if !p.exists() {
            fs::write(&p, self.manifest.canonical()).map_err(io(&p))?;
        }
        Ok(())
    }

    /// Runs `body` in a partial directory and publishes it. `keep_partial`
    /// leaves an existing partial directory in place (for resumable stages).
    fn stage(&self, name: &str, keep_partial: bool, body: impl FnOnce(&Path) -> Result<()>) -> Result<StageStatus> {
        if self.is_done(name) {
            return Ok(StageStatus::Skipped);
        }
        self.write_manifest()?;
        let tmp = self.partial(name);
        if tmp.exists() && !keep_partial {
            fs::remove_dir_all(&tmp).map_err(io(&tmp))?;
        }
        fs::create_dir_all(&tmp).map_err(io(&tmp))?;
        body(&tmp)?;
        let done = self.stage_dir(name);
        fs::rename(&tmp, &done).map_err(io(&done))?;
        Ok(StageStatus::Done)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.manifest.parallelism)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))
    }

    fn country_dir(stage: &Path, c: &CountryEntry) -> Result<PathBuf> {
        let d = stage.join(&c.name);
        fs::create_dir_all(&d).map_err(io(&d))?;
        Ok(d)
    }

    pub fn mask(&self) -> Result<StageStatus> {
        self.manifest.validate_pipeline()?;
        let params = self.manifest.mask_params();
        self.stage("mask", false, |tmp| {
            for c in &self.manifest.countries {
                let hh = read_households(&c.households)?;
                let admins = read_polygons(&c.polygons)?;
                let features = build_features(&hh, &admins, &params)?;
                write_features(&features, Self::country_dir(tmp, c)?.join("features.csv"))?;
            }
            Ok(())
        })
    }

    pub fn extract(&self) -> Result<StageStatus> {
        self.mask()?;
        let pool = self.pool()?;
        let interp = self.manifest.interpolation;
        self.stage("extract", false, |tmp| {
            for c in &self.manifest.countries {
                let features = read_features(self.stage_dir("mask").join(&c.name).join("features.csv"))?;
                let dir = Self::country_dir(tmp, c)?;
                for p in &self.manifest.products {
                    let jobs = std::iter::once((&c.stacks[&p.name], format!("{}.wxe", p.name)))
                        .chain(c.daily_max.get(&p.name).map(|m| (m, format!("{}.max.wxe", p.name))));
                    for (path, file) in jobs {
                        let stack = read_stack(path)?;
                        if stack.variable != p.variable {
                            return Err(Error::Shape(format!(
                                "{} holds {} but product {} is declared {}",
                                path.display(),
                                stack.variable.name(),
                                p.name,
                                p.variable.name()
                            )));
                        }
                        let series = pool.install(|| extract_all(&stack, &features, interp))?;
                        write_series_bin(&series, dir.join(file))?;
                    }
                }
            }
            Ok(())
        })
    }

    pub fn metrics(&self) -> Result<StageStatus> {
        self.extract()?;
        let pool = self.pool()?;
        let gdd = self.manifest.gdd;
        self.stage("metrics", false, |tmp| {
            for c in &self.manifest.countries {
                let cal = c.calendar()?;
                let region: HashMap<String, SeasonRegion> =
                    read_households(&c.households)?.into_iter().map(|h| (h.household_id, h.season_region)).collect();
                let features = read_features(self.stage_dir("mask").join(&c.name).join("features.csv"))?;
                let window_of: HashMap<&str, SeasonRegion> =
                    features.iter().map(|f| (f.feature_id.as_str(), region[&f.household_id])).collect();
                let src = self.stage_dir("extract").join(&c.name);
                let dir = Self::country_dir(tmp, c)?;
                for p in &self.manifest.products {
                    let series = read_series_bin(src.join(format!("{}.wxe", p.name)))?;
                    let max = if c.daily_max.contains_key(&p.name) {
                        Some(read_series_bin(src.join(format!("{}.max.wxe", p.name)))?)
                    } else {
                        None
                    };
                    let jobs = series
                        .iter()
                        .enumerate()
                        .map(|(i, s)| {
                            let r = window_of
                                .get(s.feature_id.as_str())
                                .ok_or_else(|| Error::Shape(format!("series {} has no feature", s.feature_id)))?;
                            Ok(MetricJob { series: s, window: cal.window(*r)?, daily_max: max.as_ref().map(|m| &m[i]) })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let rows = pool.install(|| metrics_all(&jobs, p.variable, gdd))?;
                    write_metrics_long(&rows, dir.join(format!("{}.csv", p.name)))?;
                }
            }
            Ok(())
        })
    }

    /// Metric rows for one country and product, split by method and keyed by household id.
    fn weather_tables(&self, c: &CountryEntry, p: &ProductEntry) -> Result<BTreeMap<Method, Vec<MetricRow>>> {
        let features = read_features(self.stage_dir("mask").join(&c.name).join("features.csv"))?;
        let owner: HashMap<&str, (&str, Method)> =
            features.iter().map(|f| (f.feature_id.as_str(), (f.household_id.as_str(), f.method))).collect();
        let rows = read_metrics_long(self.stage_dir("metrics").join(&c.name).join(format!("{}.csv", p.name)))?;
        let mut out: BTreeMap<Method, Vec<MetricRow>> = BTreeMap::new();
        for mut r in rows {
            let (hh, m) = *owner.get(r.feature_id.as_str()).ok_or_else(|| Error::Shape(format!("metric row for unknown feature {}", r.feature_id)))?;
            r.feature_id = hh.to_string();
            out.entry(m).or_default().push(r);
        }
        Ok(out)
    }

    pub fn run(&self) -> Result<RunStats> {
        self.metrics()?;
        if self.is_done("run") {
            let tasks = read_tasks_csv(&self.stage_dir("run").join("tasks.csv"))?;
            return Ok(RunStats { tasks: tasks.len(), reused: tasks.len(), ..Default::default() });
        }
        let m = &self.manifest;
        let lattice = m.lattice();
        let key = m.blinding.then(|| BlindingKey::for_lattice(m.seed, &lattice));
        let run_lattice_axes = match &key {
            Some(k) => k.blind_lattice(&lattice)?,
            None => lattice.clone(),
        };
        let tasks = enumerate_tasks(&run_lattice_axes)?;
        let methods = m.methods()?;

        let mut store = PanelStore::new();
        let mut datasets = Vec::new();
        for c in &m.countries {
            store.add_outcomes(&c.name, read_outcomes_csv(&c.outcomes)?);
            for p in &m.products {
                let mut tables = self.weather_tables(c, p)?;
                for method in &methods {
                    let rows = tables.remove(method).unwrap_or_default();
                    let (pname, mname) = match &key {
                        Some(k) => {
                            let fam = MetricFamily::of(p.variable);
                            let code = k.code_product(&geomv::multiverse::Product::new(&p.name, fam))?;
                            (code.name, k.code_method(method.name())?.to_string())
                        }
                        None => (p.name.clone(), method.name().to_string()),
                    };
                    if key.is_some() {
                        datasets.push((dataset_name(&c.name, &pname, &mname), rows.clone()));
                    }
                    store.add_weather(&c.name, &pname, &mname, rows);
                }
            }
        }
        store.check(&tasks)?;

        if let Some(k) = &key {
            let kd = self.out.join("key");
            fs::create_dir_all(&kd).map_err(io(&kd))?;
            k.save(&kd.join("blinding_key.json"))?;
        }

        let mut stats = RunStats { tasks: tasks.len(), ..Default::default() };
        let opts = self.report_options();
        self.stage("run", true, |tmp| {
            let journal = tmp.join("journal.jsonl");
            let summary = run_lattice(&tasks, &store, m.parallelism, Some(&journal))?;
            stats.computed = summary.computed;
            stats.reused = summary.reused;
            stats.errors = summary.records.iter().filter(|r| r.result().is_none()).count();
            write_journal(&journal, &summary.records)?;
            write_tasks_csv(&tasks, &tmp.join("tasks.csv"))?;
            write_results_csv(&summary.records, &tmp.join("results.csv"))?;
            write_errors_csv(&summary.records, &tmp.join("errors.csv"))?;
            if key.is_some() {
                let dd = tmp.join("datasets");
                fs::create_dir_all(&dd).map_err(io(&dd))?;
                for (name, rows) in &datasets {
                    write_metrics_wide(rows, dd.join(format!("{name}.csv")))?;
                }
            } else {
                write_report(&tmp.join("report"), &tasks, &summary.records, &opts)?;
            }
            Ok(())
        })?;
        Ok(stats)
    }

    fn report_options(&self) -> ReportOptions {
        let m = &self.manifest;
        ReportOptions { alphas: m.alphas.clone(), ci: m.ci, baseline: Some(m.baseline.clone()), charts: m.charts }
    }

    /// Relabels a blinded run and produces its aggregates.
    pub fn unblind(&self) -> Result<StageStatus> {
        if !self.manifest.blinding {
            return Err(Error::Invalid("manifest has blinding = false; nothing to unblind".into()));
        }
        self.run()?;
        let key = BlindingKey::load(&self.out.join("key").join("blinding_key.json"))?;
        let run = self.stage_dir("run");
        let opts = self.report_options();
        self.stage("unblind", false, |tmp| {
            let blinded = read_tasks_csv(&run.join("tasks.csv"))?;
            let records = read_results_csv(&run.join("results.csv"), &run.join("errors.csv"))?;
            let tasks = blinded.iter().map(|t| key.unblind_task(t)).collect::<Result<Vec<_>>>()?;
            let records: Vec<TaskRecord> = records
                .into_iter()
                .zip(&tasks)
                .map(|(r, t)| TaskRecord { task_id: t.task_id.clone(), outcome: r.outcome })
                .collect();
            write_tasks_csv(&tasks, &tmp.join("tasks.csv"))?;
            write_results_csv(&records, &tmp.join("results.csv"))?;
            write_errors_csv(&records, &tmp.join("errors.csv"))?;
            write_report(&tmp.join("report"), &tasks, &records, &opts).map(drop)
        })
    }

    /// Generates one synthetic world per `[synth]` country plus a manifest that runs the pipeline on them.
    pub fn synth(&self) -> Result<StageStatus> {
        self.manifest.validate_synth()?;
        let s = self.manifest.synth.clone().expect("validated");
        let pool = self.pool()?;
        self.stage("synth", false, |tmp| {
            let mut out = RunManifest { seed: self.manifest.seed, out_dir: PathBuf::from("pipeline_out"), ..Default::default() };
            out.products = s.config.products.iter().map(|p| ProductEntry { name: p.name.clone(), variable: p.variable }).collect();
            for (i, name) in s.countries.iter().enumerate() {
                let mut cfg = s.config.clone();
                cfg.seed = self.manifest.seed.wrapping_add(i as u64);
                let world = pool.install(|| generate(&cfg))?;
                let dir = tmp.join(name);
                write_fixture(&world, &dir)?;
                out.countries.push(CountryEntry {
                    name: name.clone(),
                    households: PathBuf::from(format!("{name}/households.csv")),
                    polygons: PathBuf::from(format!("{name}/admins.txt")),
                    outcomes: PathBuf::from(format!("{name}/outcomes.csv")),
                    calendar: Some(cfg.calendar.clone()),
                    stacks: cfg.products.iter().map(|p| (p.name.clone(), PathBuf::from(format!("{name}/stacks/{}.wxstack", p.name)))).collect(),
                    daily_max: BTreeMap::new(),
                });
            }
            let text = toml::to_string(&out).map_err(|e| Error::Format(e.to_string()))?;
            let p = tmp.join("manifest.toml");
            fs::write(&p, text).map_err(io(&p))
        })
    }

    pub fn journal_records(&self) -> Result<usize> {
        Ok(read_journal(&self.partial("run").join("journal.jsonl"))?.len())
    }
}
