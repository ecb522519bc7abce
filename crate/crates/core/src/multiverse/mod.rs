//! The design lattice, the parallel regression runner, and its aggregates.

mod blind;
mod report;
mod stats;

pub use blind::{blinded_dataset_names, dataset_name, BlindingKey};
pub use report::{
    read_outcomes_csv, read_results_csv, read_tasks_csv, summarize, verdicts_against, write_errors_csv, write_outcomes_csv, write_report, write_results_csv,
    write_tasks_csv, GroupSummary, ReportOptions,
};
pub use stats::{
    difference_test, mean_loglik, share_significant, spec_curve, CurveRow, HeuristicVerdict, Interval, MeanCi,
    ProportionCi, Share, Statistic, Verdict, Z95,
};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::econometrics::{fit, PanelObservation, RegressionResult, RegressionSpec};
use crate::error::{Error, ErrorClass, Result};
use crate::geomask::Method;
use crate::metrics::{Metric, MetricFamily, MetricRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Yield,
    HarvestValue,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Yield, Outcome::HarvestValue];

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Yield => "yield",
            Outcome::HarvestValue => "harvest_value",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Outcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Outcome::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown outcome {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Product {
    pub name: String,
    pub family: MetricFamily,
}

impl Product {
    pub fn new(name: impl Into<String>, family: MetricFamily) -> Self {
        Product { name: name.into(), family }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignLattice {
    pub countries: Vec<String>,
    pub products: Vec<Product>,
    pub methods: Vec<String>,
    pub metrics: Vec<Metric>,
    pub outcomes: Vec<Outcome>,
    pub specs: Vec<RegressionSpec>,
}

impl DesignLattice {
    /// Six countries, six rainfall and three temperature products, every method,
    /// metric, outcome and specification.
    pub fn full_scale() -> Self {
        let rain = ["arc2", "chirps", "cpc", "era5", "merra2", "tamsat"];
        let temp = ["cpc", "era5", "merra2"];
        DesignLattice {
            countries: crate::metrics::SeasonCalendar::BUILTIN.iter().map(|s| s.to_string()).collect(),
            products: rain
                .iter()
                .map(|p| Product::new(*p, MetricFamily::Rainfall))
                .chain(temp.iter().map(|p| Product::new(*p, MetricFamily::Temperature)))
                .collect(),
            methods: Method::ALL.iter().map(|m| m.name().to_string()).collect(),
            metrics: Metric::ALL.to_vec(),
            outcomes: Outcome::ALL.to_vec(),
            specs: RegressionSpec::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("countries", self.countries.is_empty()),
            ("products", self.products.is_empty()),
            ("methods", self.methods.is_empty()),
            ("metrics", self.metrics.is_empty()),
            ("outcomes", self.outcomes.is_empty()),
            ("specs", self.specs.is_empty()),
        ];
        if let Some((axis, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Lattice(format!("axis {axis} is empty")));
        }
        fn unique<T: Eq + std::hash::Hash>(name: &str, items: impl IntoIterator<Item = T>) -> Result<()> {
            let mut seen = HashSet::new();
            for i in items {
                if !seen.insert(i) {
                    return Err(Error::Lattice(format!("axis {name} has duplicate entries")));
                }
            }
            Ok(())
        }
        unique("countries", &self.countries)?;
        unique("products", &self.products)?;
        unique("methods", &self.methods)?;
        unique("metrics", &self.metrics)?;
        unique("outcomes", &self.outcomes)?;
        unique("specs", &self.specs)?;
        for p in &self.products {
            if !self.metrics.iter().any(|m| m.family() == p.family) {
                return Err(Error::Lattice(format!("product {} has no {:?} metrics on the lattice", p.name, p.family)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegressionTask {
    pub task_id: String,
    pub country: String,
    pub product: Product,
    pub method: String,
    pub metric: Metric,
    pub outcome: Outcome,
    pub spec: RegressionSpec,
}

pub fn task_id(country: &str, product: &str, method: &str, metric: Metric, outcome: Outcome, spec: RegressionSpec) -> String {
    let key = format!("{country}|{product}|{method}|{}|{}|{}", metric.name(), outcome.name(), spec.name());
    let digest = Sha256::digest(key.as_bytes());
    hex::encode(&digest[..8])
}

impl RegressionTask {
    pub fn new(country: &str, product: &Product, method: &str, metric: Metric, outcome: Outcome, spec: RegressionSpec) -> Self {
        RegressionTask {
            task_id: task_id(country, &product.name, method, metric, outcome, spec),
            country: country.to_string(),
            product: product.clone(),
            method: method.to_string(),
            metric,
            outcome,
            spec,
        }
    }

    pub fn axis(&self, axis: Axis) -> String {
        match axis {
            Axis::Country => self.country.clone(),
            Axis::Family => format!("{:?}", self.product.family).to_ascii_lowercase(),
            Axis::Product => self.product.name.clone(),
            Axis::Method => self.method.clone(),
            Axis::Metric => self.metric.name().to_string(),
            Axis::Outcome => self.outcome.name().to_string(),
            Axis::Spec => self.spec.name().to_string(),
        }
    }
}

/// Grouping dimensions for aggregates and cardinality checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Country,
    Family,
    Product,
    Method,
    Metric,
    Outcome,
    Spec,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Country => "country",
            Axis::Family => "family",
            Axis::Product => "product",
            Axis::Method => "method",
            Axis::Metric => "metric",
            Axis::Outcome => "outcome",
            Axis::Spec => "spec",
        }
    }
}

/// Lexicographic over country, product, method, metric, outcome, spec in
/// declared order; each product pairs only with metrics of its family.
pub fn enumerate_tasks(lattice: &DesignLattice) -> Result<Vec<RegressionTask>> {
    lattice.validate()?;
    let mut out = Vec::new();
    for c in &lattice.countries {
        for p in &lattice.products {
            for m in &lattice.methods {
                for &metric in lattice.metrics.iter().filter(|x| x.family() == p.family) {
                    for &o in &lattice.outcomes {
                        for &s in &lattice.specs {
                            out.push(RegressionTask::new(c, p, m, metric, o, s));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn group_counts<'a>(tasks: impl IntoIterator<Item = &'a RegressionTask>, axes: &[Axis]) -> BTreeMap<Vec<String>, usize> {
    let mut out = BTreeMap::new();
    for t in tasks {
        *out.entry(axes.iter().map(|a| t.axis(*a)).collect()).or_insert(0) += 1;
    }
    out
}

/// Household outcomes for one country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub household_id: String,
    pub year: i32,
    pub yield_kg_ha: Option<f64>,
    pub harvest_value_usd_ha: Option<f64>,
}

impl OutcomeRecord {
    pub fn get(&self, o: Outcome) -> Option<f64> {
        match o {
            Outcome::Yield => self.yield_kg_ha,
            Outcome::HarvestValue => self.harvest_value_usd_ha,
        }
    }
}

/// In-memory join of outcome panels and weather metric tables.
#[derive(Debug, Default)]
pub struct PanelStore {
    outcomes: HashMap<String, Vec<OutcomeRecord>>,
    weather: HashMap<(String, String, String), HashMap<(String, i32), MetricRow>>,
}

impl PanelStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_outcomes(&mut self, country: &str, records: Vec<OutcomeRecord>) {
        self.outcomes.entry(country.to_string()).or_default().extend(records);
    }

    /// Metric rows keyed by household id (`feature_id` holds the household id here).
    pub fn add_weather(&mut self, country: &str, product: &str, method: &str, rows: Vec<MetricRow>) {
        let table = self.weather.entry((country.into(), product.into(), method.into())).or_default();
        for r in rows {
            table.insert((r.feature_id.clone(), r.harvest_year), r);
        }
    }

    /// Fails if any task references a missing table.
    pub fn check(&self, tasks: &[RegressionTask]) -> Result<()> {
        for t in tasks {
            if !self.outcomes.contains_key(&t.country) {
                return Err(Error::Invalid(format!("no outcomes for country {}", t.country)));
            }
            if !self.weather.contains_key(&(t.country.clone(), t.product.name.clone(), t.method.clone())) {
                return Err(Error::Invalid(format!(
                    "no metric table for {} / {} / {}",
                    t.country, t.product.name, t.method
                )));
            }
        }
        Ok(())
    }

    pub fn panel(&self, task: &RegressionTask) -> Result<Vec<PanelObservation>> {
        let outcomes = self
            .outcomes
            .get(&task.country)
            .ok_or_else(|| Error::Invalid(format!("no outcomes for country {}", task.country)))?;
        let table = self
            .weather
            .get(&(task.country.clone(), task.product.name.clone(), task.method.clone()))
            .ok_or_else(|| Error::Invalid(format!("no metric table for {}", task.task_id)))?;
        Ok(outcomes
            .iter()
            .map(|o| PanelObservation {
                household_id: o.household_id.clone(),
                year: o.year,
                outcome_raw: o.get(task.outcome),
                weather: table.get(&(o.household_id.clone(), o.year)).and_then(|r| r.get(task.metric)),
            })
            .collect())
    }
}

/// Anything that can hand the runner a panel for a task.
pub trait DataStore: Sync {
    fn panel(&self, task: &RegressionTask) -> Result<Vec<PanelObservation>>;
}

impl DataStore for PanelStore {
    fn panel(&self, task: &RegressionTask) -> Result<Vec<PanelObservation>> {
        PanelStore::panel(self, task)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskError {
    pub class: String,
    pub message: String,
}

impl TaskError {
    fn from_error(e: &Error) -> Self {
        let class = match e.class() {
            ErrorClass::Validation => "validation",
            ErrorClass::Data => "data",
            ErrorClass::Numeric => "numeric",
        };
        TaskError { class: class.into(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOutcome {
    Result(RegressionResult),
    Error(TaskError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    #[serde(flatten)]
    pub outcome: TaskOutcome,
}

impl TaskRecord {
    pub fn result(&self) -> Option<&RegressionResult> {
        match &self.outcome {
            TaskOutcome::Result(r) => Some(r),
            TaskOutcome::Error(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// One record per task, in task order.
    pub records: Vec<TaskRecord>,
    pub computed: usize,
    pub reused: usize,
}

pub fn run_task(task: &RegressionTask, store: &dyn DataStore) -> TaskRecord {
    let outcome = match store.panel(task).and_then(|p| fit(&p, task.spec)) {
        Ok(r) => TaskOutcome::Result(r),
        Err(e) => TaskOutcome::Error(TaskError::from_error(&e)),
    };
    TaskRecord { task_id: task.task_id.clone(), outcome }
}

/// Journal entries keyed by task id. A torn final line is ignored.
pub fn read_journal(path: &Path) -> Result<HashMap<String, TaskRecord>> {
    let mut out = HashMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = std::io::BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let n = lines.len();
    for (i, line) in lines.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TaskRecord>(&line) {
            Ok(r) => {
                out.insert(r.task_id.clone(), r);
            }
            Err(_) if i + 1 == n => {}
            Err(e) => return Err(Error::Journal(format!("{}:{}: {e}", path.display(), i + 1))),
        }
    }
    Ok(out)
}

/// Rewrites a journal with `records` in the given order.
pub fn write_journal(path: &Path, records: &[TaskRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text += &serde_json::to_string(r).map_err(|e| Error::Journal(e.to_string()))?;
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs every task not already in the journal on a pool of `parallelism`
/// threads, appending each finished task to the journal.
pub fn run_lattice(
    tasks: &[RegressionTask],
    store: &dyn DataStore,
    parallelism: usize,
    journal: Option<&Path>,
) -> Result<RunSummary> {
    let done = match journal {
        Some(p) => read_journal(p)?,
        None => HashMap::new(),
    };
    let todo: Vec<&RegressionTask> = tasks.iter().filter(|t| !done.contains_key(&t.task_id)).collect();
    let writer = match journal {
        Some(p) => {
            // Drop any torn tail so appended lines start cleanly.
            if p.exists() {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                if !text.is_empty() && !text.ends_with('\n') {
                    let keep = text.rfind('\n').map_or(0, |i| i + 1);
                    std::fs::write(p, &text[..keep]).map_err(|e| Error::io(p, e))?;
                }
            }
            let f = std::fs::OpenOptions::new().create(true).append(true).open(p).map_err(|e| Error::io(p, e))?;
            Some(Mutex::new(f))
        }
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let fresh: Vec<TaskRecord> = pool.install(|| {
        todo.par_iter()
            .map(|t| {
                let rec = run_task(t, store);
                if let (Some(w), Some(p)) = (&writer, journal) {
                    let line = serde_json::to_string(&rec).expect("task records serialize") + "\n";
                    let mut f = w.lock().unwrap();
                    f.write_all(line.as_bytes()).map_err(|e| Error::io(p, e))?;
                }
                Ok(rec)
            })
            .collect::<Result<_>>()
    })?;
    let computed = fresh.len();
    let mut fresh: HashMap<String, TaskRecord> = fresh.into_iter().map(|r| (r.task_id.clone(), r)).collect();
    let mut done = done;
    let records = tasks
        .iter()
        .map(|t| fresh.remove(&t.task_id).or_else(|| done.remove(&t.task_id)).expect("every task has a record"))
        .collect();
    Ok(RunSummary { records, computed, reused: tasks.len() - computed })
}
