//! Run manifest: TOML in, validated and content-hashed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use geomv::econometrics::RegressionSpec;
use geomv::extraction::Interpolation;
use geomv::geomask::{MaskParams, Method};
use geomv::metrics::{GddBounds, Metric, MetricFamily, SeasonCalendar};
use geomv::multiverse::{DesignLattice, Outcome, Product, ProportionCi};
use geomv::raster::Variable;
use geomv::synthgen::SynthConfig;
use geomv::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskSection {
    pub urban_max_km: f64,
    pub rural_max_km: f64,
    pub rural_extra_max_km: f64,
    pub rural_extra_share: f64,
    pub constrain_to_admin: bool,
}

impl Default for MaskSection {
    fn default() -> Self {
        let d = MaskParams::default();
        MaskSection {
            urban_max_km: d.urban_max_km,
            rural_max_km: d.rural_max_km,
            rural_extra_max_km: d.rural_extra_max_km,
            rural_extra_share: d.rural_extra_share,
            constrain_to_admin: d.constrain_to_admin,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Axes {
    pub methods: Option<Vec<String>>,
    pub metrics: Option<Vec<Metric>>,
    pub outcomes: Option<Vec<Outcome>>,
    pub specs: Option<Vec<RegressionSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductEntry {
    pub name: String,
    pub variable: Variable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountryEntry {
    pub name: String,
    pub households: PathBuf,
    pub polygons: PathBuf,
    pub outcomes: PathBuf,
    /// Built-in calendar name; defaults to the country name.
    #[serde(default)]
    pub calendar: Option<String>,
    /// Product name to `.wxstack` path.
    pub stacks: BTreeMap<String, PathBuf>,
    /// Optional daily-maximum stacks for temperature products.
    #[serde(default)]
    pub daily_max: BTreeMap<String, PathBuf>,
}

impl CountryEntry {
    pub fn calendar(&self) -> Result<SeasonCalendar> {
        let name = self.calendar.as_deref().unwrap_or(&self.name);
        SeasonCalendar::builtin(name).ok_or_else(|| Error::Invalid(format!("unknown calendar {name:?} for country {}", self.name)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSection {
    /// One synthetic world per name, seeded from the manifest seed and the position.
    pub countries: Vec<String>,
    #[serde(flatten)]
    pub config: SynthConfig,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection { countries: vec!["synthland".into()], config: SynthConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub seed: u64,
    pub parallelism: usize,
    pub out_dir: PathBuf,
    pub mask: MaskSection,
    pub gdd: GddBounds,
    pub interpolation: Interpolation,
    pub alphas: Vec<f64>,
    pub ci: ProportionCi,
    pub blinding: bool,
    pub baseline: String,
    pub charts: bool,
    pub axes: Axes,
    #[serde(rename = "product")]
    pub products: Vec<ProductEntry>,
    #[serde(rename = "country")]
    pub countries: Vec<CountryEntry>,
    pub synth: Option<SynthSection>,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            seed: 0,
            parallelism: 1,
            out_dir: PathBuf::from("geomv_out"),
            mask: MaskSection::default(),
            gdd: GddBounds::default(),
            interpolation: Interpolation::default(),
            alphas: vec![0.10, 0.05, 0.01],
            ci: ProportionCi::default(),
            blinding: false,
            baseline: Method::HhBilinear.name().into(),
            charts: true,
            axes: Axes::default(),
            products: Vec::new(),
            countries: Vec::new(),
            synth: None,
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::Invalid(msg)
}

impl RunManifest {
    /// Parses a manifest and makes every path absolute relative to the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read manifest {}: {e}", path.display())))?;
        let mut m: RunManifest = toml::from_str(&text).map_err(|e| invalid(format!("manifest {}: {e}", path.display())))?;
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let base = std::path::absolute(&base).map_err(|e| Error::io(&base, e))?;
        m.resolve(&base);
        Ok(m)
    }

    pub fn resolve(&mut self, base: &Path) {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut self.out_dir);
        for c in &mut self.countries {
            abs(&mut c.households);
            abs(&mut c.polygons);
            abs(&mut c.outcomes);
            c.stacks.values_mut().for_each(abs);
            c.daily_max.values_mut().for_each(abs);
        }
    }

    pub fn mask_params(&self) -> MaskParams {
        let m = &self.mask;
        MaskParams {
            urban_max_km: m.urban_max_km,
            rural_max_km: m.rural_max_km,
            rural_extra_max_km: m.rural_extra_max_km,
            rural_extra_share: m.rural_extra_share,
            seed: self.seed,
            constrain_to_admin: m.constrain_to_admin,
        }
    }

    pub fn product(&self, name: &str) -> Option<&ProductEntry> {
        self.products.iter().find(|p| p.name == name)
    }

    pub fn lattice(&self) -> DesignLattice {
        let a = &self.axes;
        DesignLattice {
            countries: self.countries.iter().map(|c| c.name.clone()).collect(),
            products: self.products.iter().map(|p| Product::new(&p.name, MetricFamily::of(p.variable))).collect(),
            methods: a.methods.clone().unwrap_or_else(|| Method::ALL.iter().map(|m| m.name().to_string()).collect()),
            metrics: a.metrics.clone().unwrap_or_else(|| Metric::ALL.to_vec()),
            outcomes: a.outcomes.clone().unwrap_or_else(|| Outcome::ALL.to_vec()),
            specs: a.specs.clone().unwrap_or_else(|| RegressionSpec::ALL.to_vec()),
        }
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        self.lattice().methods.iter().map(|m| m.parse()).collect()
    }

    /// Checks everything the data stages need: parameters, axes, files.
    pub fn validate_pipeline(&self) -> Result<()> {
        self.validate_common()?;
        if self.countries.is_empty() || self.products.is_empty() {
            return Err(invalid("manifest needs at least one [[country]] and one [[product]]".into()));
        }
        let mut names = std::collections::HashSet::new();
        for p in &self.products {
            if p.name.is_empty() || p.name.contains(['/', '\\', ':']) || !names.insert(&p.name) {
                return Err(invalid(format!("bad or duplicate product name {:?}", p.name)));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for c in &self.countries {
            if c.name.is_empty() || c.name.contains(['/', '\\', ':', '|']) || !seen.insert(&c.name) {
                return Err(invalid(format!("bad or duplicate country name {:?}", c.name)));
            }
            c.calendar()?.validate()?;
            for p in [&c.households, &c.polygons, &c.outcomes] {
                if !p.is_file() {
                    return Err(invalid(format!("country {}: missing file {}", c.name, p.display())));
                }
            }
            for p in &self.products {
                let stack = c.stacks.get(&p.name).ok_or_else(|| invalid(format!("country {} has no stack for {}", c.name, p.name)))?;
                if !stack.is_file() {
                    return Err(invalid(format!("country {}: missing stack {}", c.name, stack.display())));
                }
            }
            for (name, path) in c.stacks.iter().chain(&c.daily_max) {
                if self.product(name).is_none() {
                    return Err(invalid(format!("country {} lists undeclared product {name}", c.name)));
                }
                if !path.is_file() {
                    return Err(invalid(format!("country {}: missing stack {}", c.name, path.display())));
                }
            }
            if let Some(p) = c.daily_max.keys().find(|p| self.product(p).is_some_and(|e| e.variable != Variable::Temperature)) {
                return Err(invalid(format!("daily-max stack for non-temperature product {p}")));
            }
        }
        self.methods()?;
        let lattice = self.lattice();
        lattice.validate()?;
        if !lattice.methods.contains(&self.baseline) {
            return Err(invalid(format!("baseline method {} is not on the lattice", self.baseline)));
        }
        Ok(())
    }

    pub fn validate_common(&self) -> Result<()> {
        self.mask_params().validate()?;
        self.gdd.validate()?;
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(invalid("alphas must be non-empty and inside (0, 1)".into()));
        }
        if self.parallelism == 0 {
            return Err(invalid("parallelism must be at least 1".into()));
        }
        Ok(())
    }

    pub fn validate_synth(&self) -> Result<()> {
        self.validate_common()?;
        let s = self.synth.as_ref().ok_or_else(|| invalid("manifest has no [synth] section".into()))?;
        if s.countries.is_empty() {
            return Err(invalid("[synth] countries is empty".into()));
        }
        s.config.validate()
    }

    /// Canonical text: every field except the execution settings (parallelism, output root).
    pub fn canonical(&self) -> String {
        let mut t = toml::Table::try_from(self).expect("manifest serializes");
        t.remove("parallelism");
        t.remove("out_dir");
        toml::to_string(&t).expect("table serializes")
    }

    /// Hash of the canonical manifest and of every referenced input file.
    pub fn content_hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        let mut files: Vec<&PathBuf> = Vec::new();
        for c in &self.countries {
            files.extend([&c.households, &c.polygons, &c.outcomes]);
            files.extend(c.stacks.values());
            files.extend(c.daily_max.values());
        }
        files.sort();
        files.dedup();
        for f in files {
            let bytes = std::fs::read(f).map_err(|e| Error::io(f, e))?;
            h.update(f.to_string_lossy().as_bytes());
            h.update(Sha256::digest(&bytes));
        }
        Ok(hex::encode(&h.finalize()[..8]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 5
parallelism = 3
blinding = true

[mask]
urban_max_km = 1.0

[axes]
methods = ["hh_bilinear", "admin_zone"]
metrics = ["total_mm", "mean_c"]
specs = ["linear_fe"]

[[product]]
name = "rainy"
variable = "rainfall"

[[country]]
name = "ethiopia"
households = "hh.csv"
polygons = "adm.txt"
outcomes = "out.csv"
stacks = { rainy = "rainy.wxstack" }
"#;

    #[test]
    fn parses_and_resolves_paths() {
        let mut m: RunManifest = toml::from_str(MINIMAL).unwrap();
        m.resolve(Path::new("/data/run"));
        assert_eq!(m.countries[0].households, PathBuf::from("/data/run/hh.csv"));
        assert_eq!(m.mask.rural_max_km, 5.0);
        assert_eq!(m.mask_params().seed, 5);
        let l = m.lattice();
        assert_eq!(l.methods.len(), 2);
        assert_eq!(l.outcomes.len(), 2);
        assert_eq!(m.countries[0].calendar().unwrap().country, "ethiopia");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(toml::from_str::<RunManifest>(&text).is_err());
    }

    #[test]
    fn canonical_text_ignores_execution_settings() {
        let a: RunManifest = toml::from_str(MINIMAL).unwrap();
        let mut b = a.clone();
        b.parallelism = 16;
        b.out_dir = PathBuf::from("/elsewhere");
        assert_eq!(a.canonical(), b.canonical());
        b.seed = 6;
        assert_ne!(a.canonical(), b.canonical());
        assert!(!a.canonical().contains("parallelism"));
    }

    #[test]
    fn missing_files_fail_validation() {
        let mut m: RunManifest = toml::from_str(MINIMAL).unwrap();
        m.resolve(Path::new("/nonexistent"));
        let e = m.validate_pipeline().unwrap_err();
        assert!(matches!(e, Error::Invalid(_)), "{e}");
    }
}
