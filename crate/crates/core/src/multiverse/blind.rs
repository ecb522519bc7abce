//! Coded labels for methods and products.
//!
//! Methods become `x0…x9`, rainfall products `rf1…`, temperature products
//! `tp1…`. The assignment is a seeded shuffle.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DesignLattice, Product, RegressionTask};
use crate::error::{Error, Result};
use crate::geomask::fnv1a64;
use crate::metrics::MetricFamily;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindingKey {
    /// label → code
    pub methods: BTreeMap<String, String>,
    pub rainfall: BTreeMap<String, String>,
    pub temperature: BTreeMap<String, String>,
}

fn assign(labels: &[String], prefix: &str, first: usize, rng: &mut ChaCha8Rng) -> BTreeMap<String, String> {
    let mut codes: Vec<String> = (0..labels.len()).map(|i| format!("{prefix}{}", i + first)).collect();
    codes.shuffle(rng);
    labels.iter().cloned().zip(codes).collect()
}

impl BlindingKey {
    pub fn generate(seed: u64, methods: &[String], rainfall: &[String], temperature: &[String]) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(fnv1a64(b"blinding-key"));
        BlindingKey {
            methods: assign(methods, "x", 0, &mut rng),
            rainfall: assign(rainfall, "rf", 1, &mut rng),
            temperature: assign(temperature, "tp", 1, &mut rng),
        }
    }

    pub fn for_lattice(seed: u64, lattice: &DesignLattice) -> Self {
        let of = |f: MetricFamily| -> Vec<String> {
            lattice.products.iter().filter(|p| p.family == f).map(|p| p.name.clone()).collect()
        };
        Self::generate(seed, &lattice.methods, &of(MetricFamily::Rainfall), &of(MetricFamily::Temperature))
    }

    fn table(&self, family: MetricFamily) -> &BTreeMap<String, String> {
        match family {
            MetricFamily::Rainfall => &self.rainfall,
            MetricFamily::Temperature => &self.temperature,
        }
    }

    pub fn code_method(&self, method: &str) -> Result<&str> {
        self.methods.get(method).map(String::as_str).ok_or_else(|| Error::Invalid(format!("method {method:?} not in blinding key")))
    }

    pub fn code_product(&self, product: &Product) -> Result<Product> {
        let code = self
            .table(product.family)
            .get(&product.name)
            .ok_or_else(|| Error::Invalid(format!("product {:?} not in blinding key", product.name)))?;
        Ok(Product::new(code.clone(), product.family))
    }

    fn reverse<'a>(map: &'a BTreeMap<String, String>, code: &str) -> Option<&'a str> {
        map.iter().find(|(_, c)| c.as_str() == code).map(|(l, _)| l.as_str())
    }

    pub fn decode_method(&self, code: &str) -> Result<&str> {
        Self::reverse(&self.methods, code).ok_or_else(|| Error::Invalid(format!("unknown method code {code:?}")))
    }

    pub fn decode_product(&self, product: &Product) -> Result<Product> {
        let name = Self::reverse(self.table(product.family), &product.name)
            .ok_or_else(|| Error::Invalid(format!("unknown product code {:?}", product.name)))?;
        Ok(Product::new(name, product.family))
    }

    pub fn blind_lattice(&self, lattice: &DesignLattice) -> Result<DesignLattice> {
        Ok(DesignLattice {
            methods: lattice.methods.iter().map(|m| self.code_method(m).map(str::to_string)).collect::<Result<_>>()?,
            products: lattice.products.iter().map(|p| self.code_product(p)).collect::<Result<_>>()?,
            ..lattice.clone()
        })
    }

    pub fn blind_task(&self, t: &RegressionTask) -> Result<RegressionTask> {
        let p = self.code_product(&t.product)?;
        Ok(RegressionTask::new(&t.country, &p, self.code_method(&t.method)?, t.metric, t.outcome, t.spec))
    }

    pub fn unblind_task(&self, t: &RegressionTask) -> Result<RegressionTask> {
        let p = self.decode_product(&t.product)?;
        Ok(RegressionTask::new(&t.country, &p, self.decode_method(&t.method)?, t.metric, t.outcome, t.spec))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("key serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

pub fn dataset_name(country: &str, product_code: &str, method_code: &str) -> String {
    format!("{country}_{product_code}_{method_code}")
}

/// One coded dataset per country-wave, product and method.
pub fn blinded_dataset_names(country_waves: &[String], key: &BlindingKey) -> Vec<String> {
    let mut out = Vec::new();
    for cw in country_waves {
        for p in key.rainfall.values().chain(key.temperature.values()) {
            for m in key.methods.values() {
                out.push(dataset_name(cw, p, m));
            }
        }
    }
    out
}
