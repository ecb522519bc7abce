//! Inference heuristics over sets of regression results.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::RegressionTask;
use crate::econometrics::RegressionResult;
use crate::error::{Error, Result};
use crate::num::{mean, sample_sd};

pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProportionCi {
    #[default]
    Wald,
    Wilson,
}

/// A point estimate with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Share {
    pub alpha: f64,
    pub share: f64,
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Share {
    pub fn interval(&self) -> Interval {
        Interval { value: self.share, lo: self.lo, hi: self.hi }
    }
}

/// Fraction of `p_values` below each alpha, with a 95% interval.
pub fn share_significant(p_values: &[f64], alphas: &[f64], ci: ProportionCi) -> Result<Vec<Share>> {
    if p_values.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = p_values.len() as f64;
    Ok(alphas
        .iter()
        .map(|&alpha| {
            let s = p_values.iter().filter(|&&p| p < alpha).count() as f64 / n;
            let (lo, hi) = match ci {
                ProportionCi::Wald => {
                    let h = Z95 * (s * (1.0 - s) / n).sqrt();
                    (s - h, s + h)
                }
                ProportionCi::Wilson => {
                    let z2 = Z95 * Z95;
                    let centre = (s + z2 / (2.0 * n)) / (1.0 + z2 / n);
                    let h = Z95 / (1.0 + z2 / n) * (s * (1.0 - s) / n + z2 / (4.0 * n * n)).sqrt();
                    (centre - h, centre + h)
                }
            };
            Share { alpha, share: s, n: p_values.len(), lo, hi }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub n: usize,
    /// `None` for a single value.
    pub ci: Option<(f64, f64)>,
}

impl MeanCi {
    /// Collapses an undefined interval to the point.
    pub fn interval(&self) -> Interval {
        let (lo, hi) = self.ci.unwrap_or((self.mean, self.mean));
        Interval { value: self.mean, lo, hi }
    }
}

pub fn mean_loglik(values: &[f64]) -> Result<MeanCi> {
    if values.is_empty() {
        return Err(Error::EmptySubset);
    }
    let m = mean(values);
    let ci = sample_sd(values).map(|sd| {
        let h = Z95 * sd / (values.len() as f64).sqrt();
        (m - h, m + h)
    });
    Ok(MeanCi { mean: m, n: values.len(), ci })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NotDifferent,
    Weak,
    Strong,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::NotDifferent => "not_different",
            Verdict::Weak => "weak",
            Verdict::Strong => "strong",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    MeanLoglik,
    ShareSignificant,
    Coefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicVerdict {
    pub comparison: (String, String),
    pub statistic: Statistic,
    pub verdict: Verdict,
}

/// Weak: either point lies outside the other's interval. Strong: the intervals are disjoint.
pub fn difference_test(a: Interval, b: Interval) -> Verdict {
    if a.hi < b.lo || b.hi < a.lo {
        Verdict::Strong
    } else if !b.contains(a.value) || !a.contains(b.value) {
        Verdict::Weak
    } else {
        Verdict::NotDifferent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub task: RegressionTask,
    pub beta: f64,
    pub lo: f64,
    pub hi: f64,
    pub significant: bool,
}

/// Results ordered by coefficient (ties by task id) with t-based 95% intervals.
pub fn spec_curve(rows: &[(&RegressionTask, &RegressionResult)]) -> Vec<CurveRow> {
    let mut out: Vec<CurveRow> = rows
        .iter()
        .map(|(t, r)| {
            let q = StudentsT::new(0.0, 1.0, (r.n_clusters.max(2) - 1) as f64)
                .map(|d| d.inverse_cdf(0.975))
                .unwrap_or(Z95);
            CurveRow {
                task: (*t).clone(),
                beta: r.beta1,
                lo: r.beta1 - q * r.se1,
                hi: r.beta1 + q * r.se1,
                significant: r.p1 < 0.05,
            }
        })
        .collect();
    out.sort_by(|a, b| a.beta.total_cmp(&b.beta).then_with(|| a.task.task_id.cmp(&b.task.task_id)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iv(value: f64, lo: f64, hi: f64) -> Interval {
        Interval { value, lo, hi }
    }

    #[test]
    fn shares_basic() {
        let s = share_significant(&[0.001; 5], &[0.1, 0.05, 0.01], ProportionCi::Wald).unwrap();
        assert!(s.iter().all(|x| x.share == 1.0 && x.lo == 1.0 && x.hi == 1.0));
        assert!(matches!(share_significant(&[], &[0.05], ProportionCi::Wald), Err(Error::EmptySubset)));
    }

    #[test]
    fn uniform_p_share_near_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let s = share_significant(&p, &[0.05], ProportionCi::Wald).unwrap();
        assert!((0.04..=0.06).contains(&s[0].share), "{}", s[0].share);
        let w = share_significant(&p, &[0.05], ProportionCi::Wilson).unwrap();
        assert!(w[0].lo < w[0].share && w[0].share < w[0].hi);
    }

    #[test]
    fn mean_ci_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<f64> = (0..50).map(|_| rng.random_range(-900.0..-100.0)).collect();
        let m = mean_loglik(&v).unwrap();
        let n = v.len() as f64;
        let mu = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0)).sqrt();
        let (lo, hi) = m.ci.unwrap();
        assert!((m.mean - mu).abs() < 1e-12 * mu.abs());
        assert!((lo - (mu - 1.96 * sd / n.sqrt())).abs() < 1e-12 * mu.abs());
        assert!((hi - (mu + 1.96 * sd / n.sqrt())).abs() < 1e-12 * mu.abs());
        assert_eq!(mean_loglik(&[-3.0; 4]).unwrap().ci, Some((-3.0, -3.0)));
        assert_eq!(mean_loglik(&[-3.0]).unwrap().ci, None);
    }

    #[test]
    fn difference_test_cases() {
        let a = iv(1.0, 0.9, 1.1);
        assert_eq!(difference_test(a, a), Verdict::NotDifferent);
        assert_eq!(difference_test(a, iv(1.2, 1.05, 1.35)), Verdict::Weak);
        assert_eq!(difference_test(iv(0.0, -0.1, 0.1), iv(1.0, 0.9, 1.1)), Verdict::Strong);
    }

    #[test]
    fn difference_test_symmetric_and_nested() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let mk = |rng: &mut ChaCha8Rng| {
                let v: f64 = rng.random_range(-1.0..1.0);
                iv(v, v - rng.random_range(0.0..0.5), v + rng.random_range(0.0..0.5))
            };
            let (a, b) = (mk(&mut rng), mk(&mut rng));
            let v = difference_test(a, b);
            assert_eq!(v, difference_test(b, a));
            if v == Verdict::Strong {
                assert!(!b.contains(a.value) && !a.contains(b.value));
            }
        }
    }
}
