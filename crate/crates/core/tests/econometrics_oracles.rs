use geomv::econometrics::{fit, fit_with, PanelObservation, RegressionSpec, Transform};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

const LINEAR: RegressionSpec = RegressionSpec::ALL[0];
const LINEAR_FE: RegressionSpec = RegressionSpec::ALL[1];
const QUADRATIC_FE: RegressionSpec = RegressionSpec::ALL[3];

struct Panel {
    obs: Vec<PanelObservation>,
}

/// Households × years with some rows missing; y > 0 throughout.
fn panel(rng: &mut ChaCha8Rng, n_hh: usize, years: i32, beta1: f64, beta2: f64, noise: f64) -> Panel {
    let eps = Normal::new(0.0, 1.0).unwrap();
    let gamma: Vec<f64> = (0..years).map(|_| 0.3 * eps.sample(rng)).collect();
    let mut obs = Vec::new();
    for h in 0..n_hh {
        let alpha = 6.0 + 0.5 * eps.sample(rng);
        for t in 0..years {
            if rng.random::<f64>() < 0.1 {
                continue;
            }
            let w = rng.random_range(-2.0..2.0) + 0.2 * h as f64 / n_hh as f64;
            let latent = alpha + gamma[t as usize] + beta1 * w + beta2 * w * w + noise * eps.sample(rng);
            obs.push(PanelObservation {
                household_id: format!("h{h}"),
                year: 2000 + t,
                outcome_raw: Some(latent.sinh()),
                weather: Some(w),
            });
        }
    }
    Panel { obs }
}

/// Dummy-variable OLS: weather (and its square), year dummies after the first, one dummy per household.
fn lsdv(p: &Panel, quadratic: bool) -> DVector<f64> {
    let mut hh: Vec<&str> = p.obs.iter().map(|o| o.household_id.as_str()).collect();
    hh.sort();
    hh.dedup();
    let mut years: Vec<i32> = p.obs.iter().map(|o| o.year).collect();
    years.sort();
    years.dedup();
    let k = 1 + usize::from(quadratic) + (years.len() - 1) + hh.len();
    let x = DMatrix::from_fn(p.obs.len(), k, |i, j| {
        let o = &p.obs[i];
        let w = o.weather.unwrap();
        let mut j = j;
        if j == 0 {
            return w;
        }
        j -= 1;
        if quadratic {
            if j == 0 {
                return w * w;
            }
            j -= 1;
        }
        if j < years.len() - 1 {
            return f64::from(u8::from(o.year == years[j + 1]));
        }
        j -= years.len() - 1;
        f64::from(u8::from(o.household_id == hh[j]))
    });
    let y = DVector::from_iterator(p.obs.len(), p.obs.iter().map(|o| o.outcome_raw.unwrap().asinh()));
    let xtx = x.transpose() * &x;
    xtx.cholesky().expect("full rank").solve(&(x.transpose() * y))
}

pub fn fe_within_equals_dummy_variable_ols() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for i in 0..100 {
        let n_hh = rng.random_range(5..30);
        let years = rng.random_range(3..8);
        let p = panel(&mut rng, n_hh, years, 0.3, -0.05, 0.4);
        let quad = i % 2 == 0;
        let spec = if quad { QUADRATIC_FE } else { LINEAR_FE };
        let r = fit(&p.obs, spec).unwrap();
        let b = lsdv(&p, quad);
        assert!((r.beta1 - b[0]).abs() < 1e-8, "panel {i}: {} vs {}", r.beta1, b[0]);
        if quad {
            assert!((r.beta2.unwrap() - b[1]).abs() < 1e-8);
        }
    }
}

pub fn pooled_cluster_sandwich_matches_dense_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    // Ten clusters of two observations.
    let obs: Vec<PanelObservation> = (0..20)
        .map(|i| PanelObservation {
            household_id: format!("g{}", i / 2),
            year: 2000 + (i % 2),
            outcome_raw: Some(rng.random_range(0.0..40.0)),
            weather: Some(rng.random_range(-3.0..3.0)),
        })
        .collect();
    let r = fit(&obs, LINEAR).unwrap();

    let n = obs.len();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { obs[i].weather.unwrap() });
    let y = DVector::from_iterator(n, obs.iter().map(|o| o.outcome_raw.unwrap().asinh()));
    let xtx_inv = (x.transpose() * &x).try_inverse().unwrap();
    let beta = &xtx_inv * x.transpose() * &y;
    let u = &y - &x * &beta;
    let mut meat = DMatrix::<f64>::zeros(2, 2);
    for g in 0..10 {
        let rows = [2 * g, 2 * g + 1];
        let mut s = DVector::<f64>::zeros(2);
        for &i in &rows {
            s += x.row(i).transpose() * u[i];
        }
        meat += &s * s.transpose();
    }
    let (gf, nf, kf) = (10.0, n as f64, 2.0);
    let v = (gf / (gf - 1.0)) * ((nf - 1.0) / (nf - kf)) * &xtx_inv * meat * &xtx_inv;
    let se1 = v[(1, 1)].sqrt();
    assert!((r.beta1 - beta[1]).abs() < 1e-10);
    assert!((r.se1 - se1).abs() < 1e-10 * se1, "{} vs {se1}", r.se1);

    let t = StudentsT::new(0.0, 1.0, 9.0).unwrap();
    let p = 2.0 * (1.0 - t.cdf((beta[1] / se1).abs()));
    assert!((r.p1 - p).abs() < 1e-10);
    let rss = u.norm_squared();
    let ll = -nf / 2.0 * ((2.0 * std::f64::consts::PI).ln() + (rss / nf).ln() + 1.0);
    assert!((r.loglik - ll).abs() < 1e-10 * ll.abs());
}

pub fn noiseless_recovery() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let p = panel(&mut rng, 60, 6, 0.25, -0.04, 0.0);
    let mut p = p;
    // Keep RSS non-zero: one household gets a tiny perturbation.
    if let Some(o) = p.obs.first_mut() {
        o.outcome_raw = Some((o.outcome_raw.unwrap().asinh() + 1e-9).sinh());
    }
    let r = fit(&p.obs, QUADRATIC_FE).unwrap();
    assert!((r.beta1 - 0.25).abs() <= 1e-4, "{}", r.beta1);
    assert!((r.beta2.unwrap() + 0.04).abs() <= 1e-4);
}

pub fn noisy_recovery_within_two_monte_carlo_se() {
    let reps = 200;
    let est: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(10_000 + s);
            fit(&panel(&mut rng, 80, 5, 0.3, 0.0, 0.5).obs, LINEAR_FE).unwrap().beta1
        })
        .collect();
    let n = reps as f64;
    let m = est.iter().sum::<f64>() / n;
    let sd = (est.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((m - 0.3).abs() <= 2.0 * sd / n.sqrt(), "mean {m}, mc se {}", sd / n.sqrt());
}

pub fn size_under_the_null() {
    let reps = 1000u64;
    let rejections: usize = (0..reps)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(20_000 + s);
            let r = fit(&panel(&mut rng, 100, 5, 0.0, 0.0, 0.5).obs, LINEAR_FE).unwrap();
            usize::from(r.p1 < 0.05)
        })
        .sum();
    let share = rejections as f64 / reps as f64;
    assert!((0.03..=0.07).contains(&share), "rejection share {share}");
}

pub fn identity_transform_leaves_levels() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let obs: Vec<PanelObservation> = (0..40)
        .map(|i| {
            let w = rng.random_range(0.0..10.0);
            PanelObservation {
                household_id: format!("h{}", i % 8),
                year: 2000 + i / 8,
                outcome_raw: Some(3.0 + 2.0 * w + rng.random_range(-0.1..0.1)),
                weather: Some(w),
            }
        })
        .collect();
    let r = fit_with(&obs, LINEAR, Transform::Identity).unwrap();
    assert!((r.beta1 - 2.0).abs() < 0.05);
}

#[cfg(test)]
mod tests {
    #[test]
    fn fe_within_equals_dummy_variable_ols() {
        super::fe_within_equals_dummy_variable_ols()
    }

    #[test]
    fn pooled_cluster_sandwich_matches_dense_formula() {
        super::pooled_cluster_sandwich_matches_dense_formula()
    }

    #[test]
    fn noiseless_recovery() {
        super::noiseless_recovery()
    }

    #[test]
    fn noisy_recovery_within_two_monte_carlo_se() {
        super::noisy_recovery_within_two_monte_carlo_se()
    }

    #[test]
    fn size_under_the_null() {
        super::size_under_the_null()
    }

    #[test]
    fn identity_transform_leaves_levels() {
        super::identity_transform_leaves_levels()
    }
}
