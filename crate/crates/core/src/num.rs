//! Float formatting and descriptive statistics shared across modules.

/// Lossless decimal rendering: shortest round-trip digits (never more than
/// 17 significant), scientific notation only for extreme magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || a.is_nan() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Median of a non-empty slice (average of the two middle values for even n).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Sample standard deviation (n − 1 divisor); `None` for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Population variance and skewness (divide by n). Skewness is `None` when
/// the variance is zero.
pub fn population_moments(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let (mut m2, mut m3) = (0.0, 0.0);
    for x in xs {
        let d = x - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 == 0.0 {
        (0.0, None)
    } else {
        (m2, Some(m3 / m2.powf(1.5)))
    }
}
