//! Small statistical helpers: Gaussian and one-degree-of-freedom chi-square
//! tails, robust scale, empirical distribution distances.

use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// P(X > x) for X ~ chi-square with one degree of freedom.
pub fn chi2_1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    erfc((0.5 * x).sqrt())
}

/// Inverse of [`chi2_1_sf`]: the x with P(X > x) = p, for p in (0, 1).
pub fn chi2_1_isf(p: f64) -> f64 {
    let z = erfc_inv(p);
    2.0 * z * z
}

/// P(X <= x) for X ~ noncentral chi-square, one degree of freedom,
/// noncentrality `lambda`. Exact: X = Z^2 with Z ~ N(sqrt(lambda), 1).
pub fn ncchi2_1_cdf(x: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let r = x.sqrt();
    let m = lambda.max(0.0).sqrt();
    (normal_cdf(r - m) - normal_cdf(-r - m)).clamp(0.0, 1.0)
}

/// The x with P(X <= x) = p under [`ncchi2_1_cdf`], found by bisection.
pub fn ncchi2_1_quantile(p: f64, lambda: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while ncchi2_1_cdf(hi, lambda) < p {
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ncchi2_1_cdf(mid, lambda) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Median of a sample (average of the two middle values for even length).
/// Returns NaN for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (c - lo).abs().max((hi - c).abs())
        })
        .fold(0.0, f64::max)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|x| (x - m).powi(2)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}
