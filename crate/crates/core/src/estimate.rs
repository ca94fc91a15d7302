//! Segmented least-squares friction estimation between changepoints.
//!
//! Each interval gets its own dry coefficient and all intervals share one
//! viscous coefficient. Points within a guard band of each changepoint are
//! left out of the fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TelemetryWindow;
use crate::stats;

/// Inclusive index ranges `(k_o, k_f)` of the intervals used for fitting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub intervals: Vec<(usize, usize)>,
    pub delta_k_error: usize,
    /// Changepoints separating consecutive intervals (after any merging).
    pub changepoints: Vec<usize>,
}

impl IntervalSet {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Number of points in each interval.
    pub fn counts(&self) -> Vec<usize> {
        self.intervals.iter().map(|(a, b)| b - a + 1).collect()
    }
}

/// Interval `i` for changepoints `cps` with guard `g`. The changepoint index
/// itself belongs to the following interval.
fn interval(cps: &[usize], n: usize, i: usize, g: usize) -> (usize, usize) {
    let start = if i == 0 { 0 } else { cps[i - 1] + g };
    let end = if i == cps.len() {
        n - 1
    } else {
        cps[i].saturating_sub(g.max(1))
    };
    (start, end)
}

fn points(iv: (usize, usize)) -> usize {
    (iv.1 + 1).saturating_sub(iv.0)
}

/// Builds fitting intervals from changepoints.
///
/// An interval left with fewer than two points by the guard band gets a
/// narrower guard (down to zero) on both of its ends. If even that is not
/// enough, the changepoint towards its shorter neighbor is dropped.
pub fn build_intervals(changepoints: &[usize], n: usize, delta_k_error: usize) -> Result<IntervalSet> {
    if n < 2 {
        return Err(Error::OverSegmented(format!("window of {n} points")));
    }
    if let Some(&k) = changepoints.iter().find(|&&k| k == 0 || k >= n) {
        return Err(Error::IndexOutOfRange {
            index: k,
            lo: 1,
            hi: n - 1,
        });
    }
    if changepoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("changepoints must be strictly increasing".into()));
    }
    let mut cps = changepoints.to_vec();
    'retry: loop {
        let m = cps.len();
        let mut out = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let found = (0..=delta_k_error)
                .rev()
                .map(|g| interval(&cps, n, i, g))
                .find(|&iv| points(iv) >= 2);
            match found {
                Some(iv) => out.push(iv),
                None => {
                    if m == 0 {
                        return Err(Error::OverSegmented(format!("window of {n} points")));
                    }
                    let left = (i > 0).then(|| points(interval(&cps, n, i - 1, 0)));
                    let right = (i < m).then(|| points(interval(&cps, n, i + 1, 0)));
                    let drop = match (left, right) {
                        (Some(l), Some(r)) if l <= r => i - 1,
                        (Some(_), None) => i - 1,
                        _ => i,
                    };
                    log::warn!(
                        "dropping changepoint at {} to keep at least 2 points per interval",
                        cps[drop]
                    );
                    cps.remove(drop);
                    continue 'retry;
                }
            }
        }
        return Ok(IntervalSet {
            intervals: out,
            delta_k_error,
            changepoints: cps,
        });
    }
}

/// Result of the segmented least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedFit {
    /// Dry coefficient per interval.
    pub f: Vec<f64>,
    pub f_v: f64,
    /// Diagonal of the Gram matrix for the dry coefficients: points per interval.
    pub gram_diag: Vec<usize>,
    /// Increase in squared error from merging intervals `i` and `i + 1`.
    pub rejection_costs: Vec<f64>,
    pub sse: f64,
}

struct IntervalStats {
    n: f64,
    mean_w: f64,
    mean_f: f64,
    a: f64,
    b: f64,
    c: f64,
}

fn interval_stats(omega: &[f64], f: &[f64]) -> IntervalStats {
    let n = omega.len() as f64;
    let mean_w = omega.iter().sum::<f64>() / n;
    let mean_f = f.iter().sum::<f64>() / n;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for (&x, &y) in omega.iter().zip(f) {
        let (dx, dy) = (x - mean_w, y - mean_f);
        a += dx * dx;
        b += dx * dy;
        c += dy * dy;
    }
    IntervalStats {
        n,
        mean_w,
        mean_f,
        a,
        b,
        c,
    }
}

/// Least-squares fit of one dry coefficient per interval and a shared viscous
/// coefficient. Eliminating the dry coefficients leaves a scalar problem for
/// the viscous one, so the cost is linear in the number of points.
pub fn fit(window: &TelemetryWindow, intervals: &IntervalSet) -> Result<SegmentedFit> {
    let (omega, f_hat) = (window.omega(), window.f_hat());
    if let Some(&(_, b)) = intervals.intervals.last() {
        if b >= window.len() {
            return Err(Error::IndexOutOfRange {
                index: b,
                lo: 0,
                hi: window.len() - 1,
            });
        }
    }
    let st: Vec<IntervalStats> = intervals
        .intervals
        .iter()
        .map(|&(a, b)| interval_stats(&omega[a..=b], &f_hat[a..=b]))
        .collect();
    let a: f64 = st.iter().map(|s| s.a).sum();
    let b: f64 = st.iter().map(|s| s.b).sum();
    let c: f64 = st.iter().map(|s| s.c).sum();
    let n: f64 = st.iter().map(|s| s.n).sum();
    let scale = st.iter().fold(0.0_f64, |m, s| m.max(s.mean_w.abs()));
    if !(a > 1e-12 * n * scale * scale) {
        return Err(Error::UnidentifiableViscous);
    }
    let f_v = b / a;
    let f: Vec<f64> = st.iter().map(|s| s.mean_f - f_v * s.mean_w).collect();
    let gram_diag: Vec<usize> = intervals.counts();
    let rejection_costs = (0..f.len().saturating_sub(1))
        .map(|i| {
            let (ni, nj) = (gram_diag[i] as f64, gram_diag[i + 1] as f64);
            ni * nj / (ni + nj) * (f[i] - f[i + 1]).powi(2)
        })
        .collect();
    Ok(SegmentedFit {
        f,
        f_v,
        gram_diag,
        rejection_costs,
        sse: (c - b * b / a).max(0.0),
    })
}

/// Fit with a single dry coefficient over the whole window.
pub fn naive_fit(window: &TelemetryWindow) -> Result<(IntervalSet, SegmentedFit)> {
    let iv = build_intervals(&[], window.len(), 0)?;
    let f = fit(window, &iv)?;
    Ok((iv, f))
}

/// Residuals `f_hat - F_i - f_v omega` over the in-interval points.
pub fn residuals(window: &TelemetryWindow, intervals: &IntervalSet, fit: &SegmentedFit) -> Vec<f64> {
    let (omega, f_hat) = (window.omega(), window.f_hat());
    let mut out = Vec::new();
    for (i, &(a, b)) in intervals.intervals.iter().enumerate() {
        out.extend((a..=b).map(|k| f_hat[k] - fit.f[i] - fit.f_v * omega[k]));
    }
    out
}

/// Root mean square of [`residuals`].
pub fn rmse(window: &TelemetryWindow, intervals: &IntervalSet, fit: &SegmentedFit) -> f64 {
    let r = residuals(window, intervals, fit);
    (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt()
}

pub fn excess_rmse(rmse: f64, sigma_hat: f64) -> f64 {
    (rmse - sigma_hat).max(0.0)
}

/// Default length of the leading segment used by [`estimate_noise_sigma`].
pub const NOISE_SEGMENT: usize = 512;

/// Robust noise level from first differences: `median |df| / (sqrt 2 * 0.6745)`,
/// over the first `segment` points and over the whole window; the smaller
/// of the two.
pub fn estimate_noise_sigma(window: &TelemetryWindow, segment: usize) -> Result<f64> {
    let f = window.f_hat();
    if f.len() < 32 {
        return Err(Error::WindowTooShort {
            len: f.len(),
            needed: 32,
        });
    }
    let scale = std::f64::consts::SQRT_2 * 0.6745;
    let est = |xs: &[f64]| {
        let d: Vec<f64> = xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        stats::median(&d) / scale
    };
    let head = &f[..segment.clamp(2, f.len())];
    Ok(est(head).min(est(f)))
}

/// One point of the residual survival comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub x: f64,
    pub empirical: f64,
    pub gaussian: f64,
}

/// Empirical survival `P(|r| >= x)` of pooled absolute residuals next to the
/// Gaussian value `2 (1 - Phi(x / sigma))`, on `n_grid` points from 0 to
/// `x_max`.
pub fn error_survival(abs_residuals: &[f64], sigma_hat: f64, x_max: f64, n_grid: usize) -> Vec<SurvivalPoint> {
    let mut v: Vec<f64> = abs_residuals.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len().max(1) as f64;
    (0..n_grid)
        .map(|i| {
            let x = if n_grid > 1 {
                x_max * i as f64 / (n_grid - 1) as f64
            } else {
                0.0
            };
            let below = v.partition_point(|&r| r < x);
            SurvivalPoint {
                x,
                empirical: (v.len() - below) as f64 / n,
                gaussian: 2.0 * stats::normal_sf(x / sigma_hat),
            }
        })
        .collect()
}
