//! Windowed generalized likelihood ratio (wGLR) changepoint detection with a
//! quadratic prior on the viscous coefficient.
//!
//! At index `k` the left window is `[k - w, k)` and the right window is
//! `[k, k + w)`. Both hypotheses fit `f = F + v * omega` by penalized least
//! squares: the no-jump hypothesis with one dry coefficient over both windows,
//! the jump hypothesis with one per window. The score is the difference of the
//! maximized Gaussian log-likelihoods, so `2 * wGLR` is chi-square with one
//! degree of freedom under the null.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TelemetryWindow;
use crate::par::{self, Execution};
use crate::rng::{self, Rng};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Points on each side of the candidate index.
    pub w: usize,
    /// Weight of the prior `W_b (f_v - f_tilde_v)^2` on the log-likelihood.
    pub w_b: f64,
    pub f_tilde_v: f64,
    pub glr_thr: f64,
    pub sigma_v: f64,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.w < 2 {
            return bad(format!("window half-size must be at least 2, got {}", self.w));
        }
        if !(self.glr_thr > 0.0) {
            return bad(format!("threshold must be positive, got {}", self.glr_thr));
        }
        if !(self.sigma_v > 0.0 && self.sigma_v.is_finite()) {
            return bad(format!("sigma_v must be positive, got {}", self.sigma_v));
        }
        if !(self.w_b >= 0.0 && self.w_b.is_finite()) || !self.f_tilde_v.is_finite() {
            return bad("prior weight must be finite and non-negative".into());
        }
        Ok(())
    }

    /// Penalty weight on the squared-error scale.
    fn lambda(&self) -> f64 {
        2.0 * self.sigma_v * self.sigma_v * self.w_b
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChangepointList {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
}

impl ChangepointList {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Raw moments of (omega, f) over a set of points, both shifted by a common
/// reference to limit cancellation.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    w: f64,
    f: f64,
    ww: f64,
    wf: f64,
    ff: f64,
}

impl Moments {
    fn add(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            w: self.w + o.w,
            f: self.f + o.f,
            ww: self.ww + o.ww,
            wf: self.wf + o.wf,
            ff: self.ff + o.ff,
        }
    }

    fn sub(self, o: Moments) -> Moments {
        Moments {
            n: self.n - o.n,
            w: self.w - o.w,
            f: self.f - o.f,
            ww: self.ww - o.ww,
            wf: self.wf - o.wf,
            ff: self.ff - o.ff,
        }
    }

    /// Centered sums (Sww, Swf, Sff).
    fn centered(&self) -> Centered {
        Centered {
            a: (self.ww - self.w * self.w / self.n).max(0.0),
            b: self.wf - self.w * self.f / self.n,
            c: (self.ff - self.f * self.f / self.n).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Centered {
    a: f64,
    b: f64,
    c: f64,
}

impl Centered {
    fn two_pass(omega: &[f64], f: &[f64]) -> Centered {
        let n = omega.len() as f64;
        let mw = omega.iter().sum::<f64>() / n;
        let mf = f.iter().sum::<f64>() / n;
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (&x, &y) in omega.iter().zip(f) {
            a += (x - mw) * (x - mw);
            b += (x - mw) * (y - mf);
            c += (y - mf) * (y - mf);
        }
        Centered { a, b, c }
    }

    fn plus(self, o: Centered) -> Centered {
        Centered {
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c,
        }
    }
}

/// Minimum over the shared slope of `C - 2 v B + v^2 A + lam (v - vt)^2`,
/// written as the unpenalized residual plus the price of moving the slope
/// from its free estimate `B / A` towards `vt`.
fn penalized_cost(s: Centered, lam: f64, vt: f64, tol: f64) -> f64 {
    if s.a + lam <= tol || s.a <= tol {
        // Slope undetermined by the data: it sits at the prior at no cost.
        return s.c;
    }
    let slope = s.b / s.a;
    let free = (s.c - s.b * slope).max(0.0);
    free + s.a * lam / (s.a + lam) * (slope - vt) * (slope - vt)
}

fn degeneracy_tol(n: f64, omega_scale: f64) -> f64 {
    1e-12 * n * omega_scale * omega_scale
}

fn wglr_from(
    jump: Centered,
    union: Centered,
    n: f64,
    scale: f64,
    cfg: &DetectorConfig,
) -> Result<f64> {
    let lam = cfg.lambda();
    let tol = degeneracy_tol(n, scale);
    if union.a + lam <= tol {
        return Err(Error::UnidentifiableViscous);
    }
    let j0 = penalized_cost(union, lam, cfg.f_tilde_v, tol);
    let j1 = penalized_cost(jump, lam, cfg.f_tilde_v, tol);
    Ok((j0 - j1) / (2.0 * cfg.sigma_v * cfg.sigma_v))
}

/// wGLR at a single index, computed directly from the window contents.
pub fn wglr_at(window: &TelemetryWindow, k: usize, cfg: &DetectorConfig) -> Result<f64> {
    cfg.validate()?;
    let (n, w) = (window.len(), cfg.w);
    if k < w || k + w > n {
        return Err(Error::IndexOutOfRange {
            index: k,
            lo: w,
            hi: n.saturating_sub(w),
        });
    }
    let om = &window.omega()[k - w..k + w];
    let fh = &window.f_hat()[k - w..k + w];
    let left = Centered::two_pass(&om[..w], &fh[..w]);
    let right = Centered::two_pass(&om[w..], &fh[w..]);
    let union = Centered::two_pass(om, fh);
    let scale = om.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    wglr_from(left.plus(right), union, (2 * w) as f64, scale, cfg)
}

/// wGLR at every index; entries closer than `w` to either edge are `None`.
///
/// Moments are accumulated in chunks with a local reference, so the total
/// cost is linear in the window length.
pub fn wglr_profile(window: &TelemetryWindow, cfg: &DetectorConfig) -> Result<Vec<Option<f64>>> {
    cfg.validate()?;
    let (n, w) = (window.len(), cfg.w);
    if n < 2 * w + 1 {
        return Err(Error::WindowTooShort {
            len: n,
            needed: 2 * w + 1,
        });
    }
    let omega = window.omega();
    let f_hat = window.f_hat();
    let mut out = vec![None; n];
    let chunk = (2 * w).max(64);
    let mut prefix: Vec<Moments> = Vec::with_capacity(chunk + 2 * w + 1);
    let mut k0 = w;
    while k0 <= n - w {
        let k1 = (k0 + chunk).min(n - w + 1);
        let (lo, hi) = (k0 - w, k1 - 1 + w);
        let len = (hi - lo) as f64;
        let rw = omega[lo..hi].iter().sum::<f64>() / len;
        let rf = f_hat[lo..hi].iter().sum::<f64>() / len;
        let scale = omega[lo..hi].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        prefix.clear();
        let mut acc = Moments::default();
        prefix.push(acc);
        for i in lo..hi {
            let (x, y) = (omega[i] - rw, f_hat[i] - rf);
            acc = acc.add(Moments {
                n: 1.0,
                w: x,
                f: y,
                ww: x * x,
                wf: x * y,
                ff: y * y,
            });
            prefix.push(acc);
        }
        for k in k0..k1 {
            let l = prefix[k - lo].sub(prefix[k - w - lo]);
            let r = prefix[k + w - lo].sub(prefix[k - lo]);
            let jump = l.centered().plus(r.centered());
            let union = l.add(r).centered();
            out[k] = Some(wglr_from(jump, union, (2 * w) as f64, scale, cfg)?);
        }
        k0 = k1;
    }
    Ok(out)
}

/// One changepoint per maximal run of scores at or above the threshold,
/// located at the run's maximum (smallest index on ties).
pub fn detect(profile: &[Option<f64>], glr_thr: f64) -> ChangepointList {
    let mut out = ChangepointList::default();
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in profile.iter().enumerate() {
        match s {
            Some(v) if *v >= glr_thr => {
                if best.is_none_or(|(_, b)| *v > b) {
                    best = Some((k, *v));
                }
            }
            _ => {
                if let Some((i, v)) = best.take() {
                    out.indices.push(i);
                    out.scores.push(v);
                }
            }
        }
    }
    if let Some((i, v)) = best {
        out.indices.push(i);
        out.scores.push(v);
    }
    out
}

/// Profile then detect.
pub fn find_changepoints(window: &TelemetryWindow, cfg: &DetectorConfig) -> Result<ChangepointList> {
    let p = wglr_profile(window, cfg)?;
    Ok(detect(&p, cfg.glr_thr))
}

/// Threshold on wGLR whose per-point exceedance probability under the null
/// is `alpha`. The score is already normalized by the noise variance, so the
/// threshold does not depend on it.
pub fn calibrate_threshold(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(0.5 * stats::chi2_1_isf(alpha))
}

/// Synthetic trial windows for Monte Carlo benchmarks: constant dry
/// friction, viscous friction on a slow triangle spin profile with random
/// phase, white noise, and an optional dry step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDesign {
    pub sigma: f64,
    pub f_dry: f64,
    pub f_v: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// Period of the spin sweep in steps.
    pub omega_period: f64,
}

impl Default for TrialDesign {
    fn default() -> Self {
        TrialDesign {
            sigma: 1.0,
            f_dry: 1.0,
            f_v: 1.0,
            omega_lo: 0.5,
            omega_hi: 1.5,
            omega_period: 80_000.0,
        }
    }
}

impl TrialDesign {
    /// Window of `len` points with a step of `delta` at `step_at`.
    pub fn window(&self, len: usize, step: Option<(usize, f64)>, rng: &mut Rng) -> TelemetryWindow {
        let phase: f64 = rng.random();
        self.window_with_phase(len, step, phase, Some(rng))
    }

    fn window_with_phase(
        &self,
        len: usize,
        step: Option<(usize, f64)>,
        phase: f64,
        mut rng: Option<&mut Rng>,
    ) -> TelemetryWindow {
        let profile = crate::simulate::SpinProfile::Sweep {
            lo: self.omega_lo,
            hi: self.omega_hi,
            period: self.omega_period,
            phase,
        };
        let mut omega = Vec::with_capacity(len);
        let mut f_hat = Vec::with_capacity(len);
        for k in 0..len {
            let om = profile.omega_at(k, len);
            let mut f = self.f_dry + self.f_v * om;
            if let Some((at, d)) = step {
                if k >= at {
                    f += d;
                }
            }
            if let Some(r) = rng.as_deref_mut() {
                let z: f64 = r.sample(StandardNormal);
                f += self.sigma * z;
            }
            omega.push(om);
            f_hat.push(f);
        }
        TelemetryWindow::new(omega, f_hat).expect("finite trial window")
    }

    /// Noiseless wGLR at a step of `delta` on a rising stretch of the sweep.
    pub fn noiseless_step_score(&self, cfg: &DetectorConfig, delta: f64) -> Result<f64> {
        let w = cfg.w;
        let win = self.window_with_phase(2 * w, Some((w, delta)), 0.1, None);
        let mut c = cfg.clone();
        c.sigma_v = self.sigma;
        wglr_at(&win, w, &c)
    }
}

/// Threshold at which a step of `delta` is missed with probability `mdr`,
/// from the noncentral chi-square law of `2 * wGLR` at the true step.
pub fn threshold_for_mdr(cfg: &DetectorConfig, design: &TrialDesign, delta: f64, mdr: f64) -> Result<f64> {
    if !(mdr > 0.0 && mdr < 1.0) {
        return Err(Error::InvalidAlpha(mdr));
    }
    let lambda = 2.0 * design.noiseless_step_score(cfg, delta)?;
    Ok(0.5 * stats::ncchi2_1_quantile(mdr, lambda))
}

const MDR_STREAM: u64 = 0x4d44;
const ARL_STREAM: u64 = 0x4152;

/// Fraction of single-step trial windows in which no changepoint is reported
/// within `w` of the true step.
pub fn estimate_mdr(
    cfg: &DetectorConfig,
    design: &TrialDesign,
    delta: f64,
    n_trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    let mut c = cfg.clone();
    c.sigma_v = design.sigma;
    c.validate()?;
    let len = 8 * c.w;
    let at = len / 2;
    let misses = par::map_indexed(n_trials, exec, |i| -> Result<bool> {
        let mut rng = rng::seeded(rng::derive_seed(seed, MDR_STREAM, i as u64));
        let win = design.window(len, Some((at, delta)), &mut rng);
        let cps = find_changepoints(&win, &c)?;
        Ok(!cps.indices.iter().any(|&k| k.abs_diff(at) <= c.w))
    });
    let mut n_miss = 0usize;
    for m in misses {
        n_miss += m? as usize;
    }
    Ok(n_miss as f64 / n_trials.max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArlEstimate {
    /// Scored null points examined.
    pub points: usize,
    pub alarms: usize,
    /// Points per false alarm; `None` when no alarm occurred (censored).
    pub arl: Option<f64>,
}

impl ArlEstimate {
    /// ARL, or the examined budget as a lower bound when censored.
    pub fn value_or_bound(&self) -> f64 {
        self.arl.unwrap_or(self.points as f64)
    }
}

/// Exposure-weighted average run length on null trial windows: scored points
/// divided by the number of false alarms.
pub fn estimate_arl(
    cfg: &DetectorConfig,
    design: &TrialDesign,
    budget_points: usize,
    seed: u64,
    exec: Execution,
) -> Result<ArlEstimate> {
    let mut c = cfg.clone();
    c.sigma_v = design.sigma;
    c.validate()?;
    let seg_len = 20_000usize.max(50 * c.w);
    let per_seg = seg_len - 2 * c.w + 1;
    let n_seg = budget_points.div_ceil(per_seg).max(1);
    let alarms = par::map_indexed(n_seg, exec, |i| -> Result<usize> {
        let mut rng = rng::seeded(rng::derive_seed(seed, ARL_STREAM, i as u64));
        let win = design.window(seg_len, None, &mut rng);
        Ok(find_changepoints(&win, &c)?.len())
    });
    let mut total = 0usize;
    for a in alarms {
        total += a?;
    }
    let points = n_seg * per_seg;
    Ok(ArlEstimate {
        points,
        alarms: total,
        arl: (total > 0).then(|| points as f64 / total as f64),
    })
}
