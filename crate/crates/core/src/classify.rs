//! Per-anomaly features and linear SVM classifiers.
//!
//! The dry and viscous anomalies are decided from the scalar coefficients;
//! each FSS anomaly from a normalized histogram of the friction values the
//! assignment attributed to that FSS. Every anomaly has its own model and
//! its own features.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::assign::FssTrack;
use crate::error::{Error, Result};
use crate::model::{anomaly_names, AnomalyStatus};
use crate::par::{self, Execution};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub n_bins: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Configurations whose friction values are counted; all when `None`.
    #[serde(default)]
    pub config_filter: Option<Vec<usize>>,
}

impl HistogramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins == 0 || !(self.r_min < self.r_max) || !self.r_min.is_finite() || !self.r_max.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "histogram needs n_bins >= 1 and r_min < r_max, got {} bins over [{}, {}]",
                self.n_bins, self.r_min, self.r_max
            )));
        }
        Ok(())
    }

    pub fn bin(&self, f: f64) -> usize {
        let x = (f - self.r_min) / (self.r_max - self.r_min) * self.n_bins as f64;
        (x.floor().max(0.0) as usize).min(self.n_bins - 1)
    }
}

/// Fraction of the (filtered) friction values falling in each bin; values
/// outside the range count in the edge bins. All zeros when nothing passes
/// the filter.
pub fn histogram_features(f: &[f64], q: &[usize], cfg: &HistogramConfig) -> Vec<f64> {
    let mut z = vec![0.0; cfg.n_bins];
    let mut n = 0usize;
    for (i, &v) in f.iter().enumerate() {
        if let Some(filter) = &cfg.config_filter {
            if !q.get(i).is_some_and(|c| filter.contains(c)) {
                continue;
            }
        }
        z[cfg.bin(v)] += 1.0;
        n += 1;
    }
    if n > 0 {
        for v in &mut z {
            *v /= n as f64;
        }
    }
    z
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub feature_dim: usize,
}

impl LinearSvmModel {
    pub fn decision(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: z.len(),
            });
        }
        Ok(self.w.iter().zip(z).map(|(w, x)| w * x).sum::<f64>() + self.b)
    }

    /// True for an anomaly; a zero decision value counts as nominal.
    pub fn classify(&self, z: &[f64]) -> Result<bool> {
        Ok(self.decision(z)? > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub reg: f64,
    pub epochs: usize,
    /// Train on features scaled to zero mean and unit variance; the learned
    /// model is mapped back to the original coordinates.
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            reg: 1e-2,
            epochs: 100,
            standardize: true,
        }
    }
}

/// `reg / 2 * (|w|^2 + b^2) + mean hinge loss`, the objective the trainer
/// minimizes (in standardized coordinates when standardization is on).
pub fn svm_objective(model: &LinearSvmModel, x: &[Vec<f64>], y: &[f64], reg: f64) -> f64 {
    let norm: f64 = model.w.iter().map(|w| w * w).sum::<f64>() + model.b * model.b;
    0.5 * reg * norm + mean_hinge(model, x, y)
}

pub fn mean_hinge(model: &LinearSvmModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let total: f64 = x
        .iter()
        .zip(y)
        .map(|(z, &l)| (1.0 - l * model.decision(z).unwrap_or(0.0)).max(0.0))
        .sum();
    total / x.len().max(1) as f64
}

pub fn error_rate(model: &LinearSvmModel, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let wrong = x
        .iter()
        .zip(y)
        .filter(|(z, &l)| model.classify(z).unwrap_or(false) != (l > 0.0))
        .count();
    wrong as f64 / x.len().max(1) as f64
}

/// Stochastic subgradient descent on the L2-regularized hinge loss with step
/// `1 / (reg t)`, a fresh shuffle every epoch and the average of the second
/// half of the iterates as the result. Labels are `+1` / `-1`.
pub fn train_svm(x: &[Vec<f64>], y: &[f64], cfg: &SvmConfig, seed: u64) -> Result<LinearSvmModel> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if !(cfg.reg > 0.0) || cfg.epochs == 0 {
        return Err(Error::InvalidConfig("svm needs reg > 0 and epochs >= 1".into()));
    }
    if !(y.iter().any(|&l| l > 0.0) && y.iter().any(|&l| l < 0.0)) {
        return Err(Error::SingleClass);
    }
    let dim = x[0].len();
    if let Some(bad) = x.iter().find(|z| z.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let n = x.len();
    let (mu, scale) = if cfg.standardize {
        let mu: Vec<f64> = (0..dim).map(|j| x.iter().map(|z| z[j]).sum::<f64>() / n as f64).collect();
        let scale: Vec<f64> = (0..dim)
            .map(|j| {
                let v = x.iter().map(|z| (z[j] - mu[j]).powi(2)).sum::<f64>() / n as f64;
                if v > 0.0 {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        (mu, scale)
    } else {
        (vec![0.0; dim], vec![1.0; dim])
    };
    let xs: Vec<Vec<f64>> = x
        .iter()
        .map(|z| z.iter().enumerate().map(|(j, v)| (v - mu[j]) / scale[j]).collect())
        .collect();

    let mut r = rng::seeded(seed);
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut avg_w = vec![0.0; dim];
    let mut avg_b = 0.0;
    let total = cfg.epochs * n;
    let start_avg = total / 2;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut r);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (cfg.reg * t as f64);
            let margin = y[i] * (w.iter().zip(&xs[i]).map(|(a, b)| a * b).sum::<f64>() + b);
            let shrink = 1.0 - eta * cfg.reg;
            for wj in &mut w {
                *wj *= shrink;
            }
            b *= shrink;
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(&xs[i]) {
                    *wj += eta * y[i] * xj;
                }
                b += eta * y[i];
            }
            if t > start_avg {
                for (a, wj) in avg_w.iter_mut().zip(&w) {
                    *a += wj;
                }
                avg_b += b;
            }
        }
    }
    let k = (total - start_avg) as f64;
    let ws: Vec<f64> = avg_w.iter().map(|a| a / k).collect();
    let bs = avg_b / k;
    let w_orig: Vec<f64> = ws.iter().zip(&scale).map(|(w, s)| w / s).collect();
    let b_orig = bs - w_orig.iter().zip(&mu).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearSvmModel {
        w: w_orig,
        b: b_orig,
        feature_dim: dim,
    })
}

/// Output of the first three pipeline stages for one labeled window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedEntry {
    pub f_bar_d: f64,
    pub f_v: f64,
    pub per_fss: Vec<FssTrack>,
    pub status: AnomalyStatus,
    #[serde(default)]
    pub n_changepoints: usize,
    #[serde(default)]
    pub rejections: usize,
    #[serde(default)]
    pub iterations: usize,
    /// False when the assignment fell back to the approximate search.
    #[serde(default = "yes")]
    pub exact: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProcessedDataset {
    pub entries: Vec<ProcessedEntry>,
    /// Windows the pipeline could not process, with the reason.
    #[serde(default)]
    pub failures: Vec<(usize, String)>,
}

impl ProcessedDataset {
    pub fn n_fss(&self) -> usize {
        self.entries.first().map_or(0, |e| e.per_fss.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub svm: SvmConfig,
    pub n_bins: usize,
    /// Fraction of the observed friction range added on each side of the
    /// histogram range.
    pub range_padding: f64,
    /// Per-FSS configuration filter; missing entries mean no filter.
    #[serde(default)]
    pub config_filters: Vec<Option<Vec<usize>>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            svm: SvmConfig::default(),
            n_bins: 40,
            range_padding: 0.1,
            config_filters: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssClassifier {
    pub histogram: HistogramConfig,
    pub model: LinearSvmModel,
}

/// One trained model per anomaly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyClassifiers {
    pub dry: LinearSvmModel,
    pub viscous: LinearSvmModel,
    pub fss: Vec<FssClassifier>,
}

impl AnomalyClassifiers {
    pub fn n_fss(&self) -> usize {
        self.fss.len()
    }

    pub fn classify(&self, f_bar_d: f64, f_v: f64, per_fss: &[FssTrack]) -> Result<AnomalyStatus> {
        if per_fss.len() != self.fss.len() {
            return Err(Error::DimensionMismatch {
                expected: self.fss.len(),
                got: per_fss.len(),
            });
        }
        let mut status = AnomalyStatus::nominal(self.fss.len());
        status.set(0, self.dry.classify(&[f_bar_d])?);
        status.set(1, self.viscous.classify(&[f_v])?);
        for (s, (c, t)) in self.fss.iter().zip(per_fss).enumerate() {
            let z = histogram_features(&t.f, &t.q, &c.histogram);
            status.set(2 + s, c.model.classify(&z)?);
        }
        Ok(status)
    }

    pub fn classify_entry(&self, e: &ProcessedEntry) -> Result<AnomalyStatus> {
        self.classify(e.f_bar_d, e.f_v, &e.per_fss)
    }
}

fn labels(entries: &[&ProcessedEntry], anomaly: usize) -> Vec<f64> {
    entries
        .iter()
        .map(|e| if e.status.get(anomaly) { 1.0 } else { -1.0 })
        .collect()
}

/// Histogram range from the friction values of FSS `s` in `entries`.
pub fn fit_histogram(entries: &[&ProcessedEntry], s: usize, cfg: &TrainConfig) -> HistogramConfig {
    let (lo, hi) = entries
        .iter()
        .flat_map(|e| e.per_fss[s].f.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if lo.is_finite() && hi > lo {
        let pad = cfg.range_padding * (hi - lo);
        (lo - pad, hi + pad)
    } else if lo.is_finite() {
        (lo - 0.5, lo + 0.5)
    } else {
        (0.0, 1.0)
    };
    HistogramConfig {
        n_bins: cfg.n_bins,
        r_min: lo,
        r_max: hi,
        config_filter: cfg.config_filters.get(s).cloned().flatten(),
    }
}

/// Features and labels of FSS anomaly `s` (0-based FSS index).
pub fn fss_training_set(entries: &[&ProcessedEntry], s: usize, hist: &HistogramConfig) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x = entries
        .iter()
        .map(|e| histogram_features(&e.per_fss[s].f, &e.per_fss[s].q, hist))
        .collect();
    (x, labels(entries, 2 + s))
}

pub fn train_dry(entries: &[&ProcessedEntry], cfg: &TrainConfig, seed: u64) -> Result<LinearSvmModel> {
    let x: Vec<Vec<f64>> = entries.iter().map(|e| vec![e.f_bar_d]).collect();
    train_svm(&x, &labels(entries, 0), &cfg.svm, rng::derive_seed(seed, 0x5356, 0))
}

pub fn train_viscous(entries: &[&ProcessedEntry], cfg: &TrainConfig, seed: u64) -> Result<LinearSvmModel> {
    let x: Vec<Vec<f64>> = entries.iter().map(|e| vec![e.f_v]).collect();
    train_svm(&x, &labels(entries, 1), &cfg.svm, rng::derive_seed(seed, 0x5356, 1))
}

pub fn train_fss(entries: &[&ProcessedEntry], s: usize, cfg: &TrainConfig, seed: u64) -> Result<FssClassifier> {
    let histogram = fit_histogram(entries, s, cfg);
    let (x, y) = fss_training_set(entries, s, &histogram);
    let model = train_svm(&x, &y, &cfg.svm, rng::derive_seed(seed, 0x5356, 2 + s as u64))?;
    Ok(FssClassifier { histogram, model })
}

pub fn train_classifiers(entries: &[&ProcessedEntry], cfg: &TrainConfig, seed: u64) -> Result<AnomalyClassifiers> {
    if entries.is_empty() {
        return Err(Error::SingleClass);
    }
    let n_fss = entries[0].per_fss.len();
    Ok(AnomalyClassifiers {
        dry: train_dry(entries, cfg, seed)?,
        viscous: train_viscous(entries, cfg, seed)?,
        fss: (0..n_fss).map(|s| train_fss(entries, s, cfg, seed)).collect::<Result<_>>()?,
    })
}

const SPLIT_STREAM: u64 = 0x5350;
const SPLIT_RETRIES: usize = 100;

/// Random train/validation split in which every anomaly has both classes
/// in the training part.
pub fn split(n: usize, train_fraction: f64, entries: &[ProcessedEntry], seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_anom = entries.first().map_or(0, |e| e.status.n_anomalies());
    let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n);
    for attempt in 0..SPLIT_RETRIES {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng::seeded(rng::derive_seed(seed, SPLIT_STREAM, attempt as u64)));
        let (train, val) = idx.split_at(n_train);
        let ok = (0..n_anom).all(|a| {
            let pos = train.iter().filter(|&&i| entries[i].status.get(a)).count();
            pos > 0 && pos < train.len()
        });
        if ok {
            return Ok((train.to_vec(), val.to_vec()));
        }
    }
    Err(Error::SingleClass)
}

/// Detection rates over repeated random splits: `cells[c][d]` is the
/// fraction of validation windows of true class `c` (0 nominal, then one
/// per anomaly) flagged by detector `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub classes: Vec<String>,
    pub detectors: Vec<String>,
    pub n_repeats: usize,
    pub train_fraction: f64,
    pub min: Vec<Vec<f64>>,
    pub mean: Vec<Vec<f64>>,
    pub max: Vec<Vec<f64>>,
}

impl AccuracyReport {
    /// Mean probability that anomaly `a` (0-based) is detected when it is
    /// the true class.
    pub fn detection(&self, a: usize) -> f64 {
        self.mean[a + 1][a]
    }

    /// Largest mean rate at which any detector fires on a class that is not
    /// its own.
    pub fn worst_cross_detection(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, row) in self.mean.iter().enumerate() {
            for (d, &v) in row.iter().enumerate() {
                if c != d + 1 && !v.is_nan() {
                    worst = worst.max(v);
                }
            }
        }
        worst
    }
}

/// Rates per (true class, detector) for one trained model on `val`.
pub fn detection_matrix(models: &AnomalyClassifiers, entries: &[ProcessedEntry], val: &[usize]) -> Result<Vec<Vec<f64>>> {
    let n_anom = 2 + models.n_fss();
    let mut hits = vec![vec![0usize; n_anom]; n_anom + 1];
    let mut counts = vec![0usize; n_anom + 1];
    for &i in val {
        let e = &entries[i];
        let Some(c) = e.status.class() else { continue };
        let out = models.classify_entry(e)?;
        counts[c] += 1;
        for d in 0..n_anom {
            if out.get(d) {
                hits[c][d] += 1;
            }
        }
    }
    Ok(hits
        .iter()
        .zip(&counts)
        .map(|(row, &n)| {
            row.iter()
                .map(|&h| if n == 0 { f64::NAN } else { h as f64 / n as f64 })
                .collect()
        })
        .collect())
}

/// Trains on `n_repeats` random splits and summarizes validation detection
/// rates.
pub fn evaluate(
    data: &ProcessedDataset,
    cfg: &TrainConfig,
    train_fraction: f64,
    n_repeats: usize,
    seed: u64,
    exec: Execution,
) -> Result<AccuracyReport> {
    let entries = &data.entries;
    if entries.is_empty() || n_repeats == 0 {
        return Err(Error::SingleClass);
    }
    let n_fss = data.n_fss();
    let runs = par::map_indexed(n_repeats, exec, |r| -> Result<Vec<Vec<f64>>> {
        let rs = rng::derive_seed(seed, SPLIT_STREAM, r as u64);
        let (train, val) = split(entries.len(), train_fraction, entries, rs)?;
        let tr: Vec<&ProcessedEntry> = train.iter().map(|&i| &entries[i]).collect();
        let models = train_classifiers(&tr, cfg, rs)?;
        detection_matrix(&models, entries, &val)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let names = anomaly_names(n_fss);
    let n_anom = names.len();
    let reduce = |f: &dyn Fn(&[f64]) -> f64| -> Vec<Vec<f64>> {
        (0..=n_anom)
            .map(|c| {
                (0..n_anom)
                    .map(|d| {
                        let v: Vec<f64> = runs.iter().map(|m| m[c][d]).filter(|x| !x.is_nan()).collect();
                        if v.is_empty() {
                            f64::NAN
                        } else {
                            f(&v)
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let mut classes = vec!["nominal".to_string()];
    classes.extend(names.iter().cloned());
    Ok(AccuracyReport {
        classes,
        detectors: names,
        n_repeats,
        train_fraction,
        min: reduce(&|v| v.iter().copied().fold(f64::INFINITY, f64::min)),
        mean: reduce(&|v| v.iter().sum::<f64>() / v.len() as f64),
        max: reduce(&|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    })
}

/// Final models trained on the whole dataset plus the split-based report.
pub fn train_all(
    data: &ProcessedDataset,
    cfg: &TrainConfig,
    train_fraction: f64,
    n_repeats: usize,
    seed: u64,
    exec: Execution,
) -> Result<(AnomalyClassifiers, AccuracyReport)> {
    let report = evaluate(data, cfg, train_fraction, n_repeats, seed, exec)?;
    let all: Vec<&ProcessedEntry> = data.entries.iter().collect();
    Ok((train_classifiers(&all, cfg, seed)?, report))
}
