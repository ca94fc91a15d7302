//! End-to-end diagnosis of a telemetry window.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assign::{self, AssignConfig, AssignmentResult};
use crate::changepoint::{self, ChangepointList, DetectorConfig};
use crate::classify::{AnomalyClassifiers, ProcessedDataset, ProcessedEntry, TrainConfig};
use crate::error::{Error, Result, Stage};
use crate::estimate::{self, IntervalSet, SegmentedFit};
use crate::model::{self, AnomalyStatus, FssSpec, LabeledDataset, TelemetryWindow};
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorSettings {
    pub w: usize,
    pub w_b: f64,
    pub f_tilde_v: f64,
    /// False-alarm probability per point used to set the threshold.
    pub alpha: f64,
    /// Explicit threshold; overrides `alpha`.
    #[serde(default)]
    pub glr_thr: Option<f64>,
    /// Known noise level; estimated from the window when absent.
    #[serde(default)]
    pub sigma_v: Option<f64>,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        DetectorSettings {
            w: 10,
            w_b: 1.0,
            f_tilde_v: 1.0,
            alpha: 1e-9,
            glr_thr: None,
            sigma_v: None,
        }
    }
}

impl DetectorSettings {
    pub fn threshold(&self) -> Result<f64> {
        match self.glr_thr {
            Some(t) => Ok(t),
            None => changepoint::calibrate_threshold(self.alpha),
        }
    }

    pub fn resolve(&self, sigma_v: f64) -> Result<DetectorConfig> {
        let cfg = DetectorConfig {
            w: self.w,
            w_b: self.w_b,
            f_tilde_v: self.f_tilde_v,
            glr_thr: self.threshold()?,
            sigma_v,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssignSettings {
    /// Largest dwell time considered; twice the window length when absent.
    #[serde(default)]
    pub tau_max: Option<usize>,
    pub allow_rejection: bool,
    #[serde(default)]
    pub survival_log_floor: Option<f64>,
    pub max_expansions: usize,
    pub beam_width: usize,
}

impl Default for AssignSettings {
    fn default() -> Self {
        let d = AssignConfig::default();
        AssignSettings {
            tau_max: None,
            allow_rejection: true,
            survival_log_floor: Some(-10.0),
            max_expansions: d.max_expansions,
            beam_width: d.beam_width,
        }
    }
}

impl AssignSettings {
    pub fn resolve(&self, n: usize, sigma_v: f64) -> AssignConfig {
        AssignConfig {
            tau_max: self.tau_max.unwrap_or(2 * n),
            sigma_v,
            allow_rejection: self.allow_rejection,
            survival_log_floor: self.survival_log_floor,
            max_expansions: self.max_expansions,
            beam_width: self.beam_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub detector: DetectorSettings,
    /// Guard band around each changepoint; half the detector window when
    /// absent.
    #[serde(default)]
    pub delta_k_error: Option<usize>,
    pub fss_specs: Vec<FssSpec>,
    pub assign: AssignSettings,
    pub train: TrainConfig,
    /// Leading segment length for the noise estimate.
    pub noise_segment: usize,
}

impl PipelineConfig {
    /// Detector and assignment defaults with the switching systems of the
    /// reference model.
    pub fn reference() -> Self {
        PipelineConfig {
            detector: DetectorSettings::default(),
            delta_k_error: None,
            fss_specs: model::reference::model().fss,
            assign: AssignSettings::default(),
            train: TrainConfig::default(),
            noise_segment: estimate::NOISE_SEGMENT,
        }
    }

    pub fn guard(&self) -> usize {
        self.delta_k_error.unwrap_or(self.detector.w / 2)
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.threshold()?;
        for s in &self.fss_specs {
            s.validate()?;
        }
        if self.train.config_filters.len() > self.fss_specs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.fss_specs.len(),
                got: self.train.config_filters.len(),
            });
        }
        if self.train.n_bins == 0 {
            return Err(Error::InvalidConfig("n_bins must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::reference()
    }
}

/// Wall-clock time per stage in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub changepoint_ms: f64,
    pub estimation_ms: f64,
    pub assignment_ms: f64,
    pub classification_ms: f64,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.changepoint_ms + self.estimation_ms + self.assignment_ms + self.classification_ms
    }
}

/// Fit of one window together with the changepoints it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub sigma_hat: f64,
    /// Changepoints kept after building the intervals.
    pub changepoints: Vec<usize>,
    pub intervals: IntervalSet,
    pub fit: SegmentedFit,
    pub rmse: f64,
    pub excess_rmse: f64,
}

/// Output of the first three stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Processed {
    pub sigma_v: f64,
    pub detected: ChangepointList,
    pub fit: FitReport,
    pub assignment: AssignmentResult,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub theta_hat: AnomalyStatus,
    pub timings: StageTimings,
    pub sigma_v: f64,
    pub changepoints: ChangepointList,
    pub fit: FitReport,
    pub assignment: AssignmentResult,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Noise level used by every stage: the configured one or the estimate.
pub fn noise_level(window: &TelemetryWindow, cfg: &PipelineConfig) -> Result<f64> {
    match cfg.detector.sigma_v {
        Some(s) => Ok(s),
        None => {
            let s = estimate::estimate_noise_sigma(window, cfg.noise_segment)?;
            let scale = window.f_hat().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Ok(s.max(1e-12 * (1.0 + scale)))
        }
    }
}

pub fn detect_stage(window: &TelemetryWindow, cfg: &PipelineConfig, sigma_v: f64) -> Result<ChangepointList> {
    let det = cfg.detector.resolve(sigma_v)?;
    changepoint::find_changepoints(window, &det)
}

pub fn estimate_stage(window: &TelemetryWindow, changepoints: &[usize], cfg: &PipelineConfig, sigma_v: f64) -> Result<FitReport> {
    let intervals = estimate::build_intervals(changepoints, window.len(), cfg.guard())?;
    let fit = estimate::fit(window, &intervals)?;
    let rmse = estimate::rmse(window, &intervals, &fit);
    Ok(FitReport {
        n: window.len(),
        sigma_hat: sigma_v,
        changepoints: intervals.changepoints.clone(),
        intervals,
        excess_rmse: estimate::excess_rmse(rmse, sigma_v),
        rmse,
        fit,
    })
}

pub fn assign_stage(fit: &FitReport, cfg: &PipelineConfig) -> Result<AssignmentResult> {
    let events = assign::events_from_fit(&fit.changepoints, &fit.fit);
    let acfg = cfg.assign.resolve(fit.n, fit.sigma_hat);
    assign::assign(&events, &cfg.fss_specs, &acfg, &fit.fit.f, fit.fit.f_v)
}

/// Changepoint detection, segmented fit and assignment.
pub fn process_window(window: &TelemetryWindow, cfg: &PipelineConfig) -> Result<Processed> {
    let mut timings = StageTimings::default();
    let t = Instant::now();
    let sigma_v = noise_level(window, cfg).map_err(Error::at(Stage::Changepoint))?;
    let detected = detect_stage(window, cfg, sigma_v).map_err(Error::at(Stage::Changepoint))?;
    timings.changepoint_ms = ms(t);

    let t = Instant::now();
    let fit = estimate_stage(window, &detected.indices, cfg, sigma_v).map_err(Error::at(Stage::Estimation))?;
    timings.estimation_ms = ms(t);

    let t = Instant::now();
    let assignment = assign_stage(&fit, cfg).map_err(Error::at(Stage::Assignment))?;
    timings.assignment_ms = ms(t);
    Ok(Processed {
        sigma_v,
        detected,
        fit,
        assignment,
        timings,
    })
}

/// All four stages on one window.
pub fn diagnose(window: &TelemetryWindow, cfg: &PipelineConfig, models: &AnomalyClassifiers) -> Result<DiagnosisReport> {
    if models.n_fss() != cfg.fss_specs.len() {
        return Err(Error::DimensionMismatch {
            expected: cfg.fss_specs.len(),
            got: models.n_fss(),
        });
    }
    let p = process_window(window, cfg)?;
    let mut timings = p.timings;
    let t = Instant::now();
    let a = &p.assignment;
    let theta_hat = models
        .classify(a.f_bar_d, a.f_v, &a.per_fss)
        .map_err(Error::at(Stage::Classification))?;
    timings.classification_ms = ms(t);
    Ok(DiagnosisReport {
        theta_hat,
        timings,
        sigma_v: p.sigma_v,
        changepoints: p.detected,
        fit: p.fit,
        assignment: p.assignment,
    })
}

pub fn processed_entry(p: &Processed, status: AnomalyStatus) -> ProcessedEntry {
    ProcessedEntry {
        f_bar_d: p.assignment.f_bar_d,
        f_v: p.assignment.f_v,
        per_fss: p.assignment.per_fss.clone(),
        status,
        n_changepoints: p.fit.changepoints.len(),
        rejections: p.assignment.rejections,
        iterations: p.assignment.iterations,
        exact: p.assignment.exact,
    }
}

/// Runs the first three stages over a labeled dataset. Windows that fail
/// are listed in `failures` and left out of `entries`.
pub fn build_processed_dataset(data: &LabeledDataset, cfg: &PipelineConfig, exec: Execution) -> Result<ProcessedDataset> {
    cfg.validate()?;
    if data.n_fss() != cfg.fss_specs.len() {
        return Err(Error::DimensionMismatch {
            expected: cfg.fss_specs.len(),
            got: data.n_fss(),
        });
    }
    let results = par::map_slice(&data.entries, exec, |(w, _)| process_window(w, cfg));
    let mut out = ProcessedDataset::default();
    for (i, (r, (_, status))) in results.into_iter().zip(&data.entries).enumerate() {
        match r {
            Ok(p) => out.entries.push(processed_entry(&p, status.clone())),
            Err(e) => {
                log::warn!("window {i}: {e}");
                out.failures.push((i, e.to_string()));
            }
        }
    }
    Ok(out)
}
