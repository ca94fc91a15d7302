//! Benchmark suites over synthetic data with ground truth.
//!
//! Each suite writes CSV tables, SVG charts backed by those tables, and a
//! JSON summary into an output directory. Everything except the timing
//! suite is a deterministic function of the configuration and seed.

use std::cell::OnceCell;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::changepoint::{self, DetectorConfig, TrialDesign};
use crate::classify::{self, ProcessedDataset, ProcessedEntry};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::estimate;
use crate::io;
use crate::model::TelemetryWindow;
use crate::par::{self, Execution};
use crate::pipeline;
use crate::plot::{self, Axes, Series};
use crate::rng;
use crate::simulate::{self, SimulatedDataset};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Cpd,
    Rmse,
    Assign,
    Accuracy,
    Bins,
    Timing,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [Suite::Cpd, Suite::Rmse, Suite::Assign, Suite::Accuracy, Suite::Bins, Suite::Timing];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Cpd => "cpd",
            Suite::Rmse => "rmse",
            Suite::Assign => "assign",
            Suite::Accuracy => "accuracy",
            Suite::Bins => "bins",
            Suite::Timing => "timing",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

/// Detector Monte Carlo grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CpdBench {
    pub design: TrialDesign,
    pub ws: Vec<usize>,
    /// Step sizes in units of the noise level.
    pub deltas: Vec<f64>,
    /// False-alarm level of the fixed threshold used for the MDR grid.
    pub mdr_alpha: f64,
    pub mdr_w_b: f64,
    pub mdr_trials: usize,
    pub arl_w_bs: Vec<f64>,
    /// Step size (noise units) and missed-detection rate that set the
    /// threshold of each ARL cell.
    pub arl_delta: f64,
    pub arl_target_mdr: f64,
    pub arl_budget: usize,
}

impl Default for CpdBench {
    fn default() -> Self {
        CpdBench {
            design: TrialDesign::default(),
            ws: vec![10, 20, 50, 100],
            deltas: vec![2.0, 3.0, 5.0],
            mdr_alpha: 1e-6,
            mdr_w_b: 1e-4,
            mdr_trials: 200,
            arl_w_bs: vec![1e-8, 1e-6, 1e-4],
            arl_delta: 3.0,
            arl_target_mdr: 1e-3,
            arl_budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub cpd: CpdBench,
    pub train_fraction: f64,
    pub n_repeats: usize,
    pub bin_sweep: Vec<usize>,
    pub bin_repeats: usize,
    /// Bins of the excess-RMSE histograms (log-spaced).
    pub rmse_bins: usize,
    /// Windows whose residuals are pooled for the error survival curve.
    pub survival_windows: usize,
    pub survival_grid: usize,
    pub timing_runs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            cpd: CpdBench::default(),
            train_fraction: 0.2,
            n_repeats: 30,
            bin_sweep: vec![5, 10, 20, 40, 80, 120, 160, 200],
            bin_repeats: 10,
            rmse_bins: 40,
            survival_windows: 20,
            survival_grid: 200,
            timing_runs: 10,
        }
    }
}

/// Shared state of one benchmark invocation; the synthetic dataset and its
/// processed form are built on first use.
pub struct Bench<'a> {
    pub cfg: &'a Config,
    pub seed: u64,
    pub exec: Execution,
    pub out: PathBuf,
    dataset: OnceCell<SimulatedDataset>,
    processed: OnceCell<ProcessedDataset>,
}

const CELL_STREAM: u64 = 0x4345;
const TIMING_STREAM: u64 = 0x544d;

impl<'a> Bench<'a> {
    pub fn new(cfg: &'a Config, seed: u64, exec: Execution, out: &Path) -> Result<Self> {
        cfg.validate()?;
        Ok(Bench {
            cfg,
            seed,
            exec,
            out: out.to_path_buf(),
            dataset: OnceCell::new(),
            processed: OnceCell::new(),
        })
    }

    pub fn dataset(&self) -> Result<&SimulatedDataset> {
        if let Some(d) = self.dataset.get() {
            return Ok(d);
        }
        let d = simulate::make_dataset(&self.cfg.scenario, self.seed, self.exec)?;
        Ok(self.dataset.get_or_init(|| d))
    }

    pub fn processed(&self) -> Result<&ProcessedDataset> {
        if let Some(p) = self.processed.get() {
            return Ok(p);
        }
        let d = self.dataset()?;
        let p = pipeline::build_processed_dataset(&d.dataset, &self.cfg.pipeline, self.exec)?;
        Ok(self.processed.get_or_init(|| p))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn svg(&self, name: &str, body: String) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
    }

    pub fn run(&self, suite: Suite) -> Result<Value> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))?;
        let summary = match suite {
            Suite::Cpd => self.cpd()?,
            Suite::Rmse => self.rmse()?,
            Suite::Assign => self.assign()?,
            Suite::Accuracy => self.accuracy()?,
            Suite::Bins => self.bins()?,
            Suite::Timing => self.timing()?,
            Suite::All => {
                let mut m = Map::new();
                for s in Suite::EACH {
                    m.insert(s.name().into(), self.run(s)?);
                }
                return Ok(Value::Object(m));
            }
        };
        Ok(summary)
    }

    /// Missed-detection rates at a fixed threshold over (w, step size), and
    /// false-alarm run lengths over (w, W_b) at thresholds tuned to a target
    /// missed-detection rate.
    pub fn cpd(&self) -> Result<Value> {
        let c = &self.cfg.bench.cpd;
        let sigma = c.design.sigma;
        let thr = changepoint::calibrate_threshold(c.mdr_alpha)?;
        let base = |w: usize, w_b: f64, glr_thr: f64| DetectorConfig {
            w,
            w_b,
            f_tilde_v: c.design.f_v,
            glr_thr,
            sigma_v: sigma,
        };
        #[derive(Serialize)]
        struct MdrRow {
            w: usize,
            delta_sigma: f64,
            w_b: f64,
            threshold: f64,
            trials: usize,
            mdr: f64,
        }
        let mut mdr_rows = Vec::new();
        let mut cell = 0u64;
        for &w in &c.ws {
            for &d in &c.deltas {
                let mdr = changepoint::estimate_mdr(
                    &base(w, c.mdr_w_b, thr),
                    &c.design,
                    d * sigma,
                    c.mdr_trials,
                    rng::derive_seed(self.seed, CELL_STREAM, cell),
                    self.exec,
                )?;
                cell += 1;
                mdr_rows.push(MdrRow {
                    w,
                    delta_sigma: d,
                    w_b: c.mdr_w_b,
                    threshold: thr,
                    trials: c.mdr_trials,
                    mdr,
                });
            }
        }
        io::write_csv(&self.path("cpd_mdr.csv"), &mdr_rows)?;
        let grid: Vec<Vec<f64>> = mdr_rows.chunks(c.deltas.len()).map(|r| r.iter().map(|x| x.mdr).collect()).collect();
        self.svg(
            "cpd_mdr.svg",
            plot::heatmap(
                "Missed detection rate (rows: w, columns: step / sigma)",
                &c.ws.iter().map(|w| format!("w = {w}")).collect::<Vec<_>>(),
                &c.deltas.iter().map(|d| format!("{d}")).collect::<Vec<_>>(),
                &grid,
            ),
        )?;

        #[derive(Serialize)]
        struct ArlRow {
            w: usize,
            w_b: f64,
            threshold: f64,
            points: usize,
            alarms: usize,
            arl: Option<f64>,
            arl_or_bound: f64,
        }
        let mut arl_rows = Vec::new();
        for &w in &c.ws {
            for &w_b in &c.arl_w_bs {
                let mut det = base(w, w_b, 1.0);
                det.glr_thr = changepoint::threshold_for_mdr(&det, &c.design, c.arl_delta * sigma, c.arl_target_mdr)?;
                let est = changepoint::estimate_arl(
                    &det,
                    &c.design,
                    c.arl_budget,
                    rng::derive_seed(self.seed, CELL_STREAM, cell),
                    self.exec,
                )?;
                cell += 1;
                arl_rows.push(ArlRow {
                    w,
                    w_b,
                    threshold: det.glr_thr,
                    points: est.points,
                    alarms: est.alarms,
                    arl: est.arl,
                    arl_or_bound: est.value_or_bound(),
                });
            }
        }
        io::write_csv(&self.path("cpd_arl.csv"), &arl_rows)?;
        let series: Vec<Series> = c
            .ws
            .iter()
            .map(|&w| {
                Series::line(
                    format!("w = {w}"),
                    arl_rows.iter().filter(|r| r.w == w).map(|r| (r.w_b, r.arl_or_bound)).collect(),
                )
            })
            .collect();
        self.svg(
            "cpd_arl.svg",
            plot::chart(
                &Axes {
                    title: format!("ARL at {} missed detections, step {} sigma", c.arl_target_mdr, c.arl_delta),
                    x_label: "W_b".into(),
                    y_label: "ARL (censored at budget)".into(),
                    log_x: true,
                    log_y: true,
                },
                &series,
            ),
        )?;

        let monotone_w = c.deltas.iter().enumerate().all(|(j, _)| {
            (1..c.ws.len()).all(|i| grid[i][j] <= grid[i - 1][j])
        });
        let monotone_delta = grid.iter().all(|row| row.windows(2).all(|p| p[1] <= p[0]));
        Ok(json!({
            "mdr_threshold": thr,
            "mdr_monotone_in_w": monotone_w,
            "mdr_monotone_in_delta": monotone_delta,
            "arl_cells": arl_rows.len(),
        }))
    }

    /// Naive versus segmented excess RMSE and the survival of absolute
    /// fitting errors.
    pub fn rmse(&self) -> Result<Value> {
        let data = self.dataset()?;
        let cfg = &self.cfg.pipeline;
        let windows: Vec<&TelemetryWindow> = data.dataset.entries.iter().map(|(w, _)| w).collect();
        #[derive(Serialize)]
        struct Row {
            run: usize,
            sigma_hat: f64,
            naive_excess: f64,
            segmented_excess: f64,
        }
        let fits = par::map_indexed(windows.len(), self.exec, |i| -> Result<(Row, Vec<f64>)> {
            let w = windows[i];
            let sigma = pipeline::noise_level(w, cfg)?;
            let (niv, nfit) = estimate::naive_fit(w)?;
            let naive = estimate::excess_rmse(estimate::rmse(w, &niv, &nfit), sigma);
            let cps = pipeline::detect_stage(w, cfg, sigma)?;
            let rep = pipeline::estimate_stage(w, &cps.indices, cfg, sigma)?;
            let resid = if i < self.cfg.bench.survival_windows {
                estimate::residuals(w, &rep.intervals, &rep.fit).iter().map(|r| r.abs()).collect()
            } else {
                Vec::new()
            };
            Ok((
                Row {
                    run: i,
                    sigma_hat: sigma,
                    naive_excess: naive,
                    segmented_excess: rep.excess_rmse,
                },
                resid,
            ))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let rows: Vec<&Row> = fits.iter().map(|f| &f.0).collect();
        io::write_csv(&self.path("rmse_runs.csv"), &rows)?;

        let nb = self.cfg.bench.rmse_bins.max(1);
        let (lo, hi) = (-6.0f64, 0.0f64);
        let bin = |v: f64| -> usize {
            let x = if v > 0.0 { v.log10() } else { lo };
            (((x - lo) / (hi - lo) * nb as f64).floor().max(0.0) as usize).min(nb - 1)
        };
        let edge = |i: usize| 10f64.powf(lo + (hi - lo) * i as f64 / nb as f64);
        let mut h_naive = vec![0usize; nb];
        let mut h_seg = vec![0usize; nb];
        let mut h2 = vec![vec![0usize; nb]; nb];
        for r in &rows {
            let (a, b) = (bin(r.naive_excess), bin(r.segmented_excess));
            h_naive[a] += 1;
            h_seg[b] += 1;
            h2[a][b] += 1;
        }
        #[derive(Serialize)]
        struct HistRow {
            bin_lo: f64,
            bin_hi: f64,
            naive: usize,
            segmented: usize,
        }
        let hist: Vec<HistRow> = (0..nb)
            .map(|i| HistRow {
                bin_lo: edge(i),
                bin_hi: edge(i + 1),
                naive: h_naive[i],
                segmented: h_seg[i],
            })
            .collect();
        io::write_csv(&self.path("rmse_hist.csv"), &hist)?;
        #[derive(Serialize)]
        struct Hist2Row {
            naive_bin_lo: f64,
            segmented_bin_lo: f64,
            count: usize,
        }
        let mut h2_rows = Vec::new();
        for (a, row) in h2.iter().enumerate() {
            for (b, &count) in row.iter().enumerate() {
                if count > 0 {
                    h2_rows.push(Hist2Row {
                        naive_bin_lo: edge(a),
                        segmented_bin_lo: edge(b),
                        count,
                    });
                }
            }
        }
        io::write_csv(&self.path("rmse_2d.csv"), &h2_rows)?;
        let mid = |i: usize| (edge(i) * edge(i + 1)).sqrt();
        self.svg(
            "rmse_hist.svg",
            plot::chart(
                &Axes {
                    title: "Excess RMSE per run".into(),
                    x_label: "excess RMSE".into(),
                    y_label: "runs".into(),
                    log_x: true,
                    log_y: false,
                },
                &[
                    Series::line("single coefficient", (0..nb).map(|i| (mid(i), h_naive[i] as f64)).collect()),
                    Series::line("segmented", (0..nb).map(|i| (mid(i), h_seg[i] as f64)).collect()),
                ],
            ),
        )?;

        let pooled: Vec<f64> = fits.iter().flat_map(|f| f.1.iter().copied()).collect();
        let n_surv = self.cfg.bench.survival_windows.min(rows.len()).max(1);
        let sigma_pool = rows.iter().take(n_surv).map(|r| r.sigma_hat).sum::<f64>() / n_surv as f64;
        let curve = estimate::error_survival(&pooled, sigma_pool, 6.0 * sigma_pool, self.cfg.bench.survival_grid);
        io::write_csv(&self.path("error_survival.csv"), &curve)?;
        self.svg(
            "error_survival.svg",
            plot::chart(
                &Axes {
                    title: "Survival of absolute fitting error".into(),
                    x_label: "|error|".into(),
                    y_label: "P(|error| > x)".into(),
                    log_x: false,
                    log_y: true,
                },
                &[
                    Series::line("empirical", curve.iter().map(|p| (p.x, p.empirical)).collect()),
                    Series::line("gaussian", curve.iter().map(|p| (p.x, p.gaussian)).collect()),
                ],
            ),
        )?;
        let mean_naive = stats::mean(&rows.iter().map(|r| r.naive_excess).collect::<Vec<_>>());
        let mean_seg = stats::mean(&rows.iter().map(|r| r.segmented_excess).collect::<Vec<_>>());
        let max_gap = curve.iter().map(|p| (p.empirical - p.gaussian).abs()).fold(0.0, f64::max);
        Ok(json!({
            "runs": rows.len(),
            "mean_naive_excess": mean_naive,
            "mean_segmented_excess": mean_seg,
            "ratio": mean_seg / mean_naive,
            "survival_max_gap": max_gap,
            "pooled_residuals": pooled.len(),
        }))
    }

    /// Rejections per run and search effort against changepoint count.
    pub fn assign(&self) -> Result<Value> {
        let p = self.processed()?;
        let rows = assign_rows(p);
        io::write_csv(&self.path("iterations.csv"), &rows)?;
        let max_rej = rows.iter().map(|r| r.rejections).max().unwrap_or(0);
        #[derive(Serialize)]
        struct RejRow {
            rejections: usize,
            runs: usize,
            fraction: f64,
            cumulative: f64,
        }
        let n = rows.len().max(1) as f64;
        let mut cum = 0.0;
        let hist: Vec<RejRow> = (0..=max_rej)
            .map(|k| {
                let runs = rows.iter().filter(|r| r.rejections == k).count();
                cum += runs as f64 / n;
                RejRow {
                    rejections: k,
                    runs,
                    fraction: runs as f64 / n,
                    cumulative: cum,
                }
            })
            .collect();
        io::write_csv(&self.path("rejections.csv"), &hist)?;
        let pts = |zero: bool| -> Vec<(f64, f64)> {
            rows.iter()
                .filter(|r| (r.rejections == 0) == zero)
                .map(|r| (r.changepoints as f64, r.iterations as f64))
                .collect()
        };
        self.svg(
            "iterations.svg",
            plot::chart(
                &Axes {
                    title: "Assignment search effort".into(),
                    x_label: "changepoints".into(),
                    y_label: "expanded states".into(),
                    log_x: false,
                    log_y: true,
                },
                &[Series::points("no rejection", pts(true)), Series::points("with rejections", pts(false))],
            ),
        )?;
        let at_most_3 = rows.iter().filter(|r| r.rejections <= 3).count() as f64 / n;
        Ok(json!({
            "runs": rows.len(),
            "failures": p.failures.len(),
            "inexact": rows.iter().filter(|r| !r.exact).count(),
            "fraction_at_most_3_rejections": at_most_3,
            "mean_iterations": rows.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
            "mean_changepoints": rows.iter().map(|r| r.changepoints as f64).sum::<f64>() / n,
        }))
    }

    /// Detection matrix over repeated train/validation splits.
    pub fn accuracy(&self) -> Result<Value> {
        let p = self.processed()?;
        let b = &self.cfg.bench;
        let report = classify::evaluate(p, &self.cfg.pipeline.train, b.train_fraction, b.n_repeats, self.seed, self.exec)?;
        io::write_json(&self.path("accuracy.json"), &report)?;
        for (name, m) in [("mean", &report.mean), ("min", &report.min), ("max", &report.max)] {
            write_matrix(&self.path(&format!("accuracy_{name}.csv")), &report.classes, &report.detectors, m)?;
        }
        self.svg(
            "accuracy.svg",
            plot::heatmap(
                "Mean detection probability (rows: true class, columns: detector)",
                &report.classes,
                &report.detectors,
                &report.mean,
            ),
        )?;
        let detection: Map<String, Value> = report
            .detectors
            .iter()
            .enumerate()
            .map(|(a, name)| (name.clone(), json!(report.detection(a))))
            .collect();
        Ok(json!({
            "detection": detection,
            "worst_cross_detection": report.worst_cross_detection(),
        }))
    }

    /// Train and validation loss of the FSS classifiers against the number
    /// of histogram bins.
    pub fn bins(&self) -> Result<Value> {
        let p = self.processed()?;
        let rows = bin_sweep(p, self.cfg, self.seed, self.exec)?;
        io::write_csv(&self.path("bins.csv"), &rows)?;
        let n_fss = p.n_fss();
        let mut series = Vec::new();
        for s in 0..n_fss {
            let pick = |f: fn(&BinRow) -> f64| -> Vec<(f64, f64)> {
                rows.iter().filter(|r| r.fss == s + 1).map(|r| (r.n_bins as f64, f(r))).collect()
            };
            series.push(Series::line(format!("FSS {} train", s + 1), pick(|r| r.train_loss)));
            series.push(Series::line(format!("FSS {} validation", s + 1), pick(|r| r.val_loss)));
        }
        self.svg(
            "bins.svg",
            plot::chart(
                &Axes {
                    title: "Hinge loss against histogram bins".into(),
                    x_label: "bins".into(),
                    y_label: "mean hinge loss".into(),
                    log_x: true,
                    log_y: false,
                },
                &series,
            ),
        )?;
        Ok(json!({ "rows": rows.len() }))
    }

    /// Single-threaded wall time per stage on full-length windows.
    pub fn timing(&self) -> Result<Value> {
        let p = self.processed()?;
        let all: Vec<&ProcessedEntry> = p.entries.iter().collect();
        let models = classify::train_classifiers(&all, &self.cfg.pipeline.train, self.seed)?;
        let sc = &self.cfg.scenario;
        let labels = sc.counts.labels();
        #[derive(Serialize)]
        struct Row {
            run: usize,
            points: usize,
            changepoints: usize,
            changepoint_ms: f64,
            estimation_ms: f64,
            assignment_ms: f64,
            classification_ms: f64,
            total_ms: f64,
            wall_ms: f64,
        }
        let mut rows = Vec::new();
        for i in 0..self.cfg.bench.timing_runs {
            let label = &labels[i % labels.len()];
            let (w, _) = simulate::simulate_run(
                &sc.model,
                &sc.effects,
                label,
                sc.n_steps,
                &sc.spin_profile,
                rng::derive_seed(self.seed, TIMING_STREAM, i as u64),
            )?;
            let t = Instant::now();
            let rep = pipeline::diagnose(&w, &self.cfg.pipeline, &models)?;
            let wall = t.elapsed().as_secs_f64() * 1e3;
            rows.push(Row {
                run: i,
                points: w.len(),
                changepoints: rep.fit.changepoints.len(),
                changepoint_ms: rep.timings.changepoint_ms,
                estimation_ms: rep.timings.estimation_ms,
                assignment_ms: rep.timings.assignment_ms,
                classification_ms: rep.timings.classification_ms,
                total_ms: rep.timings.total_ms(),
                wall_ms: wall,
            });
        }
        io::write_csv(&self.path("timing.csv"), &rows)?;
        let n = rows.len().max(1) as f64;
        let mean = |f: fn(&Row) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let summary = json!({
            "runs": rows.len(),
            "mean_changepoint_ms": mean(|r| r.changepoint_ms),
            "mean_estimation_ms": mean(|r| r.estimation_ms),
            "mean_assignment_ms": mean(|r| r.assignment_ms),
            "mean_classification_ms": mean(|r| r.classification_ms),
            "mean_total_ms": mean(|r| r.total_ms),
            "max_wall_ms": rows.iter().map(|r| r.wall_ms).fold(0.0, f64::max),
        });
        io::write_json(&self.path("timing_summary.json"), &summary)?;
        Ok(summary)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AssignRow {
    pub run: usize,
    pub changepoints: usize,
    pub rejections: usize,
    pub iterations: usize,
    pub exact: bool,
}

pub fn assign_rows(p: &ProcessedDataset) -> Vec<AssignRow> {
    p.entries
        .iter()
        .enumerate()
        .map(|(run, e)| AssignRow {
            run,
            changepoints: e.n_changepoints,
            rejections: e.rejections,
            iterations: e.iterations,
            exact: e.exact,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BinRow {
    pub n_bins: usize,
    pub fss: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_error: f64,
    pub val_error: f64,
}

/// FSS classifier losses for every bin count, averaged over random splits.
pub fn bin_sweep(p: &ProcessedDataset, cfg: &Config, seed: u64, exec: Execution) -> Result<Vec<BinRow>> {
    let b = &cfg.bench;
    let n_fss = p.n_fss();
    let splits = (0..b.bin_repeats)
        .map(|r| classify::split(p.entries.len(), b.train_fraction, &p.entries, rng::derive_seed(seed, 0x4249, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize)> = b.bin_sweep.iter().flat_map(|&n| (0..n_fss).map(move |s| (n, s))).collect();
    par::map_slice(&cells, exec, |&(n_bins, s)| -> Result<BinRow> {
        let mut tc = cfg.pipeline.train.clone();
        tc.n_bins = n_bins;
        let mut acc = [0.0; 4];
        for (r, (train, val)) in splits.iter().enumerate() {
            let tr: Vec<&ProcessedEntry> = train.iter().map(|&i| &p.entries[i]).collect();
            let va: Vec<&ProcessedEntry> = val.iter().map(|&i| &p.entries[i]).collect();
            let c = classify::train_fss(&tr, s, &tc, rng::derive_seed(seed, 0x4249, r as u64))?;
            let (xt, yt) = classify::fss_training_set(&tr, s, &c.histogram);
            let (xv, yv) = classify::fss_training_set(&va, s, &c.histogram);
            acc[0] += classify::mean_hinge(&c.model, &xt, &yt);
            acc[1] += classify::mean_hinge(&c.model, &xv, &yv);
            acc[2] += classify::error_rate(&c.model, &xt, &yt);
            acc[3] += classify::error_rate(&c.model, &xv, &yv);
        }
        let k = splits.len().max(1) as f64;
        Ok(BinRow {
            n_bins,
            fss: s + 1,
            train_loss: acc[0] / k,
            val_loss: acc[1] / k,
            train_error: acc[2] / k,
            val_error: acc[3] / k,
        })
    })
    .into_iter()
    .collect()
}

pub fn write_matrix(path: &Path, rows: &[String], cols: &[String], m: &[Vec<f64>]) -> Result<()> {
    let mut out = String::from("class");
    for c in cols {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (r, row) in rows.iter().zip(m) {
        out.push_str(r);
        for v in row {
            out.push(',');
            if v.is_finite() {
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Runs a suite (or all of them) and writes `summary.json` with the
/// deterministic part of the results.
pub fn run_benchmarks(suite: Suite, cfg: &Config, seed: u64, out: &Path, exec: Execution) -> Result<Value> {
    let bench = Bench::new(cfg, seed, exec, out)?;
    let summary = bench.run(suite)?;
    let mut det = summary.clone();
    if let Value::Object(m) = &mut det {
        if suite == Suite::All {
            m.remove(Suite::Timing.name());
        }
    }
    if suite != Suite::Timing {
        io::write_json(&out.join("summary.json"), &json!({ "suite": suite.name(), "seed": seed, "results": det }))?;
    }
    Ok(summary)
}
