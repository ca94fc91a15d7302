//! Synthetic telemetry from the switching friction model, anomaly injection,
//! and friction estimation from raw motor telemetry.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_fss_spec, AnomalyStatus, FrictionSupport, FssSpec, LabeledDataset, RawTelemetry,
    RwaModel, TelemetryWindow,
};
use crate::par::{self, Execution};
use crate::rng::{self, Rng};

/// Hidden state of one switching system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FssState {
    pub q: usize,
    pub f: f64,
    pub tau: usize,
}

fn draw_friction(support: &FrictionSupport, rng: &mut Rng) -> f64 {
    if support.hi > support.lo {
        rng.random_range(support.lo..=support.hi)
    } else {
        support.lo
    }
}

fn draw_next_config(spec: &FssSpec, q: usize, rng: &mut Rng) -> usize {
    let row = &spec.transition[q - 1];
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = q;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i + 1;
            if u < acc {
                return i + 1;
            }
        }
    }
    last
}

/// Initial state: configuration uniform over all configurations, friction
/// drawn from its support, dwell time zero.
pub fn initial_state(spec: &FssSpec, rng: &mut Rng) -> FssState {
    let q = rng.random_range(1..=spec.q_max);
    FssState {
        q,
        f: draw_friction(&spec.friction[q - 1], rng),
        tau: 0,
    }
}

/// One step of the switching dynamics.
pub fn step_fss(state: &FssState, spec: &FssSpec, rng: &mut Rng) -> FssState {
    let h = spec.hazard.prob(state.q, state.tau);
    let jump = h >= 1.0 || (h > 0.0 && rng.random::<f64>() < h);
    if jump {
        let q = draw_next_config(spec, state.q, rng);
        FssState {
            q,
            f: draw_friction(&spec.friction[q - 1], rng),
            tau: 0,
        }
    } else {
        FssState {
            tau: state.tau + 1,
            ..*state
        }
    }
}

/// Spin-rate profile over a window, in normalized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpinProfile {
    Constant { omega: f64 },
    /// Linear interpolation between knots `[position, omega]`, where position
    /// is the fraction of the window in [0, 1].
    PiecewiseLinear { knots: Vec<[f64; 2]> },
    /// Triangle wave between `lo` and `hi` with the given period in steps,
    /// starting at `lo` shifted by `phase` (fraction of a period).
    Sweep {
        lo: f64,
        hi: f64,
        period: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Default for SpinProfile {
    /// Slow sweep 0.5 -> 1.5 -> 0.5 over the window.
    fn default() -> Self {
        SpinProfile::PiecewiseLinear {
            knots: vec![[0.0, 0.5], [0.5, 1.5], [1.0, 0.5]],
        }
    }
}

impl SpinProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpinProfile(m.to_string()));
        match self {
            SpinProfile::Constant { omega } if !omega.is_finite() => bad("non-finite omega"),
            SpinProfile::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("no knots");
                }
                if knots.iter().any(|k| !k[0].is_finite() || !k[1].is_finite()) {
                    return bad("non-finite knot");
                }
                if knots.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return bad("knot positions must be strictly increasing");
                }
                Ok(())
            }
            SpinProfile::Sweep {
                lo,
                hi,
                period,
                phase,
            } => {
                if !(lo.is_finite() && hi.is_finite() && phase.is_finite()) {
                    return bad("non-finite sweep parameter");
                }
                if !(*period >= 2.0) {
                    return bad("sweep period must be at least 2 steps");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Spin rate at step `k` of an `n`-step window.
    pub fn omega_at(&self, k: usize, n: usize) -> f64 {
        match self {
            SpinProfile::Constant { omega } => *omega,
            SpinProfile::PiecewiseLinear { knots } => {
                let x = if n > 1 {
                    k as f64 / (n - 1) as f64
                } else {
                    0.0
                };
                if x <= knots[0][0] {
                    return knots[0][1];
                }
                for w in knots.windows(2) {
                    if x <= w[1][0] {
                        let t = (x - w[0][0]) / (w[1][0] - w[0][0]);
                        return w[0][1] + t * (w[1][1] - w[0][1]);
                    }
                }
                knots[knots.len() - 1][1]
            }
            SpinProfile::Sweep {
                lo,
                hi,
                period,
                phase,
            } => {
                let p = (k as f64 / period + phase).rem_euclid(1.0);
                let tri = if p < 0.5 { 2.0 * p } else { 2.0 - 2.0 * p };
                lo + (hi - lo) * tri
            }
        }
    }

    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.omega_at(k, n)).collect()
    }
}

/// How each anomaly alters the model when its flag is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEffect {
    pub dry_shift: f64,
    pub viscous_shift: f64,
    /// Replacement friction supports per FSS (`None` keeps the nominal ones).
    pub fss_dist_override: Vec<Option<Vec<FrictionSupport>>>,
}

impl AnomalyEffect {
    /// Anomaly magnitudes used by the default synthetic scenario.
    pub fn reference() -> Self {
        AnomalyEffect {
            dry_shift: 4.0,
            viscous_shift: 0.1,
            fss_dist_override: vec![
                Some(vec![
                    FrictionSupport::new(0.0, 0.1),
                    FrictionSupport::new(0.6, 0.7),
                ]),
                Some(vec![
                    FrictionSupport::new(0.0, 0.4),
                    FrictionSupport::new(1.5, 1.9),
                    FrictionSupport::new(3.0, 3.4),
                ]),
            ],
        }
    }

    pub fn none(n_fss: usize) -> Self {
        AnomalyEffect {
            dry_shift: 0.0,
            viscous_shift: 0.0,
            fss_dist_override: vec![None; n_fss],
        }
    }

    /// The model with every active anomaly applied.
    pub fn apply(&self, model: &RwaModel, status: &AnomalyStatus) -> Result<RwaModel> {
        if status.theta_s.len() != model.n_fss() {
            return Err(Error::DimensionMismatch {
                expected: model.n_fss(),
                got: status.theta_s.len(),
            });
        }
        let mut m = model.clone();
        if status.theta_d {
            m.f_bar_d += self.dry_shift;
        }
        if status.theta_v {
            m.f_v += self.viscous_shift;
        }
        for (s, spec) in m.fss.iter_mut().enumerate() {
            if !status.theta_s[s] {
                continue;
            }
            if let Some(Some(sup)) = self.fss_dist_override.get(s) {
                spec.friction = sup.clone();
                let v = validate_fss_spec(spec);
                if !v.is_empty() {
                    return Err(Error::InvalidModel(v));
                }
            }
        }
        Ok(m)
    }
}

/// A switching-system jump recorded by the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueChangepoint {
    /// First step at which the new friction value applies.
    pub step: usize,
    /// 1-based index of the switching system.
    pub fss: usize,
    pub old_q: usize,
    pub new_q: usize,
    pub old_f: f64,
    pub new_f: f64,
}

/// Run-length encoded per-FSS trajectory piece: `(q, f)` holds from `start`
/// until the next segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub q: usize,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub n_steps: usize,
    /// Ordered by step, then by FSS index for simultaneous jumps.
    pub changepoints: Vec<TrueChangepoint>,
    pub per_fss: Vec<Vec<Segment>>,
    pub base_dry: f64,
    pub viscous: f64,
    pub sigma_v: f64,
}

impl GroundTruth {
    /// Contribution of FSS `s` (0-based) at step `k`.
    pub fn fss_value(&self, s: usize, k: usize) -> (usize, f64) {
        let segs = &self.per_fss[s];
        let i = segs.partition_point(|seg| seg.start <= k) - 1;
        (segs[i].q, segs[i].f)
    }

    /// Total dry coefficient at every step.
    pub fn dry_profile(&self) -> Vec<f64> {
        let mut out = vec![self.base_dry; self.n_steps];
        for segs in &self.per_fss {
            for (i, seg) in segs.iter().enumerate() {
                let end = segs.get(i + 1).map_or(self.n_steps, |n| n.start);
                for v in &mut out[seg.start..end] {
                    *v += seg.f;
                }
            }
        }
        out
    }

    /// Distinct steps at which the total dry coefficient changes.
    pub fn change_steps(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.changepoints.iter().map(|c| c.step).collect();
        v.dedup();
        v
    }
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Simulates one window: switching systems, friction model and noise.
pub fn simulate_run(
    model: &RwaModel,
    effects: &AnomalyEffect,
    status: &AnomalyStatus,
    n_steps: usize,
    profile: &SpinProfile,
    seed: u64,
) -> Result<(TelemetryWindow, GroundTruth)> {
    if n_steps < 2 {
        return Err(Error::WindowTooShort {
            len: n_steps,
            needed: 2,
        });
    }
    profile.validate()?;
    let m = effects.apply(model, status)?;
    m.validate()?;

    let mut rng = rng::seeded(seed);
    let mut states: Vec<FssState> = m.fss.iter().map(|s| initial_state(s, &mut rng)).collect();
    let mut per_fss: Vec<Vec<Segment>> = states
        .iter()
        .map(|st| {
            vec![Segment {
                start: 0,
                q: st.q,
                f: st.f,
            }]
        })
        .collect();
    let mut changepoints = Vec::new();
    let mut omega = Vec::with_capacity(n_steps);
    let mut f_hat = Vec::with_capacity(n_steps);

    for k in 0..n_steps {
        if k > 0 {
            for (s, spec) in m.fss.iter().enumerate() {
                let next = step_fss(&states[s], spec, &mut rng);
                if next.tau == 0 {
                    changepoints.push(TrueChangepoint {
                        step: k,
                        fss: s + 1,
                        old_q: states[s].q,
                        new_q: next.q,
                        old_f: states[s].f,
                        new_f: next.f,
                    });
                    per_fss[s].push(Segment {
                        start: k,
                        q: next.q,
                        f: next.f,
                    });
                }
                states[s] = next;
            }
        }
        let w = profile.omega_at(k, n_steps);
        let dry: f64 = m.f_bar_d + states.iter().map(|s| s.f).sum::<f64>();
        let noise: f64 = rng.sample(StandardNormal);
        omega.push(w);
        f_hat.push(dry * sign(w) + m.f_v * w + m.sigma_v * noise);
    }

    let truth = GroundTruth {
        n_steps,
        changepoints,
        per_fss,
        base_dry: m.f_bar_d,
        viscous: m.f_v,
        sigma_v: m.sigma_v,
    };
    Ok((TelemetryWindow::new(omega, f_hat)?, truth))
}

/// Central-difference friction estimate from raw motor telemetry; the two
/// endpoints are dropped.
pub fn friction_from_raw(raw: &RawTelemetry) -> Result<TelemetryWindow> {
    raw.validate()?;
    let n = raw.t.len();
    if n < 4 {
        return Err(Error::WindowTooShort { len: n, needed: 4 });
    }
    let (omega, f_hat) = (1..n - 1)
        .map(|k| {
            let d = (raw.omega[k + 1] - raw.omega[k - 1]) / (raw.t[k + 1] - raw.t[k - 1]);
            (
                raw.omega[k],
                raw.inertia * d - raw.torque_constant * raw.current[k],
            )
        })
        .unzip();
    TelemetryWindow::new(omega, f_hat)
}

/// Number of windows per label class; at most one anomaly is active per
/// window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub nominal: usize,
    pub dry: usize,
    pub viscous: usize,
    pub fss: Vec<usize>,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.nominal + self.dry + self.viscous + self.fss.iter().sum::<usize>()
    }

    /// Labels in dataset order: nominal, dry, viscous, then each FSS.
    pub fn labels(&self) -> Vec<AnomalyStatus> {
        let n_fss = self.fss.len();
        let mut out = Vec::with_capacity(self.total());
        out.extend((0..self.nominal).map(|_| AnomalyStatus::nominal(n_fss)));
        out.extend((0..self.dry).map(|_| AnomalyStatus::single(n_fss, 0)));
        out.extend((0..self.viscous).map(|_| AnomalyStatus::single(n_fss, 1)));
        for (s, &c) in self.fss.iter().enumerate() {
            out.extend((0..c).map(|_| AnomalyStatus::single(n_fss, 2 + s)));
        }
        out
    }
}

/// Everything needed to generate a labeled synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub model: RwaModel,
    pub effects: AnomalyEffect,
    pub counts: ClassCounts,
    pub n_steps: usize,
    #[serde(default)]
    pub spin_profile: SpinProfile,
}

impl Scenario {
    /// Switching systems of the reference model, 500 windows of 80000
    /// steps: 300 nominal and 50 per anomaly.
    pub fn reference() -> Self {
        let model = crate::model::reference::model();
        let n_fss = model.n_fss();
        Scenario {
            model,
            effects: AnomalyEffect::reference(),
            counts: ClassCounts {
                nominal: 100,
                dry: 100,
                viscous: 100,
                fss: vec![100; n_fss],
            },
            n_steps: 80_000,
            spin_profile: SpinProfile::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.spin_profile.validate()?;
        if self.counts.fss.len() != self.model.n_fss() {
            return Err(Error::DimensionMismatch {
                expected: self.model.n_fss(),
                got: self.counts.fss.len(),
            });
        }
        if self.effects.fss_dist_override.len() != self.model.n_fss() {
            return Err(Error::DimensionMismatch {
                expected: self.model.n_fss(),
                got: self.effects.fss_dist_override.len(),
            });
        }
        if self.counts.total() == 0 {
            return Err(Error::InvalidConfig("scenario requests no windows".into()));
        }
        Ok(())
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::reference()
    }
}

/// Labeled dataset plus the simulator's ground truth for each window.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub dataset: LabeledDataset,
    pub truth: Vec<GroundTruth>,
}

const DATASET_STREAM: u64 = 0x5157;

pub fn make_dataset(scenario: &Scenario, seed: u64, exec: Execution) -> Result<SimulatedDataset> {
    scenario.validate()?;
    let labels = scenario.counts.labels();
    let runs = par::map_indexed(labels.len(), exec, |i| {
        simulate_run(
            &scenario.model,
            &scenario.effects,
            &labels[i],
            scenario.n_steps,
            &scenario.spin_profile,
            rng::derive_seed(seed, DATASET_STREAM, i as u64),
        )
    });
    let mut entries = Vec::with_capacity(labels.len());
    let mut truth = Vec::with_capacity(labels.len());
    for (r, label) in runs.into_iter().zip(labels) {
        let (w, t) = r?;
        entries.push((w, label));
        truth.push(t);
    }
    Ok(SimulatedDataset {
        dataset: LabeledDataset::new(entries)?,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference, Hazard};
    use approx::assert_relative_eq;

    fn frozen(mut spec: FssSpec) -> FssSpec {
        spec.hazard = Hazard::Constant(vec![0.0; spec.q_max]);
        spec
    }

    #[test]
    fn zero_hazard_never_jumps() {
        let spec = frozen(reference::long_term());
        let mut rng = rng::seeded(1);
        let mut st = FssState {
            q: 2,
            f: 0.7,
            tau: 5,
        };
        for i in 0..1000 {
            st = step_fss(&st, &spec, &mut rng);
            assert_eq!((st.q, st.f, st.tau), (2, 0.7, 6 + i));
        }
    }

    #[test]
    fn certain_jump_at_horizon() {
        let spec = reference::short_term();
        let mut rng = rng::seeded(2);
        for _ in 0..100 {
            let st = step_fss(
                &FssState {
                    q: 1,
                    f: 0.05,
                    tau: 199,
                },
                &spec,
                &mut rng,
            );
            assert_eq!((st.q, st.tau), (2, 0));
            assert!((0.3..=0.4).contains(&st.f));
        }
    }

    #[test]
    fn residence_time_matches_hazard() {
        let spec = reference::short_term();
        // Mean residence from the survival function: sum over tau of
        // P(no jump during the first tau steps).
        let mut surv = 1.0;
        let mut analytic = 0.0;
        for tau in 0..10_000 {
            analytic += surv;
            surv *= 1.0 - spec.hazard.prob(1, tau);
            if surv == 0.0 {
                break;
            }
        }
        let mut rng = rng::seeded(3);
        let n = 100_000;
        let mut total = 0usize;
        for _ in 0..n {
            let mut st = FssState {
                q: 1,
                f: 0.0,
                tau: 0,
            };
            let mut steps = 1;
            loop {
                st = step_fss(&st, &spec, &mut rng);
                if st.tau == 0 {
                    break;
                }
                steps += 1;
            }
            total += steps;
        }
        let emp = total as f64 / n as f64;
        // Residence is uniform on 1..=200: sd about 58, standard error 0.18.
        assert!((emp - analytic).abs() < 1.0, "{emp} vs {analytic}");
        assert_relative_eq!(analytic, 100.5, max_relative = 1e-9);
    }

    fn still_model() -> RwaModel {
        let mut m = reference::model();
        m.fss = m.fss.into_iter().map(frozen).collect();
        m
    }

    #[test]
    fn noiseless_constant_spin() {
        let mut m = still_model();
        m.sigma_v = 1e-300;
        let st = AnomalyStatus::nominal(2);
        let profile = SpinProfile::Constant { omega: 1.0 };
        let (w, t) = simulate_run(&m, &AnomalyEffect::none(2), &st, 500, &profile, 4).unwrap();
        let extra: f64 = t.per_fss.iter().map(|s| s[0].f).sum();
        for &f in w.f_hat() {
            assert_relative_eq!(f, 2.0 + extra, max_relative = 1e-12);
        }
        assert!(t.changepoints.is_empty());
    }

    #[test]
    fn dry_shift_raises_average() {
        let mut m = still_model();
        m.sigma_v = 1e-300;
        let mut eff = AnomalyEffect::none(2);
        eff.dry_shift = 0.2;
        let profile = SpinProfile::default();
        let avg = |status: &AnomalyStatus| {
            let (w, t) = simulate_run(&m, &eff, status, 100_000, &profile, 5).unwrap();
            let fss: f64 = t.per_fss.iter().map(|s| s[0].f).sum();
            let mean = w
                .omega()
                .iter()
                .zip(w.f_hat())
                .map(|(o, f)| (f - m.f_v * o) * sign(*o))
                .sum::<f64>()
                / w.len() as f64;
            mean - fss
        };
        let nominal = avg(&AnomalyStatus::nominal(2));
        let shifted = avg(&AnomalyStatus::single(2, 0));
        assert_relative_eq!(shifted - nominal, 0.2, max_relative = 1e-9);
    }

    #[test]
    fn noise_calibration() {
        let m = still_model();
        let profile = SpinProfile::default();
        let (w, t) =
            simulate_run(&m, &AnomalyEffect::none(2), &AnomalyStatus::nominal(2), 100_000, &profile, 6)
                .unwrap();
        let dry = t.dry_profile();
        let r: Vec<f64> = (0..w.len())
            .map(|k| w.f_hat()[k] - dry[k] - m.f_v * w.omega()[k])
            .collect();
        let var = crate::stats::std_dev(&r).powi(2);
        assert!((var / (m.sigma_v * m.sigma_v) - 1.0).abs() < 0.05);
    }

    #[test]
    fn ground_truth_is_consistent() {
        let m = reference::model();
        let eff = AnomalyEffect::reference();
        for (i, status) in [AnomalyStatus::nominal(2), AnomalyStatus::single(2, 2)]
            .iter()
            .enumerate()
        {
            let (_, t) =
                simulate_run(&m, &eff, status, 80_000, &SpinProfile::default(), 10 + i as u64)
                    .unwrap();
            let applied = eff.apply(&m, status).unwrap();
            assert!(!t.changepoints.is_empty());
            for w in t.changepoints.windows(2) {
                assert!((w[0].step, w[0].fss) < (w[1].step, w[1].fss));
            }
            for c in &t.changepoints {
                assert_eq!(c.old_q.abs_diff(c.new_q), 1);
                assert_eq!(
                    (c.new_f - c.old_f).signum(),
                    (c.new_q as f64 - c.old_q as f64).signum()
                );
            }
            for (s, segs) in t.per_fss.iter().enumerate() {
                for seg in segs {
                    assert!(applied.fss[s].friction[seg.q - 1].contains(seg.f));
                }
            }
        }
    }

    #[test]
    fn raw_friction_estimate() {
        let n = 50;
        let dt = 0.1;
        let a = 0.3;
        let raw = RawTelemetry {
            t: (0..n).map(|k| k as f64 * dt).collect(),
            omega: (0..n).map(|k| k as f64 * dt * a).collect(),
            current: vec![0.0; n],
            voltage: vec![0.0; n],
            inertia: 2.0,
            torque_constant: 0.5,
        };
        let w = friction_from_raw(&raw).unwrap();
        assert_eq!(w.len(), n - 2);
        for &f in w.f_hat() {
            assert_relative_eq!(f, 2.0 * a, max_relative = 1e-9);
        }
        let mut bad = raw.clone();
        bad.t[10] = bad.t[9];
        assert!(matches!(
            friction_from_raw(&bad),
            Err(Error::NonIncreasingTimestamps(10))
        ));
    }

    #[test]
    fn raw_estimate_recovers_injected_friction() {
        // Integrate J w' = K_T I + f with a fine Euler-free exact scheme:
        // omega is chosen analytically, the current is solved for.
        let (j, kt) = (1.5, 0.8);
        let dt = 1e-3;
        let n = 2000;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let omega: Vec<f64> = t.iter().map(|&x| 1.0 + 0.5 * (3.0 * x).sin()).collect();
        let f_true = |x: f64| 0.2 + 0.1 * x;
        let current: Vec<f64> = t
            .iter()
            .map(|&x| (j * 1.5 * (3.0 * x).cos() - f_true(x)) / kt)
            .collect();
        let raw = RawTelemetry {
            t: t.clone(),
            omega,
            current,
            voltage: vec![0.0; n],
            inertia: j,
            torque_constant: kt,
        };
        let w = friction_from_raw(&raw).unwrap();
        for (k, &f) in w.f_hat().iter().enumerate() {
            // Central difference truncation: J * omega''' dt^2 / 6.
            assert!((f - f_true(t[k + 1])).abs() < j * 13.5 * dt * dt / 6.0 * 1.01);
        }
    }

    #[test]
    fn dataset_counts_and_determinism() {
        let mut sc = Scenario::reference();
        sc.n_steps = 2000;
        sc.counts = ClassCounts {
            nominal: 4,
            dry: 1,
            viscous: 1,
            fss: vec![1, 1],
        };
        let a = make_dataset(&sc, 9, Execution::Parallel).unwrap();
        let b = make_dataset(&sc, 9, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dataset.len(), 8);
        let classes: Vec<usize> = a
            .dataset
            .entries
            .iter()
            .map(|(_, s)| s.class().unwrap())
            .collect();
        assert_eq!(classes, vec![0, 0, 0, 0, 1, 2, 3, 4]);
    }
}
