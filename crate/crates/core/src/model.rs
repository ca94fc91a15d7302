//! Domain types: telemetry windows, friction switching systems, the wheel
//! friction model and anomaly labels.
//!
//! Configurations are indexed from 1 to `q_max` in every public API.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A window of (spin rate, estimated friction torque) pairs in normalized
/// units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub struct TelemetryWindow {
    omega: Vec<f64>,
    f_hat: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WindowRepr {
    omega: Vec<f64>,
    f_hat: Vec<f64>,
}

impl TryFrom<WindowRepr> for TelemetryWindow {
    type Error = Error;
    fn try_from(r: WindowRepr) -> Result<Self> {
        TelemetryWindow::new(r.omega, r.f_hat)
    }
}

impl From<TelemetryWindow> for WindowRepr {
    fn from(w: TelemetryWindow) -> Self {
        WindowRepr {
            omega: w.omega,
            f_hat: w.f_hat,
        }
    }
}

impl TelemetryWindow {
    pub fn new(omega: Vec<f64>, f_hat: Vec<f64>) -> Result<Self> {
        if omega.len() != f_hat.len() {
            return Err(Error::InvalidTelemetry(format!(
                "omega has {} values but f_hat has {}",
                omega.len(),
                f_hat.len()
            )));
        }
        if omega.len() < 2 {
            return Err(Error::InvalidTelemetry(format!(
                "need at least 2 samples, got {}",
                omega.len()
            )));
        }
        if let Some(k) = omega
            .iter()
            .zip(&f_hat)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(Error::InvalidTelemetry(format!("non-finite value at index {k}")));
        }
        Ok(TelemetryWindow { omega, f_hat })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn f_hat(&self) -> &[f64] {
        &self.f_hat
    }
}

/// Raw motor telemetry from which friction is estimated by central
/// differences.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTelemetry {
    pub t: Vec<f64>,
    pub omega: Vec<f64>,
    pub current: Vec<f64>,
    /// Carried along with the measurements; the estimator does not use it.
    pub voltage: Vec<f64>,
    pub inertia: f64,
    pub torque_constant: f64,
}

impl RawTelemetry {
    pub fn validate(&self) -> Result<()> {
        let n = self.t.len();
        if self.omega.len() != n || self.current.len() != n || self.voltage.len() != n {
            return Err(Error::InvalidTelemetry(
                "raw telemetry columns have different lengths".into(),
            ));
        }
        if !(self.inertia > 0.0) || !(self.torque_constant > 0.0) {
            return Err(Error::InvalidTelemetry(
                "inertia and torque constant must be positive".into(),
            ));
        }
        if let Some(k) = self.t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonIncreasingTimestamps(k + 1));
        }
        Ok(())
    }
}

/// Closed-form countdown hazard: zero before `onset`, then `1 / (horizon - tau)`,
/// reaching (and staying at) 1 once `horizon - tau <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Countdown {
    pub horizon: f64,
    #[serde(default)]
    pub onset: usize,
}

impl Countdown {
    fn prob(&self, tau: usize) -> f64 {
        if tau < self.onset {
            return 0.0;
        }
        let d = self.horizon - tau as f64;
        if d <= 1.0 {
            1.0
        } else {
            1.0 / d
        }
    }

    fn saturation(&self) -> usize {
        let edge = (self.horizon - 1.0).ceil().max(0.0) as usize;
        edge.max(self.onset)
    }
}

/// Per-step jump probability as a function of configuration and dwell time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "configs", rename_all = "snake_case")]
pub enum Hazard {
    /// One row per configuration; row `[tau]` for `tau < len`, clamped to the
    /// last entry beyond.
    Table(Vec<Vec<f64>>),
    /// Memoryless: one probability per configuration.
    Constant(Vec<f64>),
    Countdown(Vec<Countdown>),
}

impl Hazard {
    pub fn n_configs(&self) -> usize {
        match self {
            Hazard::Table(t) => t.len(),
            Hazard::Constant(c) => c.len(),
            Hazard::Countdown(c) => c.len(),
        }
    }

    /// Jump probability for configuration `q` (1-based) after `tau` steps.
    pub fn prob(&self, q: usize, tau: usize) -> f64 {
        match self {
            Hazard::Table(t) => {
                let row = &t[q - 1];
                row[tau.min(row.len() - 1)]
            }
            Hazard::Constant(c) => c[q - 1],
            Hazard::Countdown(c) => c[q - 1].prob(tau),
        }
    }

    /// Smallest dwell time from which the hazard of configuration `q` stays
    /// constant.
    pub fn saturation(&self, q: usize) -> usize {
        match self {
            Hazard::Table(t) => t[q - 1].len().saturating_sub(1),
            Hazard::Constant(_) => 0,
            Hazard::Countdown(c) => c[q - 1].saturation(),
        }
    }
}

/// Closed interval of friction values produced by one configuration; values
/// are drawn uniformly from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct FrictionSupport {
    pub lo: f64,
    pub hi: f64,
}

impl FrictionSupport {
    pub fn new(lo: f64, hi: f64) -> Self {
        FrictionSupport { lo, hi }
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo && f <= self.hi
    }

    pub fn shifted(&self, by: f64) -> Self {
        FrictionSupport::new(self.lo + by, self.hi + by)
    }
}

impl From<[f64; 2]> for FrictionSupport {
    fn from(v: [f64; 2]) -> Self {
        FrictionSupport::new(v[0], v[1])
    }
}

impl From<FrictionSupport> for [f64; 2] {
    fn from(s: FrictionSupport) -> Self {
        [s.lo, s.hi]
    }
}

/// One friction switching system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssSpec {
    #[serde(default)]
    pub name: String,
    pub q_max: usize,
    pub hazard: Hazard,
    /// `transition[q - 1][q2 - 1]` is the probability of moving from `q` to
    /// `q2` when a jump happens.
    pub transition: Vec<Vec<f64>>,
    pub friction: Vec<FrictionSupport>,
}

impl FssSpec {
    pub fn transition_prob(&self, from: usize, to: usize) -> f64 {
        if to == 0 || to > self.q_max {
            return 0.0;
        }
        self.transition[from - 1][to - 1]
    }

    /// Dwell time beyond which every configuration's hazard is constant.
    pub fn tau_cap(&self) -> usize {
        (1..=self.q_max)
            .map(|q| self.hazard.saturation(q))
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let v = validate_fss_spec(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(v))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewConfigurations(usize),
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    NonAdjacentTransition { from: usize, to: usize, p: f64 },
    SelfTransition { q: usize, p: f64 },
    InvalidProbability { what: &'static str, q: usize, index: usize, p: f64 },
    RowSum { q: usize, sum: f64 },
    EmptySupport { q: usize },
    OverlappingSupports { q: usize },
    NonPositive { what: &'static str, value: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::TooFewConfigurations(n) => {
                write!(f, "too few configurations: q_max = {n}, need at least 2")
            }
            Violation::Shape {
                what,
                expected,
                got,
            } => write!(f, "{what}: expected {expected} entries, got {got}"),
            Violation::NonAdjacentTransition { from, to, p } => {
                write!(f, "non-adjacent transition {from} -> {to} with probability {p}")
            }
            Violation::SelfTransition { q, p } => {
                write!(f, "self transition {q} -> {q} with probability {p}")
            }
            Violation::InvalidProbability { what, q, index, p } => {
                write!(f, "{what} for configuration {q} at {index} is not a probability: {p}")
            }
            Violation::RowSum { q, sum } => {
                write!(f, "transition row for configuration {q} sums to {sum}")
            }
            Violation::EmptySupport { q } => {
                write!(f, "empty or non-finite friction support for configuration {q}")
            }
            Violation::OverlappingSupports { q } => write!(
                f,
                "overlapping friction supports between configurations {q} and {}",
                q + 1
            ),
            Violation::NonPositive { what, value } => write!(f, "{what} must be positive, got {value}"),
        }
    }
}

fn is_prob(p: f64) -> bool {
    p.is_finite() && (0.0..=1.0).contains(&p)
}

/// Checks every structural assumption on an FSS and returns all violations
/// (empty when the spec is valid).
pub fn validate_fss_spec(spec: &FssSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = spec.q_max;
    if n < 2 {
        out.push(Violation::TooFewConfigurations(n));
    }

    if spec.hazard.n_configs() != n {
        out.push(Violation::Shape {
            what: "hazard",
            expected: n,
            got: spec.hazard.n_configs(),
        });
    } else {
        match &spec.hazard {
            Hazard::Table(rows) => {
                for (qi, row) in rows.iter().enumerate() {
                    if row.is_empty() {
                        out.push(Violation::Shape {
                            what: "hazard table row",
                            expected: 1,
                            got: 0,
                        });
                    }
                    for (tau, &p) in row.iter().enumerate() {
                        if !is_prob(p) {
                            out.push(Violation::InvalidProbability {
                                what: "hazard",
                                q: qi + 1,
                                index: tau,
                                p,
                            });
                        }
                    }
                }
            }
            Hazard::Constant(c) => {
                for (qi, &p) in c.iter().enumerate() {
                    if !is_prob(p) {
                        out.push(Violation::InvalidProbability {
                            what: "hazard",
                            q: qi + 1,
                            index: 0,
                            p,
                        });
                    }
                }
            }
            Hazard::Countdown(c) => {
                for (qi, cd) in c.iter().enumerate() {
                    if !(cd.horizon.is_finite() && cd.horizon >= 1.0) {
                        out.push(Violation::InvalidProbability {
                            what: "countdown horizon",
                            q: qi + 1,
                            index: 0,
                            p: cd.horizon,
                        });
                    }
                }
            }
        }
    }

    if spec.transition.len() != n {
        out.push(Violation::Shape {
            what: "transition matrix rows",
            expected: n,
            got: spec.transition.len(),
        });
    } else {
        for (qi, row) in spec.transition.iter().enumerate() {
            let q = qi + 1;
            if row.len() != n {
                out.push(Violation::Shape {
                    what: "transition matrix columns",
                    expected: n,
                    got: row.len(),
                });
                continue;
            }
            let mut sum = 0.0;
            for (ti, &p) in row.iter().enumerate() {
                let to = ti + 1;
                if !is_prob(p) {
                    out.push(Violation::InvalidProbability {
                        what: "transition",
                        q,
                        index: to,
                        p,
                    });
                    continue;
                }
                sum += p;
                if p > 0.0 && to == q {
                    out.push(Violation::SelfTransition { q, p });
                } else if p > 0.0 && to.abs_diff(q) > 1 {
                    out.push(Violation::NonAdjacentTransition { from: q, to, p });
                }
            }
            if (sum - 1.0).abs() > 1e-9 {
                out.push(Violation::RowSum { q, sum });
            }
        }
    }

    if spec.friction.len() != n {
        out.push(Violation::Shape {
            what: "friction supports",
            expected: n,
            got: spec.friction.len(),
        });
    } else {
        for (qi, s) in spec.friction.iter().enumerate() {
            if !(s.lo.is_finite() && s.hi.is_finite() && s.lo <= s.hi) {
                out.push(Violation::EmptySupport { q: qi + 1 });
            }
        }
        for (qi, w) in spec.friction.windows(2).enumerate() {
            if !(w[0].hi < w[1].lo) {
                out.push(Violation::OverlappingSupports { q: qi + 1 });
            }
        }
    }
    out
}

/// Wheel friction model: base dry and viscous coefficients, noise level and
/// the switching systems whose contributions add to the dry coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwaModel {
    pub f_bar_d: f64,
    pub f_v: f64,
    pub sigma_v: f64,
    pub fss: Vec<FssSpec>,
}

impl RwaModel {
    pub fn n_fss(&self) -> usize {
        self.fss.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.sigma_v > 0.0) {
            v.push(Violation::NonPositive {
                what: "sigma_v",
                value: self.sigma_v,
            });
        }
        if self.fss.is_empty() {
            v.push(Violation::Shape {
                what: "switching systems",
                expected: 1,
                got: 0,
            });
        }
        for s in &self.fss {
            v.extend(validate_fss_spec(s));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(v))
        }
    }
}

/// Anomaly label vector: dry, viscous, then one flag per FSS.
/// Serialized as an array of 0/1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct AnomalyStatus {
    pub theta_d: bool,
    pub theta_v: bool,
    pub theta_s: Vec<bool>,
}

impl AnomalyStatus {
    pub fn nominal(n_fss: usize) -> Self {
        AnomalyStatus {
            theta_d: false,
            theta_v: false,
            theta_s: vec![false; n_fss],
        }
    }

    /// Status with only anomaly `index` active (0 = dry, 1 = viscous,
    /// 2 + s = FSS s).
    pub fn single(n_fss: usize, index: usize) -> Self {
        let mut s = Self::nominal(n_fss);
        s.set(index, true);
        s
    }

    pub fn n_anomalies(&self) -> usize {
        2 + self.theta_s.len()
    }

    pub fn get(&self, index: usize) -> bool {
        match index {
            0 => self.theta_d,
            1 => self.theta_v,
            i => self.theta_s[i - 2],
        }
    }

    pub fn set(&mut self, index: usize, value: bool) {
        match index {
            0 => self.theta_d = value,
            1 => self.theta_v = value,
            i => self.theta_s[i - 2] = value,
        }
    }

    pub fn is_nominal(&self) -> bool {
        (0..self.n_anomalies()).all(|i| !self.get(i))
    }

    /// Class index for single-anomaly labels: 0 for nominal, 1 + anomaly
    /// index otherwise. `None` when several anomalies are active.
    pub fn class(&self) -> Option<usize> {
        let active: Vec<usize> = (0..self.n_anomalies()).filter(|&i| self.get(i)).collect();
        match active.as_slice() {
            [] => Some(0),
            [i] => Some(i + 1),
            _ => None,
        }
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.n_anomalies()).map(|i| self.get(i) as u8).collect()
    }
}

impl TryFrom<Vec<u8>> for AnomalyStatus {
    type Error = String;
    fn try_from(bits: Vec<u8>) -> std::result::Result<Self, String> {
        if bits.len() < 2 {
            return Err(format!("status needs at least 2 entries, got {}", bits.len()));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err("status entries must be 0 or 1".into());
        }
        Ok(AnomalyStatus {
            theta_d: bits[0] == 1,
            theta_v: bits[1] == 1,
            theta_s: bits[2..].iter().map(|&b| b == 1).collect(),
        })
    }
}

impl From<AnomalyStatus> for Vec<u8> {
    fn from(s: AnomalyStatus) -> Self {
        s.to_bits()
    }
}

/// Human-readable anomaly names in label order.
pub fn anomaly_names(n_fss: usize) -> Vec<String> {
    let mut v = vec!["dry".to_string(), "viscous".to_string()];
    v.extend((1..=n_fss).map(|s| format!("fss{s}")));
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub entries: Vec<(TelemetryWindow, AnomalyStatus)>,
}

impl LabeledDataset {
    pub fn new(entries: Vec<(TelemetryWindow, AnomalyStatus)>) -> Result<Self> {
        let Some((_, first)) = entries.first() else {
            return Err(Error::InvalidConfig("dataset is empty".into()));
        };
        let n = first.theta_s.len();
        if entries.iter().any(|(_, s)| s.theta_s.len() != n) {
            return Err(Error::InvalidConfig(
                "dataset entries disagree on the number of switching systems".into(),
            ));
        }
        Ok(LabeledDataset { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_fss(&self) -> usize {
        self.entries[0].1.theta_s.len()
    }
}

/// Reference switching systems: a fast two-level system and a slow
/// three-level system.
pub mod reference {
    use super::*;

    /// Short-lived friction increases: two configurations with supports
    /// [0, 0.1] and [0.3, 0.4] and countdown hazards of horizon 200 and 2000.
    pub fn short_term() -> FssSpec {
        FssSpec {
            name: "short-term".into(),
            q_max: 2,
            hazard: Hazard::Countdown(vec![
                Countdown {
                    horizon: 200.0,
                    onset: 0,
                },
                Countdown {
                    horizon: 2000.0,
                    onset: 0,
                },
            ]),
            transition: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            friction: (0..2)
                .map(|q| FrictionSupport::new(0.3 * q as f64, 0.3 * q as f64 + 0.1))
                .collect(),
        }
    }

    /// Long-term variations: three configurations with supports
    /// [0.5 q, 0.5 q + 0.4], no jumps before 10000 steps, then a countdown
    /// of horizon 30000.
    pub fn long_term() -> FssSpec {
        let cd = Countdown {
            horizon: 30000.0,
            onset: 10001,
        };
        FssSpec {
            name: "long-term".into(),
            q_max: 3,
            hazard: Hazard::Countdown(vec![cd; 3]),
            transition: vec![
                vec![0.0, 1.0, 0.0],
                vec![0.5, 0.0, 0.5],
                vec![0.0, 1.0, 0.0],
            ],
            friction: (0..3)
                .map(|q| FrictionSupport::new(0.5 * q as f64, 0.5 * q as f64 + 0.4))
                .collect(),
        }
    }

    pub fn model() -> RwaModel {
        RwaModel {
            f_bar_d: 1.0,
            f_v: 1.0,
            sigma_v: 0.02,
            fss: vec![short_term(), long_term()],
        }
    }
}
