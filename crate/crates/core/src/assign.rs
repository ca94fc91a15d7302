//! Maximum-likelihood assignment of changepoints to switching systems.
//!
//! Each changepoint is labeled with the FSS that jumped (`u >= 1`) or
//! rejected as a false positive (`u = 0`). The labeling maximizes the sum of
//! per-stage log-likelihoods over the semi-Markov dynamics of all systems.
//! The search is best-first over `(stage, configurations, dwell times)`;
//! stage costs are never positive, so the first complete state taken from
//! the queue is optimal. Dwell times are clamped where the hazard becomes
//! constant, which makes states with equal clamped dwell times
//! interchangeable and lets them be merged exactly.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::SegmentedFit;
use crate::model::FssSpec;

/// What the assignment needs to know about one changepoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangepointEvent {
    /// Steps since the previous changepoint (or the window start).
    pub delta_tau: usize,
    /// Sign of the change in the dry coefficient, -1 or +1.
    pub delta_f_sign: i8,
    pub rjct_cost: f64,
}

/// Events for the changepoints separating the intervals of a fit.
pub fn events_from_fit(changepoints: &[usize], fit: &SegmentedFit) -> Vec<ChangepointEvent> {
    let mut prev = 0;
    changepoints
        .iter()
        .enumerate()
        .map(|(i, &cp)| {
            let ev = ChangepointEvent {
                delta_tau: (cp - prev).max(1),
                delta_f_sign: if fit.f[i + 1] - fit.f[i] < 0.0 { -1 } else { 1 },
                rjct_cost: fit.rejection_costs[i],
            };
            prev = cp;
            ev
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignConfig {
    /// Largest dwell time considered; hazards are held constant beyond it.
    pub tau_max: usize,
    /// Noise level converting rejection costs to log-likelihood units.
    pub sigma_v: f64,
    pub allow_rejection: bool,
    /// Lower bound on each per-step `log(1 - hazard)` term. Keeps a path
    /// alive through a dwell longer than the hazard allows, which happens
    /// when a short excursion is missed by the detector.
    #[serde(default)]
    pub survival_log_floor: Option<f64>,
    /// Expansions before giving up on exact search and switching to a beam.
    pub max_expansions: usize,
    pub beam_width: usize,
}

impl Default for AssignConfig {
    fn default() -> Self {
        AssignConfig {
            tau_max: 160_000,
            sigma_v: 1.0,
            allow_rejection: true,
            survival_log_floor: None,
            max_expansions: 200_000,
            beam_width: 256,
        }
    }
}

/// Cumulative `log(1 - hazard)` and `log(hazard)` per configuration of one
/// FSS, up to the dwell time from which the hazard is constant.
#[derive(Debug, Clone)]
pub struct SurvivalTable {
    caps: Vec<usize>,
    log_stay: Vec<Vec<f64>>,
    log_jump: Vec<Vec<f64>>,
    /// Prefix sums of the finite `log_stay` entries.
    prefix: Vec<Vec<f64>>,
    /// Prefix counts of the `-inf` `log_stay` entries.
    dead: Vec<Vec<u32>>,
}

pub fn precompute_survival(spec: &FssSpec, tau_max: usize, log_floor: Option<f64>) -> SurvivalTable {
    let mut t = SurvivalTable {
        caps: Vec::new(),
        log_stay: Vec::new(),
        log_jump: Vec::new(),
        prefix: Vec::new(),
        dead: Vec::new(),
    };
    for q in 1..=spec.q_max {
        let cap = spec.hazard.saturation(q).min(tau_max);
        let h: Vec<f64> = (0..=cap).map(|tau| spec.hazard.prob(q, tau)).collect();
        let stay: Vec<f64> = h
            .iter()
            .map(|&p| {
                let l = (-p).ln_1p();
                match log_floor {
                    Some(fl) => l.max(fl),
                    None => l,
                }
            })
            .collect();
        let mut prefix = Vec::with_capacity(cap + 2);
        let mut dead = Vec::with_capacity(cap + 2);
        let (mut acc, mut nd) = (0.0, 0u32);
        prefix.push(acc);
        dead.push(nd);
        for &l in &stay {
            if l == f64::NEG_INFINITY {
                nd += 1;
            } else {
                acc += l;
            }
            prefix.push(acc);
            dead.push(nd);
        }
        t.caps.push(cap);
        t.log_jump.push(h.iter().map(|p| p.ln()).collect());
        t.log_stay.push(stay);
        t.prefix.push(prefix);
        t.dead.push(dead);
    }
    t
}

impl SurvivalTable {
    /// Dwell time from which configuration `q` behaves identically.
    pub fn cap(&self, q: usize) -> usize {
        self.caps[q - 1]
    }

    pub fn canonical(&self, q: usize, tau: usize) -> usize {
        tau.min(self.caps[q - 1])
    }

    /// `sum_{tau = k1}^{k2} log(1 - hazard(q, tau))`, zero when `k2 < k1`.
    /// Depends on `k1` only through its canonical value.
    pub fn survival(&self, q: usize, k1: usize, k2: usize) -> f64 {
        if k2 < k1 {
            return 0.0;
        }
        let i = q - 1;
        let cap = self.caps[i];
        let mut total = 0.0;
        if k1 < cap {
            let hi = k2.min(cap - 1);
            if self.dead[i][hi + 1] > self.dead[i][k1] {
                return f64::NEG_INFINITY;
            }
            total = self.prefix[i][hi + 1] - self.prefix[i][k1];
        }
        if k2 >= cap {
            let count = k2 - k1.max(cap) + 1;
            let l = self.log_stay[i][cap];
            if l == f64::NEG_INFINITY {
                return l;
            }
            total += count as f64 * l;
        }
        total
    }

    pub fn log_hazard(&self, q: usize, tau: usize) -> f64 {
        let i = q - 1;
        self.log_jump[i][tau.min(self.caps[i])]
    }
}

/// Everything the stage costs need about the switching systems.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub specs: &'a [FssSpec],
    pub tables: Vec<SurvivalTable>,
    pub sigma_v: f64,
    pub allow_rejection: bool,
}

impl<'a> Problem<'a> {
    pub fn new(specs: &'a [FssSpec], cfg: &AssignConfig) -> Result<Self> {
        for s in specs {
            s.validate()?;
        }
        if !(cfg.sigma_v > 0.0) {
            return Err(Error::InvalidConfig(format!("sigma_v must be positive, got {}", cfg.sigma_v)));
        }
        Ok(Problem {
            specs,
            tables: specs
                .iter()
                .map(|s| precompute_survival(s, cfg.tau_max, cfg.survival_log_floor))
                .collect(),
            sigma_v: cfg.sigma_v,
            allow_rejection: cfg.allow_rejection,
        })
    }

    pub fn n_fss(&self) -> usize {
        self.specs.len()
    }

    /// Configuration of FSS `s` (0-based) after it jumps in direction
    /// `sign`, if that move is possible.
    fn target(&self, s: usize, q: usize, sign: i8) -> Option<(usize, f64)> {
        let spec = &self.specs[s];
        let q2 = q as i64 + sign as i64;
        if q2 < 1 || q2 > spec.q_max as i64 {
            return None;
        }
        let p = spec.transition_prob(q, q2 as usize);
        (p > 0.0).then(|| (q2 as usize, p.ln()))
    }

    /// Log-likelihood of one stage under input `u`: every non-jumping system
    /// survives dwell times `tau ..= tau + dt`; the jumper survives
    /// `tau ..= tau + dt - 1`, jumps at `tau + dt` and moves one
    /// configuration in the direction of the change. Rejection adds
    /// `-c / (2 sigma^2)` to the all-survive term. `-inf` marks an
    /// impossible input.
    pub fn stage_cost(&self, q: &[usize], tau: &[usize], ev: &ChangepointEvent, u: usize) -> f64 {
        let dt = ev.delta_tau;
        let mut total = 0.0;
        for s in 0..self.n_fss() {
            let t = &self.tables[s];
            let term = if u == s + 1 {
                let Some((_, log_pq)) = self.target(s, q[s], ev.delta_f_sign) else {
                    return f64::NEG_INFINITY;
                };
                t.survival(q[s], tau[s], tau[s] + dt - 1) + t.log_hazard(q[s], tau[s] + dt) + log_pq
            } else {
                t.survival(q[s], tau[s], tau[s] + dt)
            };
            total += term;
        }
        if u == 0 {
            total -= ev.rjct_cost / (2.0 * self.sigma_v * self.sigma_v);
        }
        total
    }

    /// State after applying input `u`, with canonical dwell times.
    pub fn next_state(&self, q: &[usize], tau: &[usize], ev: &ChangepointEvent, u: usize) -> (Vec<usize>, Vec<usize>) {
        let mut q2 = q.to_vec();
        let mut t2 = Vec::with_capacity(tau.len());
        for s in 0..self.n_fss() {
            if u == s + 1 {
                q2[s] = (q[s] as i64 + ev.delta_f_sign as i64) as usize;
                t2.push(0);
            } else {
                t2.push(self.tables[s].canonical(q[s], tau[s] + ev.delta_tau));
            }
        }
        (q2, t2)
    }

    /// Optimistic initial dwell times: for each system independently, the
    /// dwell time in `[0, cap]` maximizing its own first-stage term given
    /// whether it is the jumper for input `u1` (smallest on ties).
    pub fn initial_tau(&self, q: &[usize], first: &ChangepointEvent, u1: usize) -> Vec<usize> {
        let dt = first.delta_tau;
        (0..self.n_fss())
            .map(|s| {
                let t = &self.tables[s];
                let term = |tau: usize| {
                    if u1 == s + 1 {
                        t.survival(q[s], tau, tau + dt - 1) + t.log_hazard(q[s], tau + dt)
                    } else {
                        t.survival(q[s], tau, tau + dt)
                    }
                };
                let mut best = (0, term(0));
                for tau in 1..=t.cap(q[s]) {
                    let v = term(tau);
                    if v > best.1 {
                        best = (tau, v);
                    }
                }
                best.0
            })
            .collect()
    }

    /// All initial configuration vectors in lexicographic order.
    pub fn config_combos(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for spec in self.specs {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (1..=spec.q_max).map(move |q| {
                        let mut v = p.clone();
                        v.push(q);
                        v
                    })
                })
                .collect();
        }
        out
    }

    /// Total score of input sequence `u` from initial configurations `q0`,
    /// accumulated stage by stage exactly as the search does.
    pub fn path_score(&self, events: &[ChangepointEvent], q0: &[usize], u: &[usize]) -> f64 {
        if events.is_empty() {
            return 0.0;
        }
        let mut q = q0.to_vec();
        let mut tau = self.initial_tau(q0, &events[0], u[0]);
        let mut score = 0.0;
        for (ev, &ui) in events.iter().zip(u) {
            let c = self.stage_cost(&q, &tau, ev, ui);
            if c == f64::NEG_INFINITY {
                return c;
            }
            score += c;
            (q, tau) = self.next_state(&q, &tau, ev, ui);
        }
        score
    }
}

/// Configuration and friction sequences of one FSS: an entry for the start
/// of the window and one per jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FssTrack {
    pub q: Vec<usize>,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    /// FSS index per changepoint, 0 for rejected.
    pub u: Vec<usize>,
    /// Initial configuration of each FSS.
    pub q0: Vec<usize>,
    pub f_bar_d: f64,
    pub f_v: f64,
    pub per_fss: Vec<FssTrack>,
    pub score: f64,
    /// States expanded by the search.
    pub iterations: usize,
    /// False when the expansion budget ran out and a beam search was used.
    pub exact: bool,
    pub rejections: usize,
    /// Per interval: fitted dry coefficient minus its reconstruction from
    /// `f_bar_d` and the FSS tracks (non-zero only after rejections).
    pub residual: Vec<f64>,
}

#[derive(Debug)]
struct PathNode {
    u: u8,
    prev: Option<Rc<PathNode>>,
}

fn materialize(p: &Rc<PathNode>) -> Vec<u8> {
    let mut v = Vec::new();
    let mut cur = Some(p);
    while let Some(n) = cur {
        v.push(n.u);
        cur = n.prev.as_ref();
    }
    v.reverse();
    v
}

/// Tie-break between equal-score partial solutions: lexicographically
/// smaller inputs first, then smaller initial configuration.
fn tie_order(a: &Rc<PathNode>, qa: usize, b: &Rc<PathNode>, qb: usize) -> Ordering {
    if Rc::ptr_eq(a, b) {
        return qa.cmp(&qb);
    }
    materialize(a).cmp(&materialize(b)).then(qa.cmp(&qb))
}

struct Node {
    stage: usize,
    q: Vec<usize>,
    tau: Vec<usize>,
    score: f64,
    path: Rc<PathNode>,
    q0: usize,
}

struct Entry {
    score: f64,
    node: usize,
    path: Rc<PathNode>,
    q0: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: higher score first, then the earlier tie order.
        self.score
            .total_cmp(&other.score)
            .then_with(|| tie_order(&other.path, other.q0, &self.path, self.q0))
    }
}

type Key = (usize, Vec<usize>, Vec<usize>);

/// Better-than relation used when two partial solutions reach the same state.
fn improves(score: f64, path: &Rc<PathNode>, q0: usize, node: &Node) -> bool {
    score > node.score || (score == node.score && tie_order(path, q0, &node.path, node.q0) == Ordering::Less)
}

struct Search<'p, 'a> {
    pb: &'p Problem<'a>,
    events: &'p [ChangepointEvent],
    combos: Vec<Vec<usize>>,
}

struct Found {
    u: Vec<usize>,
    q0: Vec<usize>,
    score: f64,
    iterations: usize,
    exact: bool,
}

impl<'p, 'a> Search<'p, 'a> {
    fn inputs(&self) -> std::ops::RangeInclusive<usize> {
        (if self.pb.allow_rejection { 0 } else { 1 })..=self.pb.n_fss()
    }

    /// Successors of the virtual start: every initial configuration vector
    /// combined with every first input.
    fn first_stage(&self) -> Vec<(Vec<usize>, Vec<usize>, f64, Rc<PathNode>, usize)> {
        let ev = &self.events[0];
        let mut out = Vec::new();
        for (ci, q) in self.combos.iter().enumerate() {
            for u in self.inputs() {
                let tau = self.pb.initial_tau(q, ev, u);
                let c = self.pb.stage_cost(q, &tau, ev, u);
                if c == f64::NEG_INFINITY {
                    continue;
                }
                let (q2, t2) = self.pb.next_state(q, &tau, ev, u);
                let path = Rc::new(PathNode { u: u as u8, prev: None });
                out.push((q2, t2, 0.0 + c, path, ci));
            }
        }
        out
    }

    fn finish(&self, path: &Rc<PathNode>, q0: usize, score: f64, iterations: usize, exact: bool) -> Found {
        Found {
            u: materialize(path).into_iter().map(usize::from).collect(),
            q0: self.combos[q0].clone(),
            score,
            iterations,
            exact,
        }
    }

    fn best_first(&self, max_expansions: usize) -> Option<Result<Found>> {
        let n = self.events.len();
        let mut nodes: Vec<Node> = Vec::new();
        let mut index: HashMap<Key, usize> = HashMap::new();
        let mut heap = BinaryHeap::new();
        let mut iterations = self.combos.len();

        let mut offer = |nodes: &mut Vec<Node>,
                         heap: &mut BinaryHeap<Entry>,
                         stage: usize,
                         q: Vec<usize>,
                         tau: Vec<usize>,
                         score: f64,
                         path: Rc<PathNode>,
                         q0: usize| {
            let key = (stage, q, tau);
            let id = match index.get(&key) {
                Some(&id) => {
                    if !improves(score, &path, q0, &nodes[id]) {
                        return;
                    }
                    let nd = &mut nodes[id];
                    nd.score = score;
                    nd.path = path.clone();
                    nd.q0 = q0;
                    id
                }
                None => {
                    let id = nodes.len();
                    nodes.push(Node {
                        stage,
                        q: key.1.clone(),
                        tau: key.2.clone(),
                        score,
                        path: path.clone(),
                        q0,
                    });
                    index.insert(key, id);
                    id
                }
            };
            heap.push(Entry {
                score,
                node: id,
                path,
                q0,
            });
        };

        for (q, t, s, p, c) in self.first_stage() {
            offer(&mut nodes, &mut heap, 1, q, t, s, p, c);
        }
        while let Some(e) = heap.pop() {
            let (stage, score, path, q0) = {
                let nd = &nodes[e.node];
                if !Rc::ptr_eq(&nd.path, &e.path) || nd.score != e.score || nd.q0 != e.q0 {
                    continue;
                }
                (nd.stage, nd.score, nd.path.clone(), nd.q0)
            };
            if stage == n {
                return Some(Ok(self.finish(&path, q0, score, iterations, true)));
            }
            iterations += 1;
            if iterations > max_expansions {
                return None;
            }
            let (q, tau) = (nodes[e.node].q.clone(), nodes[e.node].tau.clone());
            let ev = &self.events[stage];
            for u in self.inputs() {
                let c = self.pb.stage_cost(&q, &tau, ev, u);
                if c == f64::NEG_INFINITY {
                    continue;
                }
                let (q2, t2) = self.pb.next_state(&q, &tau, ev, u);
                let p2 = Rc::new(PathNode {
                    u: u as u8,
                    prev: Some(path.clone()),
                });
                offer(&mut nodes, &mut heap, stage + 1, q2, t2, score + c, p2, q0);
            }
        }
        Some(Err(Error::NoFeasibleAssignment))
    }

    fn beam(&self, width: usize, iterations: usize) -> Result<Found> {
        type Item = (Vec<usize>, Vec<usize>, f64, Rc<PathNode>, usize);
        let prune = |items: Vec<Item>| -> Vec<Item> {
            let mut best: HashMap<(Vec<usize>, Vec<usize>), Item> = HashMap::new();
            for it in items {
                let key = (it.0.clone(), it.1.clone());
                match best.get(&key) {
                    Some(b) if !(it.2 > b.2 || (it.2 == b.2 && tie_order(&it.3, it.4, &b.3, b.4) == Ordering::Less)) => {}
                    _ => {
                        best.insert(key, it);
                    }
                }
            }
            let mut v: Vec<Item> = best.into_values().collect();
            v.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| tie_order(&a.3, a.4, &b.3, b.4)));
            v.truncate(width.max(1));
            v
        };
        let mut iterations = iterations;
        let mut frontier = prune(self.first_stage());
        for stage in 1..self.events.len() {
            let ev = &self.events[stage];
            let mut next = Vec::new();
            for (q, tau, score, path, q0) in &frontier {
                iterations += 1;
                for u in self.inputs() {
                    let c = self.pb.stage_cost(q, tau, ev, u);
                    if c == f64::NEG_INFINITY {
                        continue;
                    }
                    let (q2, t2) = self.pb.next_state(q, tau, ev, u);
                    let p2 = Rc::new(PathNode {
                        u: u as u8,
                        prev: Some(path.clone()),
                    });
                    next.push((q2, t2, score + c, p2, *q0));
                }
            }
            frontier = prune(next);
        }
        match frontier.first() {
            Some((_, _, score, path, q0)) => Ok(self.finish(path, *q0, *score, iterations, false)),
            None => Err(Error::NoFeasibleAssignment),
        }
    }
}

/// Finds the highest-scoring input sequence; ties go to the
/// lexicographically smallest `u`.
pub fn assign(
    events: &[ChangepointEvent],
    specs: &[FssSpec],
    cfg: &AssignConfig,
    f_hat: &[f64],
    f_v: f64,
) -> Result<AssignmentResult> {
    if f_hat.len() != events.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: events.len() + 1,
            got: f_hat.len(),
        });
    }
    if let Some(ev) = events.iter().find(|e| e.delta_tau == 0 || e.delta_f_sign.abs() != 1) {
        return Err(Error::InvalidConfig(format!("malformed changepoint event {ev:?}")));
    }
    let pb = Problem::new(specs, cfg)?;
    let found = search(&pb, events, cfg)?;
    let signs: Vec<i8> = events.iter().map(|e| e.delta_f_sign).collect();
    let (f_bar_d, per_fss, residual) = decompose(f_hat, &found.u, &found.q0, &signs);
    Ok(AssignmentResult {
        rejections: found.u.iter().filter(|&&u| u == 0).count(),
        u: found.u,
        q0: found.q0,
        f_bar_d,
        f_v,
        per_fss,
        score: found.score,
        iterations: found.iterations,
        exact: found.exact,
        residual,
    })
}

fn search(pb: &Problem, events: &[ChangepointEvent], cfg: &AssignConfig) -> Result<Found> {
    let s = Search {
        pb,
        events,
        combos: pb.config_combos(),
    };
    if events.is_empty() {
        return Ok(Found {
            u: vec![],
            q0: s.combos[0].clone(),
            score: 0.0,
            iterations: 0,
            exact: true,
        });
    }
    match s.best_first(cfg.max_expansions) {
        Some(r) => r,
        None => {
            log::warn!(
                "assignment search exceeded {} expansions, falling back to beam search",
                cfg.max_expansions
            );
            s.beam(cfg.beam_width, cfg.max_expansions)
        }
    }
}

/// Splits interval dry coefficients into a base coefficient and per-FSS
/// tracks. Each FSS starts at zero and accumulates the change at each of its
/// jumps; each track is then shifted so its minimum is zero and the shift
/// moves into the base. Changes at rejected changepoints belong to no FSS and
/// show up in the returned per-interval residual.
pub fn decompose(f_hat: &[f64], u: &[usize], q0: &[usize], signs: &[i8]) -> (f64, Vec<FssTrack>, Vec<f64>) {
    let n_fss = q0.len();
    let mut tracks: Vec<FssTrack> = q0
        .iter()
        .map(|&q| FssTrack {
            q: vec![q],
            f: vec![0.0],
        })
        .collect();
    // Index of the current entry of every track at each interval.
    let mut cursor = vec![vec![0usize; n_fss]; f_hat.len()];
    for i in 1..f_hat.len() {
        cursor[i] = cursor[i - 1].clone();
        let s = u[i - 1];
        if s == 0 {
            continue;
        }
        let t = &mut tracks[s - 1];
        let last_f = *t.f.last().unwrap();
        let last_q = *t.q.last().unwrap();
        t.f.push(last_f + f_hat[i] - f_hat[i - 1]);
        t.q.push((last_q as i64 + signs[i - 1] as i64) as usize);
        cursor[i][s - 1] = t.f.len() - 1;
    }
    let mut base = f_hat[0];
    for t in &mut tracks {
        let m = t.f.iter().copied().fold(f64::INFINITY, f64::min);
        for v in &mut t.f {
            *v -= m;
        }
        base += m;
    }
    let residual = (0..f_hat.len())
        .map(|i| {
            let recon: f64 = base + (0..n_fss).map(|s| tracks[s].f[cursor[i][s]]).sum::<f64>();
            f_hat[i] - recon
        })
        .collect();
    (base, tracks, residual)
}
