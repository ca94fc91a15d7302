use proptest::prelude::*;

use rwa_friction::assign::{self, AssignConfig, ChangepointEvent, Problem};
use rwa_friction::classify::{histogram_features, HistogramConfig, LinearSvmModel};
use rwa_friction::estimate;
use rwa_friction::Error;
use rwa_friction::model::{Countdown, FrictionSupport, FssSpec, Hazard, TelemetryWindow};

fn hazard(q_max: usize) -> impl Strategy<Value = Hazard> {
    prop_oneof![
        prop::collection::vec(0.01f64..0.6, q_max).prop_map(Hazard::Constant),
        prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..1.0], 1..6), q_max)
            .prop_map(Hazard::Table),
        prop::collection::vec((2.0f64..25.0, 0usize..4), q_max).prop_map(|v| Hazard::Countdown(
            v.into_iter().map(|(horizon, onset)| Countdown { horizon, onset }).collect()
        )),
    ]
}

fn spec() -> impl Strategy<Value = FssSpec> {
    (2usize..=3)
        .prop_flat_map(|q_max| (Just(q_max), hazard(q_max), 0.05f64..0.95))
        .prop_map(|(q_max, hazard, a)| FssSpec {
            name: String::new(),
            q_max,
            hazard,
            transition: if q_max == 2 {
                vec![vec![0.0, 1.0], vec![1.0, 0.0]]
            } else {
                vec![vec![0.0, 1.0, 0.0], vec![a, 0.0, 1.0 - a], vec![0.0, 1.0, 0.0]]
            },
            friction: (0..q_max).map(|q| FrictionSupport::new(q as f64, q as f64 + 0.5)).collect(),
        })
}

fn events(max: usize) -> impl Strategy<Value = Vec<ChangepointEvent>> {
    prop::collection::vec(
        (1usize..15, prop::bool::ANY, 0.0f64..6.0).prop_map(|(delta_tau, up, rjct_cost)| ChangepointEvent {
            delta_tau,
            delta_f_sign: if up { 1 } else { -1 },
            rjct_cost,
        }),
        1..=max,
    )
}

fn exact_cfg() -> AssignConfig {
    AssignConfig {
        tau_max: 1000,
        sigma_v: 1.0,
        ..Default::default()
    }
}

/// Every input sequence with every initial configuration.
fn brute_force(p: &Problem, ev: &[ChangepointEvent]) -> (f64, Vec<Vec<usize>>) {
    let base = p.n_fss() + 1;
    let mut best = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    for code in 0..base.pow(ev.len() as u32) {
        let u: Vec<usize> = (0..ev.len()).map(|i| code / base.pow(i as u32) % base).collect();
        for q0 in p.config_combos() {
            let s = p.path_score(ev, &q0, &u);
            if s > best {
                best = s;
                argmax.clear();
            }
            if s == best && s > f64::NEG_INFINITY && !argmax.contains(&u) {
                argmax.push(u.clone());
            }
        }
    }
    (best, argmax)
}

fn f_hat_for(ev: &[ChangepointEvent]) -> Vec<f64> {
    let mut f = vec![1.0];
    for e in ev {
        f.push(f.last().unwrap() + 0.3 * e.delta_f_sign as f64);
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn search_matches_exhaustive_enumeration(specs in prop::collection::vec(spec(), 1..=2), ev in events(5)) {
        let cfg = exact_cfg();
        let p = Problem::new(&specs, &cfg).unwrap();
        let (best, argmax) = brute_force(&p, &ev);
        let r = match assign::assign(&ev, &specs, &cfg, &f_hat_for(&ev), 1.0) {
            Ok(r) => r,
            Err(e) => {
                prop_assert!(matches!(e, Error::NoFeasibleAssignment));
                prop_assert_eq!(best, f64::NEG_INFINITY);
                return Ok(());
            }
        };
        prop_assert!(r.exact);
        prop_assert_eq!(r.score, best);
        prop_assert_eq!(p.path_score(&ev, &r.q0, &r.u), best);
        if argmax.len() == 1 {
            prop_assert_eq!(&r.u, &argmax[0]);
        }
    }

    /// Raising every rejection cost never raises the total cost rejected by
    /// the optimum.
    #[test]
    fn rejected_cost_falls_as_rejection_gets_dearer(
        specs in prop::collection::vec(spec(), 1..=2),
        ev in events(7),
        scale in 1.0f64..20.0,
    ) {
        let cfg = exact_cfg();
        // measured in the original costs so both runs share units
        let rejected = |inst: &[ChangepointEvent]| -> Option<f64> {
            let r = assign::assign(inst, &specs, &cfg, &f_hat_for(inst), 1.0).ok()?;
            Some(ev.iter().zip(&r.u).filter(|(_, &u)| u == 0).map(|(e, _)| e.rjct_cost).sum())
        };
        let dearer: Vec<ChangepointEvent> = ev
            .iter()
            .map(|e| ChangepointEvent { rjct_cost: e.rjct_cost * scale, ..*e })
            .collect();
        // feasibility does not depend on the costs
        let (Some(cheap), Some(dear)) = (rejected(&ev), rejected(&dearer)) else {
            prop_assert!(rejected(&ev).is_none() && rejected(&dearer).is_none());
            return Ok(());
        };
        prop_assert!(dear <= cheap + 1e-9);
    }

    #[test]
    fn decomposition_accounts_for_every_change(
        f_hat in prop::collection::vec(-5.0f64..5.0, 1..30),
        n_fss in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let m = f_hat.len() - 1;
        let u: Vec<usize> = (0..m).map(|i| ((seed >> (i % 60)) as usize + i) % (n_fss + 1)).collect();
        let signs: Vec<i8> = (0..m).map(|i| if f_hat[i + 1] < f_hat[i] { -1 } else { 1 }).collect();
        let q0 = vec![10; n_fss];
        let (base, tracks, residual) = assign::decompose(&f_hat, &u, &q0, &signs);

        let mut rejected = 0.0;
        let mut cursor = vec![0usize; n_fss];
        for i in 0..f_hat.len() {
            if i > 0 {
                match u[i - 1] {
                    0 => rejected += f_hat[i] - f_hat[i - 1],
                    s => cursor[s - 1] += 1,
                }
            }
            prop_assert!((residual[i] - rejected).abs() < 1e-9);
            let recon: f64 = base + (0..n_fss).map(|s| tracks[s].f[cursor[s]]).sum::<f64>();
            prop_assert!((recon + residual[i] - f_hat[i]).abs() < 1e-9);
        }
        for (s, t) in tracks.iter().enumerate() {
            let jumps = u.iter().filter(|&&x| x == s + 1).count();
            prop_assert_eq!(t.f.len(), jumps + 1);
            prop_assert_eq!(t.f.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
            for (w, sg) in t.q.windows(2).zip(u.iter().zip(&signs).filter(|(&x, _)| x == s + 1).map(|(_, &g)| g)) {
                prop_assert_eq!(w[1] as i64 - w[0] as i64, sg as i64);
            }
        }
    }

    #[test]
    fn histogram_sums_to_one(
        f in prop::collection::vec(-3.0f64..3.0, 1..200),
        n_bins in 1usize..60,
        lo in -2.0f64..0.0,
        width in 0.1f64..4.0,
    ) {
        let cfg = HistogramConfig { n_bins, r_min: lo, r_max: lo + width, config_filter: None };
        let q = vec![1; f.len()];
        let z = histogram_features(&f, &q, &cfg);
        prop_assert_eq!(z.len(), n_bins);
        prop_assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(z.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn histogram_ignores_order(
        pairs in prop::collection::vec((-1.0f64..2.0, 1usize..4), 1..100),
        rot in 0usize..100,
        filter in prop::option::of(prop::collection::vec(1usize..4, 1..3)),
    ) {
        let cfg = HistogramConfig { n_bins: 17, r_min: 0.0, r_max: 1.0, config_filter: filter };
        let (f, q): (Vec<f64>, Vec<usize>) = pairs.iter().copied().unzip();
        let mut shuffled = pairs.clone();
        shuffled.rotate_left(rot % pairs.len());
        shuffled.reverse();
        let (f2, q2): (Vec<f64>, Vec<usize>) = shuffled.into_iter().unzip();
        prop_assert_eq!(histogram_features(&f, &q, &cfg), histogram_features(&f2, &q2, &cfg));
    }

    #[test]
    fn positive_scaling_keeps_decisions(
        w in prop::collection::vec(-2.0f64..2.0, 5),
        b in -1.0f64..1.0,
        z in prop::collection::vec(0.0f64..1.0, 5),
        c in 0.01f64..100.0,
    ) {
        let m = LinearSvmModel { w: w.clone(), b, feature_dim: 5 };
        let d = m.decision(&z).unwrap();
        prop_assume!(d.abs() > 1e-9);
        let scaled = LinearSvmModel { w: w.iter().map(|v| v * c).collect(), b: b * c, feature_dim: 5 };
        prop_assert_eq!(m.classify(&z).unwrap(), scaled.classify(&z).unwrap());
    }

    #[test]
    fn segmented_fit_invariants(
        levels in prop::collection::vec(-2.0f64..2.0, 1..5),
        f_v in 0.1f64..3.0,
        shift in -10.0f64..10.0,
        noise_seed in any::<u64>(),
    ) {
        let seg = 60;
        let n = seg * levels.len();
        let omega: Vec<f64> = (0..n).map(|k| 0.5 + (k as f64 * 0.37).sin().abs()).collect();
        let jitter = |k: usize| ((noise_seed.wrapping_mul(k as u64 + 1) >> 40) as f64 / (1u64 << 24) as f64 - 0.5) * 0.01;
        let f_hat: Vec<f64> = (0..n).map(|k| levels[k / seg] + f_v * omega[k] + jitter(k)).collect();
        let cps: Vec<usize> = (1..levels.len()).map(|i| i * seg).collect();
        let iv = estimate::build_intervals(&cps, n, 3).unwrap();
        let w = TelemetryWindow::new(omega.clone(), f_hat.clone()).unwrap();
        let fit = estimate::fit(&w, &iv).unwrap();

        prop_assert!((fit.f_v - f_v).abs() < 0.05);
        prop_assert!(fit.rejection_costs.iter().all(|&c| c >= -1e-9));
        let res = estimate::residuals(&w, &iv, &fit);
        let om: Vec<f64> = iv.intervals.iter().flat_map(|&(a, b)| w.omega()[a..=b].to_vec()).collect();
        let dot: f64 = res.iter().zip(&om).map(|(r, o)| r * o).sum::<f64>();
        prop_assert!(dot.abs() < 1e-8 * n as f64);

        let shifted = TelemetryWindow::new(omega, f_hat.iter().map(|v| v + shift).collect()).unwrap();
        let fit2 = estimate::fit(&shifted, &iv).unwrap();
        prop_assert!((fit2.f_v - fit.f_v).abs() < 1e-9);
        for (a, b) in fit.f.iter().zip(&fit2.f) {
            prop_assert!((b - a - shift).abs() < 1e-8);
        }
    }
}
