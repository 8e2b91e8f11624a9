mod common;

use orric_core::engine::DEFAULT_ORACLE_CAP;
use orric_core::numeric::fits;
use orric_core::policies::{focus_share, orric_scan, weight_schedule, Heuristic};
use orric_core::scenario::{CapacityLaw, DataLaw};
use orric_core::{
    compute_bounds, compute_weights, evaluate_objective, generate_trace, heuristic_step,
    offline_optimal, orric_step, prune_dominated, run_policy, InferConfig, Policy, RetrainConfig,
    TraceSpec,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn menu() -> impl Strategy<Value = (Vec<RetrainConfig>, Vec<InferConfig>)> {
    // small integer grids make cost and profit ties common
    let retrain = prop::collection::vec((1u32..10, 1u32..10), 0..12).prop_map(|v| {
        let mut r: Vec<RetrainConfig> =
            v.into_iter().map(|(g, c)| RetrainConfig::new(g as f64 / 10.0, c as f64)).collect();
        r.push(RetrainConfig::NONE);
        r
    });
    let infer = prop::collection::vec((1u32..=10, 1u32..10), 1..12).prop_map(|v| {
        v.into_iter().map(|(p, c)| InferConfig::new(p as f64 / 10.0, c as f64)).collect()
    });
    (retrain, infer)
}

fn frontier_ok(points: &[(f64, f64)]) -> bool {
    points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prune_keeps_exactly_the_undominated((retrain, infer) in menu()) {
        let p = prune_dominated(&retrain, &infer, false).unwrap();
        let r: Vec<(f64, f64)> = p.retrain().iter().map(|x| (x.cost, x.gain)).collect();
        let i: Vec<(f64, f64)> = p.infer().iter().map(|x| (x.cost, x.profit)).collect();
        prop_assert!(frontier_ok(&r) && frontier_ok(&i));
        prop_assert_eq!(r[0], (0.0, 0.0));

        // all-pairs oracle: a raw point survives iff nothing strictly dominates it
        let raw_i: Vec<(f64, f64)> = infer.iter().map(|x| (x.cost, x.profit)).collect();
        for &(c, a) in &raw_i {
            let dominated = raw_i.iter().any(|&(c2, a2)| c2 <= c && a2 >= a && (c2 < c || a2 > a));
            prop_assert_eq!(!dominated, i.contains(&(c, a)));
        }
        let raw_r: Vec<(f64, f64)> = retrain.iter().map(|x| (x.cost, x.gain)).collect();
        for &(c, a) in &raw_r {
            let dominated = raw_r.iter().any(|&(c2, a2)| c2 <= c && a2 >= a && (c2 < c || a2 > a));
            prop_assert_eq!(!dominated, r.contains(&(c, a)));
        }
    }

    #[test]
    fn prune_is_idempotent((retrain, infer) in menu()) {
        let once = prune_dominated(&retrain, &infer, false).unwrap();
        let twice = prune_dominated(once.retrain(), once.infer(), false).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn orric_matches_exhaustive_and_scans_linearly(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, n, coarse) = (rng.gen_range(1..=12), rng.gen_range(1..=12), rng.gen_bool(0.5));
        let p = common::random_profiles(&mut rng, m, n, coarse);
        let u = rng.gen_range(p.c_min_infer()..=p.c_top_pair() * 1.2);
        let (v, w) = (rng.gen_range(0.0..2.0), rng.gen_range(0.01..2.0));
        let (got, steps) = orric_scan(&common::weights(v, w, u), &p);
        let got = got.unwrap();
        prop_assert!(steps <= m + n);
        prop_assert!(fits(got.cost(&p), u));
        prop_assert_eq!(Some(got), common::exhaustive_step(v, w, u, &p).map(|(d, _)| d));
    }

    #[test]
    fn orric_value_grows_with_budget(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, n) = (rng.gen_range(1..=10), rng.gen_range(1..=10));
        let p = common::random_profiles(&mut rng, m, n, false);
        let (v, w) = (rng.gen_range(0.0..2.0), rng.gen_range(0.01..2.0));
        let mut budgets: Vec<f64> =
            (0..8).map(|_| rng.gen_range(p.c_min_infer()..=p.c_top_pair() * 1.1)).collect();
        budgets.sort_by(f64::total_cmp);
        let values: Vec<f64> = budgets
            .iter()
            .map(|&u| orric_step(&common::weights(v, w, u), &p).unwrap().value(v, w, &p))
            .collect();
        prop_assert!(values.windows(2).all(|x| x[0] <= x[1]));
    }

    #[test]
    fn zero_retraining_weight_is_inference_only(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, n) = (rng.gen_range(1..=10), rng.gen_range(1..=10));
        let coarse = rng.gen_bool(0.5);
        let p = common::random_profiles(&mut rng, m, n, coarse);
        let u = rng.gen_range(p.c_min_infer()..=p.c_top_pair() * 1.2);
        let orric = orric_step(&common::weights(0.0, rng.gen_range(0.01..2.0), u), &p).unwrap();
        let io = heuristic_step(Heuristic::InferenceOnly, 1, 1, u, &p).unwrap();
        prop_assert_eq!(orric, io);
    }

    #[test]
    fn heuristics_respect_the_budget(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (m, n) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let coarse = rng.gen_bool(0.5);
        let p = common::random_profiles(&mut rng, m, n, coarse);
        let horizon = rng.gen_range(1..=20);
        for t in 1..=horizon {
            let u = rng.gen_range(p.c_min_infer()..=p.c_top_pair() * 1.2);
            for h in [
                Heuristic::InferenceOnly,
                Heuristic::InferenceGreedy,
                Heuristic::KnowledgeDistillation,
                Heuristic::FocusShift,
            ] {
                let d = heuristic_step(h, t, horizon, u, &p).unwrap();
                prop_assert!(fits(d.cost(&p), u), "{:?} overspent at t = {}", h, t);
            }
        }
    }

    #[test]
    fn objective_matches_direct_formula(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (p, model, trace) = common::random_instance(&mut rng, 5, 5, 30);
        for policy in Policy::ALL {
            let run = run_policy(policy, &trace, &p, &model).unwrap();
            let direct = common::direct_objective(&run.decisions, &trace, &p, &model);
            prop_assert!((run.total - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            let again = evaluate_objective(&run.decisions, &trace, &p, &model).unwrap();
            prop_assert_eq!(again.total, run.total);
            prop_assert_eq!(*run.cumulative_perf.last().unwrap(), run.total);
            for (used, cap) in run.per_slot_budget_use.iter().zip(&run.capacity) {
                prop_assert!(fits(*used, *cap));
            }
        }
    }

    #[test]
    fn oracle_dominates_every_policy(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (p, model, trace) = common::random_instance(&mut rng, 4, 4, 6);
        let opt = offline_optimal(&trace, &p, &model, DEFAULT_ORACLE_CAP).unwrap();
        for (used, cap) in opt.per_slot_budget_use.iter().zip(&opt.capacity) {
            prop_assert!(fits(*used, *cap));
        }
        for policy in Policy::ALL {
            let run = run_policy(policy, &trace, &p, &model).unwrap();
            prop_assert!(run.total <= opt.total, "{} beat the oracle", policy);
        }
    }

    #[test]
    fn schedule_equals_per_slot_weights(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (p, model, trace) = common::random_instance(&mut rng, 4, 4, 60);
        let horizon = trace.horizon();
        let s = weight_schedule(horizon, &model, trace.d_min(), trace.d_max(), p.a_min_infer()).unwrap();
        for t in 1..=horizon {
            let w = compute_weights(t, horizon, &model, trace.d_min(), trace.d_max(), p.a_min_infer()).unwrap();
            prop_assert_eq!(s[t - 1], w);
            prop_assert!(w.v >= 0.0 && w.lambda >= 0.0);
        }
        prop_assert_eq!(s[horizon - 1].v, 0.0);
        prop_assert!(s.windows(2).all(|x| x[0].v >= x[1].v));
    }

    #[test]
    fn model_invariants(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let domain = rng.gen_range(0.05..=1.0);
        let m = common::random_model(&mut rng, domain);
        let c = m.curve();
        prop_assert!(m.l() >= 0.0 && m.l() <= c.derivative(domain) + 1e-9);
        prop_assert!(m.f_at_zero() > 0.0 && m.f_at_max() <= 1.0);
        prop_assert_eq!(m.g_at_max(), m.f_at_max() - m.l() * domain);
        prop_assert!(m.check_lemma1(1024));
        let xs: Vec<f64> = (0..=256).map(|k| domain * k as f64 / 256.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| c.value(x)).collect();
        prop_assert!(ys.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!(ys.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] <= 1e-9));
        prop_assert!(m.eval(domain * 1.5).is_err());
    }

    #[test]
    fn bound_invariants(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (p, model, trace) = common::random_instance(&mut rng, 6, 6, 4);
        let mut prev_tight = f64::INFINITY;
        for horizon in 1..=50 {
            let b = compute_bounds(&model, &p, trace.d_min(), trace.d_max(), horizon).unwrap();
            prop_assert!(b.alpha >= 0.0);
            prop_assert!(b.cr_inference_only > 0.0 && b.cr_inference_only <= 1.0);
            prop_assert!(b.tight_cr_io_upper >= b.cr_inference_only - 1e-15);
            prop_assert!(b.tight_cr_io_upper <= 1.0 + 1e-15);
            prop_assert!(b.tight_cr_io_upper <= prev_tight + 1e-15);
            prop_assert!(b.cr_orric >= b.cr_inference_only);
            prop_assert_eq!(b.corollary_threshold.is_some(), b.alpha > 0.0);
            prev_tight = b.tight_cr_io_upper;
        }
    }

    #[test]
    fn traces_are_seeded_and_in_range(seed in any::<u64>(), horizon in 1usize..200) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = common::random_profiles(&mut rng, 3, 3, false);
        let (d_lo, d_hi) = (500.0, 1500.0);
        let c_lo = d_hi * p.c_min_infer();
        let c_hi = c_lo + d_hi * p.c_top_pair();
        let spec = TraceSpec {
            horizon,
            d_law: DataLaw::Uniform { d_min: d_lo, d_max: d_hi },
            c_law: CapacityLaw::Uniform { c_lo, c_hi },
            seed,
        };
        let a = generate_trace(&spec, &p).unwrap();
        prop_assert_eq!(&a, &generate_trace(&spec, &p).unwrap());
        prop_assert!(a.d().iter().all(|&d| (d_lo..=d_hi).contains(&d)));
        prop_assert!(a.c().iter().all(|&c| (c_lo..=c_hi).contains(&c)));
        // per-slot draws do not depend on the horizon
        let longer = generate_trace(&TraceSpec { horizon: horizon + 7, ..spec }, &p).unwrap();
        prop_assert_eq!(&longer.d()[..horizon], a.d());
        prop_assert_eq!(&longer.c()[..horizon], a.c());
    }

    #[test]
    fn focus_share_decays(horizon in 1usize..500) {
        let shares: Vec<f64> = (1..=horizon).map(|t| focus_share(t, horizon)).collect();
        prop_assert!(shares.iter().all(|s| (0.0..=1.0).contains(s)));
        prop_assert!(shares.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(shares[horizon - 1], 0.0);
    }
}
