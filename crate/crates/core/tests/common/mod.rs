#![allow(dead_code)]

use orric_core::numeric::fits;
use orric_core::{
    evaluate_objective, prune_dominated, AccuracyModel, Curve, Decision, InferConfig, ProfileSet,
    RetrainConfig, ScheduleWeights, Trace,
};
use rand::rngs::StdRng;
use rand::Rng;

/// `k` strictly increasing values, either continuous in `(lo, hi)` or on a
/// coarse grid so that exact objective ties show up.
pub fn increasing(rng: &mut StdRng, k: usize, lo: f64, hi: f64, coarse: bool) -> Vec<f64> {
    if coarse {
        let steps = (2 * k).max(20);
        let mut picks = rand::seq::index::sample(rng, steps, k).into_vec();
        picks.sort_unstable();
        return picks
            .into_iter()
            .map(|s| lo + (hi - lo) * (s + 1) as f64 / steps as f64)
            .collect();
    }
    loop {
        let mut xs: Vec<f64> = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        if xs.len() == k && xs[0] > 0.0 {
            return xs;
        }
    }
}

/// Random menus already satisfying strict monotonicity, with the zero
/// retraining configuration first.
pub fn random_profiles(rng: &mut StdRng, m: usize, n: usize, coarse: bool) -> ProfileSet {
    let mut retrain = vec![RetrainConfig::NONE];
    if m > 1 {
        let costs = increasing(rng, m - 1, 0.0, 10.0, coarse);
        let mut gains = increasing(rng, m - 1, 0.0, 1.0, coarse);
        if rng.gen_bool(0.5) {
            // A_max^T = 1 half of the time
            let top = gains[m - 2];
            gains.iter_mut().for_each(|g| *g /= top);
        }
        retrain.extend(costs.iter().zip(&gains).map(|(&c, &g)| RetrainConfig::new(g, c)));
    }
    let costs = increasing(rng, n, 0.0, 10.0, coarse);
    let profits = increasing(rng, n, 0.0, 1.0, coarse);
    let infer: Vec<InferConfig> = costs
        .iter()
        .zip(&profits)
        .map(|(&c, &p)| InferConfig::new(p, c))
        .collect();
    let set = prune_dominated(&retrain, &infer, false).unwrap();
    assert_eq!((set.m(), set.n()), (m, n));
    set
}

/// Exhaustive slot solver: best `v A_i + w A_j` over all feasible pairs,
/// ties to the smallest `i`, then the largest `j`.
pub fn exhaustive_step(v: f64, w: f64, u: f64, p: &ProfileSet) -> Option<(Decision, f64)> {
    let mut best: Option<(Decision, f64)> = None;
    for i in 1..=p.m() {
        for j in (1..=p.n()).rev() {
            if !fits(p.retrain_at(i).cost + p.infer_at(j).cost, u) {
                continue;
            }
            let value = v * p.retrain_at(i).gain + w * p.infer_at(j).profit;
            if best.is_none_or(|(_, b)| value > b) {
                best = Some((Decision::new(i, j), value));
            }
        }
    }
    best
}

pub fn weights(v: f64, w: f64, u: f64) -> ScheduleWeights {
    ScheduleWeights { v, w, lambda: 0.0, u }
}

/// Random certified model on `[0, domain_max]` from one of the five families.
pub fn random_model(rng: &mut StdRng, domain_max: f64) -> AccuracyModel {
    loop {
        let family = rng.gen_range(0..5);
        let curve = match family {
            0 => {
                let intercept = rng.gen_range(0.1..0.6);
                let slope = rng.gen_range(0.01..1.0) * (1.0 - intercept) / domain_max;
                Curve::Linear { intercept, slope }
            }
            1 => {
                let c = rng.gen_range(0.5..1.0);
                let shift: f64 = rng.gen_range(0.05..1.0);
                let alpha = rng.gen_range(0.2..2.0);
                let a = rng.gen_range(0.1..0.9) * c * shift.powf(alpha);
                Curve::ShiftedPower { c, a, alpha, shift }
            }
            2 => {
                let c = rng.gen_range(0.5..1.0);
                let a = rng.gen_range(0.05..c - 0.05);
                let rate = rng.gen_range(0.1..5.0);
                Curve::ExponentialSaturation { c, a, rate }
            }
            3 => {
                let shift: f64 = rng.gen_range(0.1..1.0);
                let b = rng.gen_range(0.01..0.2);
                let f0 = rng.gen_range(0.2..0.7);
                Curve::ShiftedLog { a: f0 - b * shift.ln(), b, shift }
            }
            _ => Curve::Constant { value: rng.gen_range(0.3..1.0) },
        };
        let l_override = match curve {
            Curve::Constant { .. } => Some(0.0),
            _ if rng.gen_bool(0.3) => Some(curve.derivative(domain_max) * rng.gen_range(0.05..1.0)),
            _ => None,
        };
        if let Ok(m) = AccuracyModel::new(curve, domain_max, l_override) {
            return m;
        }
    }
}

/// Random feasible instance: menus, model matched to `A_max^T`, and a trace
/// whose capacity ranges from scarce to beyond sufficient.
pub fn random_instance(
    rng: &mut StdRng,
    max_m: usize,
    max_n: usize,
    max_t: usize,
) -> (ProfileSet, AccuracyModel, Trace) {
    let m = rng.gen_range(2..=max_m);
    let n = rng.gen_range(1..=max_n);
    let horizon = rng.gen_range(1..=max_t);
    let coarse = rng.gen_bool(0.3);
    let p = random_profiles(rng, m, n, coarse);
    let model = random_model(rng, p.a_max_retrain());
    let d_lo = rng.gen_range(1.0..10.0);
    let d_hi = if rng.gen_bool(0.4) { d_lo } else { d_lo * rng.gen_range(1.0..3.0) };
    let mut d = Vec::with_capacity(horizon);
    let mut c = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let dt = if d_hi > d_lo { rng.gen_range(d_lo..=d_hi) } else { d_lo };
        let per_sample = rng.gen_range(p.c_min_infer()..=p.c_top_pair() * 1.1);
        d.push(dt);
        c.push(dt * per_sample);
    }
    let trace = Trace::new(d, c).unwrap();
    (p, model, trace)
}

/// Best total over every `(i, j)` sequence, by full enumeration.
pub fn naive_optimum(trace: &Trace, p: &ProfileSet, model: &AccuracyModel) -> f64 {
    let pairs: Vec<Decision> = (1..=p.m())
        .flat_map(|i| (1..=p.n()).map(move |j| Decision::new(i, j)))
        .collect();
    let horizon = trace.horizon();
    let mut idx = vec![0usize; horizon];
    let mut best = f64::NEG_INFINITY;
    loop {
        let seq: Vec<Decision> = idx.iter().map(|&k| pairs[k]).collect();
        if let Ok(r) = evaluate_objective(&seq, trace, p, model) {
            best = best.max(r.total);
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == horizon {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] < pairs.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Plain restatement of the objective, independent of the engine's
/// accumulator: `sum_t f(avg past gain) A_j D(t)` with `f(0)` at `t = 1`.
pub fn direct_objective(seq: &[Decision], trace: &Trace, p: &ProfileSet, model: &AccuracyModel) -> f64 {
    let mut total = 0.0;
    for t in 0..seq.len() {
        let (mut z, mut s) = (0.0, 0.0);
        for tau in 0..t {
            z += trace.d()[tau] * p.retrain_at(seq[tau].retrain_index).gain;
            s += trace.d()[tau];
        }
        let x = if t == 0 { 0.0 } else { (z / s).min(model.domain_max()) };
        total += model.curve().value(x) * p.infer_at(seq[t].infer_index).profit * trace.d()[t];
    }
    total
}
