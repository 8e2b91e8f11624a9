//! Browser bindings for the scheduler demo page in `www/`.
//!
//! Every export returns a JSON string; errors surface as JS exceptions.

use orric_core::numeric::round_sig12;
use orric_core::{
    build_replay, compute_bounds, compute_weights, generate_trace, orric_step, prune_dominated,
    run_policy, AccuracyModel, Curve, InferConfig, Policy, ReplaySpec, RetrainConfig,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rounded(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(round_sig12).collect()
}

#[derive(Serialize)]
struct PolicyCurve {
    name: &'static str,
    total: f64,
    cumulative: Vec<f64>,
    retrain_gain: Vec<f64>,
    infer_index: Vec<usize>,
}

#[derive(Serialize)]
struct Simulation {
    corruption: String,
    horizon: usize,
    capacity: Vec<f64>,
    c1: f64,
    c2: f64,
    policies: Vec<PolicyCurve>,
}

/// All five policies on a replay trace.
pub fn simulate_json(corruption: &str, horizon: usize, seed: u64) -> Out {
    let mut spec = ReplaySpec::new(corruption);
    spec.horizon = horizon;
    spec.seed = seed;
    let r = build_replay(&spec).map_err(fail)?;
    let trace = generate_trace(&r.trace_spec, &r.profiles).map_err(fail)?;
    let mut policies = Vec::new();
    for policy in Policy::ALL {
        let run = run_policy(policy, &trace, &r.profiles, &r.model).map_err(fail)?;
        policies.push(PolicyCurve {
            name: policy.name(),
            total: round_sig12(run.total),
            cumulative: rounded(&run.cumulative_perf),
            retrain_gain: rounded(&run.retrain_gains(&r.profiles)),
            infer_index: run.decisions.iter().map(|d| d.infer_index).collect(),
        });
    }
    let sim = Simulation {
        corruption: corruption.to_string(),
        horizon,
        capacity: rounded(trace.c()),
        c1: r.c1,
        c2: r.c2,
        policies,
    };
    serde_json::to_string(&sim).map_err(fail)
}

#[derive(Serialize)]
struct RatioCurves {
    horizon: Vec<usize>,
    inference_only: f64,
    tight_inference_only: Vec<f64>,
    orric: Vec<f64>,
    orric_b: Vec<f64>,
    alpha: f64,
    threshold: Option<f64>,
}

/// Competitive-ratio guarantees against `T` for a linear curve from `f0` to
/// `f_max` with drift bound `l`, data spread `d_min / d_max` and weakest
/// inference profit `a_min`.
pub fn ratio_curves_json(f0: f64, f_max: f64, l: f64, d_spread: f64, a_min: f64, t_max: usize) -> Out {
    let model = AccuracyModel::new(
        Curve::Linear { intercept: f0, slope: f_max - f0 },
        1.0,
        Some(l),
    )
    .map_err(fail)?;
    let profiles = prune_dominated(
        &[RetrainConfig::NONE, RetrainConfig::new(1.0, 1.0)],
        &[InferConfig::new(a_min, 1.0), InferConfig::new(1.0, 2.0)],
        false,
    )
    .map_err(fail)?;
    if !(d_spread > 0.0 && d_spread <= 1.0) {
        return Err(format!("data spread {d_spread} must lie in (0, 1]"));
    }
    let mut out = RatioCurves {
        horizon: Vec::new(),
        inference_only: f0 / f_max,
        tight_inference_only: Vec::new(),
        orric: Vec::new(),
        orric_b: Vec::new(),
        alpha: 0.0,
        threshold: None,
    };
    for t in 1..=t_max.max(1) {
        let b = compute_bounds(&model, &profiles, d_spread, 1.0, t).map_err(fail)?;
        out.horizon.push(t);
        out.tight_inference_only.push(b.tight_cr_io_upper);
        out.orric.push(b.cr_orric);
        out.orric_b.push(b.cr_orric_b);
        out.alpha = b.alpha;
        out.threshold = b.corollary_threshold;
    }
    serde_json::to_string(&out).map_err(fail)
}

#[derive(Serialize)]
struct DecisionMap {
    budgets: Vec<f64>,
    retrain_index: Vec<usize>,
    infer_index: Vec<usize>,
    m: usize,
    n: usize,
    v: f64,
    w: f64,
}

/// ORRIC's slot-`t` decision across `steps` per-sample budgets from the
/// cheapest inference to the top pair, for one replay menu.
pub fn decision_map_json(corruption: &str, t: usize, horizon: usize, steps: usize) -> Out {
    let mut spec = ReplaySpec::new(corruption);
    spec.horizon = horizon;
    let r = build_replay(&spec).map_err(fail)?;
    let p = &r.profiles;
    let weights = compute_weights(t, horizon, &r.model, spec.d, spec.d, p.a_min_infer()).map_err(fail)?;
    let (lo, hi) = (p.c_min_infer(), p.c_top_pair());
    let steps = steps.max(2);
    let mut map = DecisionMap {
        budgets: Vec::with_capacity(steps),
        retrain_index: Vec::with_capacity(steps),
        infer_index: Vec::with_capacity(steps),
        m: p.m(),
        n: p.n(),
        v: weights.v,
        w: weights.w,
    };
    for k in 0..steps {
        let u = lo + (hi - lo) * k as f64 / (steps - 1) as f64;
        let d = orric_step(&weights.with_budget(u), p).map_err(fail)?;
        map.budgets.push(round_sig12(u));
        map.retrain_index.push(d.retrain_index);
        map.infer_index.push(d.infer_index);
    }
    serde_json::to_string(&map).map_err(fail)
}

fn js(r: Out) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(corruption: &str, horizon: u32, seed: u32) -> Result<String, JsError> {
    js(simulate_json(corruption, horizon as usize, seed as u64))
}

#[wasm_bindgen]
pub fn ratio_curves(f0: f64, f_max: f64, l: f64, d_spread: f64, a_min: f64, t_max: u32) -> Result<String, JsError> {
    js(ratio_curves_json(f0, f_max, l, d_spread, a_min, t_max as usize))
}

#[wasm_bindgen]
pub fn decision_map(corruption: &str, t: u32, horizon: u32, steps: u32) -> Result<String, JsError> {
    js(decision_map_json(corruption, t as usize, horizon as usize, steps as usize))
}

#[wasm_bindgen]
pub fn corruptions() -> String {
    serde_json::to_string(&orric_core::scenario::corruptions()).unwrap_or_default()
}
