//! Per-slot decision rules.
//!
//! ORRIC solves the decoupled slot problem
//! `max V_t A_i^T + W_t A_j^I  s.t.  C_i^T + C_j^I <= U_t`
//! with a two-pointer scan over the cost-sorted menus. The four heuristics
//! are the regimes ORRIC collapses to under sufficient, limited and scarce
//! compute.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numeric::{fits, KahanSum};
use crate::{AccuracyModel, Error, ProfileSet, Result};

/// Slot weights of the decoupled objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleWeights {
    /// Retraining weight `V_t`; zero in the last slot.
    pub v: f64,
    /// Inference weight `W_t`: `g(A_max^T)` at `t = 1`, `f(A_max^T)` after.
    pub w: f64,
    /// Regularizer `lambda_t`. Diagnostic only, already folded into `v`.
    pub lambda: f64,
    /// Per-sample budget `U_t = C(t) / D(t)`.
    pub u: f64,
}

impl ScheduleWeights {
    pub fn with_budget(self, u: f64) -> Self {
        Self { u, ..self }
    }
}

/// One slot's choice, as 1-based indices into the pruned menus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decision {
    pub retrain_index: usize,
    pub infer_index: usize,
}

impl Decision {
    pub fn new(retrain_index: usize, infer_index: usize) -> Self {
        Self {
            retrain_index,
            infer_index,
        }
    }

    /// Per-sample cost `C_i^T + C_j^I`.
    pub fn cost(&self, profiles: &ProfileSet) -> f64 {
        profiles.retrain_at(self.retrain_index).cost + profiles.infer_at(self.infer_index).cost
    }

    /// Slot objective `v A_i^T + w A_j^I`.
    pub fn value(&self, v: f64, w: f64, profiles: &ProfileSet) -> f64 {
        v * profiles.retrain_at(self.retrain_index).gain + w * profiles.infer_at(self.infer_index).profit
    }
}

/// `V_t`, `W_t` and `lambda_t` for slot `t` of a horizon of `horizon` slots.
/// The returned budget `u` is zero; fill it per slot with
/// [`ScheduleWeights::with_budget`].
pub fn compute_weights(
    t: usize,
    horizon: usize,
    model: &AccuracyModel,
    d_min: f64,
    d_max: f64,
    a_min_infer: f64,
) -> Result<ScheduleWeights> {
    if t == 0 || t > horizon {
        return Err(Error::SlotOutOfRange { t, horizon });
    }
    check_weight_inputs(d_min, d_max, a_min_infer)?;
    let mut harmonic = KahanSum::new();
    for tau in (t..horizon).rev() {
        harmonic.add(1.0 / tau as f64);
    }
    Ok(weights_from(t, harmonic.value(), model, d_min, d_max, a_min_infer))
}

/// Weights for every slot `1..=horizon`, identical to calling
/// [`compute_weights`] per slot but in linear time.
pub fn weight_schedule(
    horizon: usize,
    model: &AccuracyModel,
    d_min: f64,
    d_max: f64,
    a_min_infer: f64,
) -> Result<Vec<ScheduleWeights>> {
    check_weight_inputs(d_min, d_max, a_min_infer)?;
    let mut out = Vec::with_capacity(horizon);
    let mut harmonic = KahanSum::new();
    for t in (1..=horizon).rev() {
        if t < horizon {
            harmonic.add(1.0 / t as f64);
        }
        out.push(weights_from(t, harmonic.value(), model, d_min, d_max, a_min_infer));
    }
    out.reverse();
    Ok(out)
}

fn check_weight_inputs(d_min: f64, d_max: f64, a_min_infer: f64) -> Result<()> {
    if !(d_min > 0.0 && d_min <= d_max && d_max.is_finite()) {
        return Err(Error::InvalidTrace(format!(
            "data bounds [{d_min}, {d_max}] must satisfy 0 < d_min <= d_max"
        )));
    }
    if !(a_min_infer > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "A_min^I = {a_min_infer} must be positive"
        )));
    }
    Ok(())
}

fn weights_from(
    t: usize,
    harmonic_tail: f64,
    model: &AccuracyModel,
    d_min: f64,
    d_max: f64,
    a_min_infer: f64,
) -> ScheduleWeights {
    let scale = model.l() * d_min * a_min_infer / d_max;
    ScheduleWeights {
        v: scale * harmonic_tail,
        w: if t == 1 { model.g_at_max() } else { model.f_at_max() },
        lambda: scale / t as f64,
        u: 0.0,
    }
}

/// ORRIC's slot decision.
///
/// Scans `i` upward from 1 and `j` downward from `N`, advancing `i` on a
/// feasible pair and `j` otherwise; the first strictly best pair seen wins.
/// Visits at most `M + N` pairs.
pub fn orric_step(weights: &ScheduleWeights, profiles: &ProfileSet) -> Result<Decision> {
    orric_scan(weights, profiles).0
}

/// [`orric_step`] plus the number of loop iterations it took.
pub fn orric_scan(weights: &ScheduleWeights, profiles: &ProfileSet) -> (Result<Decision>, usize) {
    let retrain = profiles.retrain();
    let infer = profiles.infer();
    let (mut i, mut j) = (0usize, infer.len());
    let mut best: Option<(Decision, f64)> = None;
    let mut steps = 0;
    while i < retrain.len() && j >= 1 {
        steps += 1;
        if fits(retrain[i].cost + infer[j - 1].cost, weights.u) {
            let value = weights.v * retrain[i].gain + weights.w * infer[j - 1].profit;
            if best.is_none_or(|(_, k)| value > k) {
                best = Some((Decision::new(i + 1, j), value));
            }
            i += 1;
        } else {
            j -= 1;
        }
    }
    let result = best
        .map(|(d, _)| d)
        .ok_or(Error::NoFeasiblePair { budget: weights.u });
    (result, steps)
}

/// The four heuristics ORRIC transitions between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heuristic {
    /// Never retrain; best affordable inference.
    InferenceOnly,
    /// Best affordable inference first, leftover budget to retraining.
    InferenceGreedy,
    /// Retraining first, leftover budget to inference.
    KnowledgeDistillation,
    /// Retraining share of the spare budget decays linearly to zero at `T`.
    FocusShift,
}

/// Any schedulable policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Orric,
    Heuristic(Heuristic),
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Orric,
        Policy::Heuristic(Heuristic::InferenceOnly),
        Policy::Heuristic(Heuristic::InferenceGreedy),
        Policy::Heuristic(Heuristic::KnowledgeDistillation),
        Policy::Heuristic(Heuristic::FocusShift),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Orric => "orric",
            Policy::Heuristic(Heuristic::InferenceOnly) => "inference-only",
            Policy::Heuristic(Heuristic::InferenceGreedy) => "inference-greedy",
            Policy::Heuristic(Heuristic::KnowledgeDistillation) => "knowledge-distillation",
            Policy::Heuristic(Heuristic::FocusShift) => "focus-shift",
        }
    }

    pub const INFERENCE_ONLY: Policy = Policy::Heuristic(Heuristic::InferenceOnly);
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Unknown {
                kind: "policy",
                name: s.to_string(),
            })
    }
}

/// Largest 1-based index whose entry satisfies a predicate that is monotone
/// (true on a prefix) over a cost-sorted menu.
fn last_fitting(len: usize, pred: impl Fn(usize) -> bool) -> Option<usize> {
    (1..=len).rev().find(|&k| pred(k))
}

/// Slot decision of one of the heuristics at slot `t` of `horizon`.
pub fn heuristic_step(
    policy: Heuristic,
    t: usize,
    horizon: usize,
    u: f64,
    profiles: &ProfileSet,
) -> Result<Decision> {
    if t == 0 || t > horizon {
        return Err(Error::SlotOutOfRange { t, horizon });
    }
    let no_pair = || Error::NoFeasiblePair { budget: u };
    let (m, n) = (profiles.m(), profiles.n());
    let rc = |i: usize| profiles.retrain_at(i).cost;
    let ic = |j: usize| profiles.infer_at(j).cost;
    let c_min = profiles.c_min_infer();

    let best_infer_given = |i: usize| last_fitting(n, |j| fits(rc(i) + ic(j), u)).ok_or_else(no_pair);

    match policy {
        Heuristic::InferenceOnly => Ok(Decision::new(1, best_infer_given(1)?)),
        Heuristic::InferenceGreedy => {
            let j = best_infer_given(1)?;
            let i = last_fitting(m, |i| fits(rc(i) + ic(j), u)).unwrap_or(1);
            Ok(Decision::new(i, j))
        }
        Heuristic::KnowledgeDistillation => {
            let i = last_fitting(m, |i| fits(rc(i) + c_min, u)).ok_or_else(no_pair)?;
            Ok(Decision::new(i, best_infer_given(i)?))
        }
        Heuristic::FocusShift => {
            if !fits(c_min, u) {
                return Err(no_pair());
            }
            let share = focus_share(t, horizon);
            let retrain_budget = share * (u - c_min).max(0.0);
            let i = last_fitting(m, |i| rc(i) == 0.0 || fits(rc(i), retrain_budget)).unwrap_or(1);
            Ok(Decision::new(i, best_infer_given(i)?))
        }
    }
}

/// Focus-Shift retraining share `(T - t) / (T - 1)`; zero for `T = 1`.
pub fn focus_share(t: usize, horizon: usize) -> f64 {
    if horizon <= 1 {
        0.0
    } else {
        (horizon - t) as f64 / (horizon - 1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{prune_dominated, Curve, InferConfig, RetrainConfig};

    fn small() -> ProfileSet {
        prune_dominated(
            &[RetrainConfig::NONE, RetrainConfig::new(1.0, 10.0)],
            &[InferConfig::new(0.6, 2.0), InferConfig::new(1.0, 5.0)],
            false,
        )
        .unwrap()
    }

    fn weights(v: f64, w: f64, u: f64) -> ScheduleWeights {
        ScheduleWeights { v, w, lambda: 0.0, u }
    }

    fn replay_model(f_max: f64) -> AccuracyModel {
        // f(x) = (f_max - 0.01) + 0.01 x: f(1) = f_max, L = 0.01
        AccuracyModel::new(
            Curve::Linear { intercept: f_max - 0.01, slope: 0.01 },
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn last_slot_has_zero_retraining_weight() {
        let m = replay_model(0.7957);
        for horizon in [1, 2, 7, 100] {
            let w = compute_weights(horizon, horizon, &m, 3.0, 9.0, 0.4).unwrap();
            assert_eq!(w.v, 0.0);
        }
    }

    #[test]
    fn first_slot_weight_two_slots() {
        let m = replay_model(0.7957);
        let w = compute_weights(1, 2, &m, 1000.0, 1000.0, 0.5647).unwrap();
        assert!((w.v - 0.005647).abs() < 1e-15);
        assert!((w.lambda - 0.005647).abs() < 1e-15);
    }

    #[test]
    fn inference_weights() {
        let m = replay_model(0.7957);
        let w1 = compute_weights(1, 2, &m, 1.0, 1.0, 1.0).unwrap();
        let w2 = compute_weights(2, 2, &m, 1.0, 1.0, 1.0).unwrap();
        assert!((w1.w - 0.7857).abs() < 1e-12);
        assert!((w2.w - 0.7957).abs() < 1e-12);
    }

    #[test]
    fn slot_range_checked() {
        let m = replay_model(0.8);
        assert!(compute_weights(0, 3, &m, 1.0, 1.0, 1.0).is_err());
        assert!(compute_weights(4, 3, &m, 1.0, 1.0, 1.0).is_err());
        assert!(heuristic_step(Heuristic::FocusShift, 4, 3, 10.0, &small()).is_err());
    }

    #[test]
    fn schedule_matches_pointwise() {
        let m = replay_model(0.8);
        let sched = weight_schedule(50, &m, 2.0, 5.0, 0.3).unwrap();
        for (k, w) in sched.iter().enumerate() {
            assert_eq!(*w, compute_weights(k + 1, 50, &m, 2.0, 5.0, 0.3).unwrap());
        }
        assert!(sched.windows(2).all(|p| p[1].v <= p[0].v));
        assert!(sched[1..].iter().all(|w| w.w == sched[1].w));
    }

    #[test]
    fn orric_sufficient_and_scarce() {
        let p = small();
        assert_eq!(orric_step(&weights(0.3, 1.0, 15.0), &p).unwrap(), Decision::new(2, 2));
        assert_eq!(orric_step(&weights(0.3, 1.0, 2.0), &p).unwrap(), Decision::new(1, 1));
        assert!(matches!(
            orric_step(&weights(0.3, 1.0, 1.9), &p),
            Err(Error::NoFeasiblePair { .. })
        ));
    }

    #[test]
    fn orric_small_instance() {
        let (d, steps) = orric_scan(&weights(0.5, 1.0, 12.0), &small());
        assert_eq!(d.unwrap(), Decision::new(2, 1));
        assert!(steps <= 4);
    }

    #[test]
    fn heuristics_on_small_instance() {
        let p = small();
        let step = |h, t, horizon| heuristic_step(h, t, horizon, 12.0, &p).unwrap();
        assert_eq!(step(Heuristic::InferenceOnly, 1, 2), Decision::new(1, 2));
        assert_eq!(step(Heuristic::InferenceGreedy, 1, 2), Decision::new(1, 2));
        assert_eq!(step(Heuristic::FocusShift, 1, 2), Decision::new(2, 1));
        assert_eq!(step(Heuristic::FocusShift, 2, 2), Decision::new(1, 2));
        assert_eq!(step(Heuristic::KnowledgeDistillation, 1, 2), Decision::new(2, 1));
        assert_eq!(
            heuristic_step(Heuristic::KnowledgeDistillation, 1, 1, 15.0, &p).unwrap(),
            Decision::new(2, 2)
        );
        assert_eq!(focus_share(1, 1), 0.0);
        assert_eq!(focus_share(1, 5), 1.0);
        assert_eq!(focus_share(5, 5), 0.0);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("greedy".parse::<Policy>().is_err());
    }
}
