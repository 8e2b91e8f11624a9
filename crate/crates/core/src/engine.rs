//! Trace execution and the exact long-term objective.
//!
//! Slot `t` earns `f(z_{t-1} / S_{t-1}) * A_j^I * D(t)` where `z` is the
//! data-weighted sum of past retraining gains and `S` the past data volume;
//! the first slot has no history and earns `f(0) * A_j^I * D(1)`.

use serde::Serialize;

use crate::numeric::{fits, KahanSum};
use crate::policies::{heuristic_step, orric_step, weight_schedule, Heuristic};
use crate::{AccuracyModel, Decision, Error, Policy, ProfileSet, Result};

/// Default cap on the number of retraining sequences the oracle enumerates.
pub const DEFAULT_ORACLE_CAP: u64 = 10_000_000;

/// Per-slot data volumes and capacities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    d: Vec<f64>,
    c: Vec<f64>,
    d_min: f64,
    d_max: f64,
}

impl Trace {
    /// Trace whose declared data bounds are the observed extremes.
    pub fn new(d: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let d_min = d.iter().copied().fold(f64::INFINITY, f64::min);
        let d_max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::with_bounds(d, c, d_min, d_max)
    }

    pub fn with_bounds(d: Vec<f64>, c: Vec<f64>, d_min: f64, d_max: f64) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidTrace("horizon must be at least one slot".into()));
        }
        if d.len() != c.len() {
            return Err(Error::InvalidTrace(format!(
                "{} data volumes but {} capacities",
                d.len(),
                c.len()
            )));
        }
        if !(d_min > 0.0 && d_min <= d_max && d_max.is_finite()) {
            return Err(Error::InvalidTrace(format!(
                "data bounds [{d_min}, {d_max}] must satisfy 0 < d_min <= d_max"
            )));
        }
        if let Some((t, x)) = d
            .iter()
            .enumerate()
            .find(|(_, x)| !(**x >= d_min && **x <= d_max))
        {
            return Err(Error::InvalidTrace(format!(
                "slot {}: D = {x} outside [{d_min}, {d_max}]",
                t + 1
            )));
        }
        if let Some((t, x)) = c.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidTrace(format!("slot {}: C = {x} is invalid", t + 1)));
        }
        Ok(Self { d, c, d_min, d_max })
    }

    pub fn horizon(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Per-sample budget `U_t = C(t) / D(t)` for 1-based `t`.
    pub fn budget(&self, t: usize) -> f64 {
        self.c[t - 1] / self.d[t - 1]
    }

    /// Checks that every slot admits the cheapest inference configuration.
    pub fn check_feasible(&self, profiles: &ProfileSet) -> Result<()> {
        for t in 1..=self.horizon() {
            let budget = self.budget(t);
            if !fits(profiles.c_min_infer(), budget) {
                return Err(Error::Infeasible { t, budget });
            }
        }
        Ok(())
    }
}

/// Outcome of executing a decision sequence on a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub policy: String,
    pub decisions: Vec<Decision>,
    /// Per-sample budget `U_t` of each slot.
    pub budgets: Vec<f64>,
    pub per_slot_perf: Vec<f64>,
    pub cumulative_perf: Vec<f64>,
    /// `D(t) (C_i^T + C_j^I)`.
    pub per_slot_budget_use: Vec<f64>,
    pub capacity: Vec<f64>,
    /// Average retraining extent `z_{t-1} / S_{t-1}` seen by each slot.
    pub history_ratio: Vec<f64>,
    pub total: f64,
    /// Slots where Knowledge-Distillation could not afford the top pair and
    /// fell back to retraining-first greedy.
    pub degraded_slots: Vec<usize>,
}

impl RunResult {
    pub fn horizon(&self) -> usize {
        self.decisions.len()
    }

    /// Retraining gain chosen at each slot.
    pub fn retrain_gains(&self, profiles: &ProfileSet) -> Vec<f64> {
        self.decisions
            .iter()
            .map(|d| profiles.retrain_at(d.retrain_index).gain)
            .collect()
    }
}

pub(crate) fn check_compatible(profiles: &ProfileSet, model: &AccuracyModel) -> Result<()> {
    let a_max = profiles.a_max_retrain();
    let dm = model.domain_max();
    if (a_max - dm).abs() > 1e-9 * dm.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "model domain_max {dm} differs from the largest retraining gain {a_max}"
        )));
    }
    Ok(())
}

/// Running state of the objective: compensated `z`, `S` and total.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    z: KahanSum,
    d_sum: KahanSum,
    total: KahanSum,
}

impl Accumulator {
    fn ratio(&self, a_max: f64) -> f64 {
        let s = self.d_sum.value();
        if s > 0.0 {
            (self.z.value() / s).clamp(0.0, a_max)
        } else {
            0.0
        }
    }

    /// Books one slot and returns its performance term.
    fn step(&mut self, model: &AccuracyModel, d: f64, gain: f64, profit: f64) -> f64 {
        let perf = model.eval_clamped(self.ratio(model.domain_max())) * profit * d;
        self.total.add(perf);
        self.z.add(d * gain);
        self.d_sum.add(d);
        perf
    }
}

/// Objective of a fixed decision sequence, checking every slot's budget.
pub fn evaluate_objective(
    decisions: &[Decision],
    trace: &Trace,
    profiles: &ProfileSet,
    model: &AccuracyModel,
) -> Result<RunResult> {
    check_compatible(profiles, model)?;
    let horizon = trace.horizon();
    if decisions.len() != horizon {
        return Err(Error::InvalidConfig(format!(
            "{} decisions for a horizon of {horizon}",
            decisions.len()
        )));
    }

    let mut acc = Accumulator::default();
    let mut out = RunResult {
        policy: String::new(),
        decisions: decisions.to_vec(),
        budgets: Vec::with_capacity(horizon),
        per_slot_perf: Vec::with_capacity(horizon),
        cumulative_perf: Vec::with_capacity(horizon),
        per_slot_budget_use: Vec::with_capacity(horizon),
        capacity: trace.c().to_vec(),
        history_ratio: Vec::with_capacity(horizon),
        total: 0.0,
        degraded_slots: Vec::new(),
    };
    for (k, dec) in decisions.iter().enumerate() {
        let t = k + 1;
        if !(1..=profiles.m()).contains(&dec.retrain_index)
            || !(1..=profiles.n()).contains(&dec.infer_index)
        {
            return Err(Error::InvalidConfig(format!(
                "slot {t}: decision ({}, {}) outside a {}x{} menu",
                dec.retrain_index,
                dec.infer_index,
                profiles.m(),
                profiles.n()
            )));
        }
        let d = trace.d()[k];
        let capacity = trace.c()[k];
        let used = d * dec.cost(profiles);
        if !fits(used, capacity) {
            return Err(Error::BudgetExceeded { t, used, capacity });
        }
        out.history_ratio.push(acc.ratio(model.domain_max()));
        let perf = acc.step(
            model,
            d,
            profiles.retrain_at(dec.retrain_index).gain,
            profiles.infer_at(dec.infer_index).profit,
        );
        out.budgets.push(trace.budget(t));
        out.per_slot_perf.push(perf);
        out.cumulative_perf.push(acc.total.value());
        out.per_slot_budget_use.push(used);
    }
    out.total = acc.total.value();
    Ok(out)
}

/// Runs `policy` online over `trace`.
pub fn run_policy(
    policy: Policy,
    trace: &Trace,
    profiles: &ProfileSet,
    model: &AccuracyModel,
) -> Result<RunResult> {
    check_compatible(profiles, model)?;
    trace.check_feasible(profiles)?;
    let horizon = trace.horizon();
    let schedule = match policy {
        Policy::Orric => Some(weight_schedule(
            horizon,
            model,
            trace.d_min(),
            trace.d_max(),
            profiles.a_min_infer(),
        )?),
        Policy::Heuristic(_) => None,
    };

    let mut decisions = Vec::with_capacity(horizon);
    let mut degraded = Vec::new();
    for t in 1..=horizon {
        let u = trace.budget(t);
        let step = match (policy, &schedule) {
            (Policy::Orric, Some(s)) => orric_step(&s[t - 1].with_budget(u), profiles),
            (Policy::Heuristic(h), _) => heuristic_step(h, t, horizon, u, profiles),
            (Policy::Orric, None) => unreachable!(),
        };
        let dec = step.map_err(|e| match e {
            Error::NoFeasiblePair { budget } => Error::Infeasible { t, budget },
            e => e,
        })?;
        if policy == Policy::Heuristic(Heuristic::KnowledgeDistillation)
            && dec != Decision::new(profiles.m(), profiles.n())
        {
            degraded.push(t);
        }
        decisions.push(dec);
    }

    let mut result = evaluate_objective(&decisions, trace, profiles, model)?;
    result.policy = policy.name().to_string();
    result.degraded_slots = degraded;
    Ok(result)
}

/// Number of retraining sequences the oracle would enumerate, `M^T`.
pub fn oracle_size(profiles: &ProfileSet, horizon: usize) -> f64 {
    (profiles.m() as f64).powf(horizon as f64)
}

/// Exact offline optimum of the long-term objective.
///
/// Enumerates every retraining sequence in lexicographic order and pairs each
/// slot with the most profitable inference configuration that still fits:
/// the inference choice only scales its own slot's (positive) term, so this
/// loses nothing. Ties keep the lexicographically smallest sequence.
pub fn offline_optimal(
    trace: &Trace,
    profiles: &ProfileSet,
    model: &AccuracyModel,
    cap: u64,
) -> Result<RunResult> {
    check_compatible(profiles, model)?;
    let horizon = trace.horizon();
    let size = oracle_size(profiles, horizon);
    if size > cap as f64 {
        return Err(Error::EnumerationCap { size, cap });
    }
    trace.check_feasible(profiles)?;

    // best_infer[t][i]: greedy inference index for retraining i at slot t
    let best_infer: Vec<Vec<Option<usize>>> = (1..=horizon)
        .map(|t| {
            let u = trace.budget(t);
            profiles
                .retrain()
                .iter()
                .map(|r| (1..=profiles.n()).rev().find(|&j| fits(r.cost + profiles.infer_at(j).cost, u)))
                .collect()
        })
        .collect();

    let mut search = Search {
        trace,
        profiles,
        model,
        best_infer: &best_infer,
        path: Vec::with_capacity(horizon),
        best: None,
    };
    search.descend(Accumulator::default());
    let (decisions, _) = search
        .best
        .ok_or_else(|| Error::Infeasible { t: 1, budget: trace.budget(1) })?;

    let mut result = evaluate_objective(&decisions, trace, profiles, model)?;
    result.policy = "oracle".to_string();
    Ok(result)
}

struct Search<'a> {
    trace: &'a Trace,
    profiles: &'a ProfileSet,
    model: &'a AccuracyModel,
    best_infer: &'a [Vec<Option<usize>>],
    path: Vec<Decision>,
    best: Option<(Vec<Decision>, f64)>,
}

impl Search<'_> {
    fn descend(&mut self, acc: Accumulator) {
        let k = self.path.len();
        if k == self.trace.horizon() {
            let total = acc.total.value();
            if self.best.as_ref().is_none_or(|(_, b)| total > *b) {
                self.best = Some((self.path.clone(), total));
            }
            return;
        }
        let d = self.trace.d()[k];
        for (idx, r) in self.profiles.retrain().iter().enumerate() {
            let Some(j) = self.best_infer[k][idx] else {
                // costs ascend, so no larger retraining index fits either
                break;
            };
            let mut next = acc;
            next.step(self.model, d, r.gain, self.profiles.infer_at(j).profit);
            self.path.push(Decision::new(idx + 1, j));
            self.descend(next);
            self.path.pop();
        }
    }
}

/// One sample of the mixture gap
/// `E = f(x̄) ȳ - [a f(x1) y1 + (1 - a) f(x2) y2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessPoint {
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
    pub alpha: f64,
    pub e: f64,
}

/// Points showing `f(x) y` is neither convex nor concave, when found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    /// Concavity holds along this segment strictly (`E > 0`), ruling out convexity.
    pub positive: Option<WitnessPoint>,
    /// `E < 0`, ruling out concavity.
    pub negative: Option<WitnessPoint>,
}

impl Witness {
    pub fn found(&self) -> bool {
        self.positive.is_some() && self.negative.is_some()
    }
}

pub const WITNESS_LATTICE: usize = 32;
const WITNESS_TOL: f64 = 1e-12;

pub fn mixture_gap(f: impl Fn(f64) -> f64, x1: f64, x2: f64, y1: f64, y2: f64, alpha: f64) -> f64 {
    let xb = alpha * x1 + (1.0 - alpha) * x2;
    let yb = alpha * y1 + (1.0 - alpha) * y2;
    f(xb) * yb - (alpha * f(x1) * y1 + (1.0 - alpha) * f(x2) * y2)
}

/// Lattice search for both signs of the mixture gap of `f(x) y` on
/// `[x_lo, x_hi] x [y_lo, y_hi]`.
pub fn witness_search(
    f: impl Fn(f64) -> f64,
    (x_lo, x_hi): (f64, f64),
    (y_lo, y_hi): (f64, f64),
) -> Result<Witness> {
    if !(0.0 < y_lo && y_lo < y_hi) || !(x_lo < x_hi) {
        return Err(Error::InvalidConfig(format!(
            "witness box [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}] is degenerate"
        )));
    }
    let n = WITNESS_LATTICE;
    let lattice = |lo: f64, hi: f64| -> Vec<f64> {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    };
    let xs = lattice(x_lo, x_hi);
    let ys = lattice(y_lo, y_hi);
    let alphas: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
    let fx: Vec<f64> = xs.iter().map(|&x| f(x)).collect();

    let mut out = Witness { positive: None, negative: None };
    for (a, &x1) in xs.iter().enumerate() {
        for (b, &x2) in xs.iter().enumerate() {
            if a == b {
                continue;
            }
            for &alpha in &alphas {
                let fxb = f(alpha * x1 + (1.0 - alpha) * x2);
                for &y1 in &ys {
                    for &y2 in &ys {
                        let yb = alpha * y1 + (1.0 - alpha) * y2;
                        let e = fxb * yb - (alpha * fx[a] * y1 + (1.0 - alpha) * fx[b] * y2);
                        let point = WitnessPoint { x1, x2, y1, y2, alpha, e };
                        if e > WITNESS_TOL && out.positive.is_none() {
                            out.positive = Some(point);
                        } else if e < -WITNESS_TOL && out.negative.is_none() {
                            out.negative = Some(point);
                        }
                        if out.found() {
                            return Ok(out);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// [`witness_search`] for a model's curve over `[0, A_max^T] x [y_lo, y_hi]`.
pub fn nonconvexity_witness(model: &AccuracyModel, y_lo: f64, y_hi: f64) -> Result<Witness> {
    let curve = *model.curve();
    witness_search(|x| curve.value(x), (0.0, model.domain_max()), (y_lo, y_hi))
}
