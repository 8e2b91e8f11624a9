//! Retraining and inference configuration menus.
//!
//! A [`ProfileSet`] is always cost-ascending and strictly profit-ascending in
//! both menus, and its retraining menu starts with the "no retraining"
//! configuration `(gain 0, cost 0)`. The only way to build one is
//! [`prune_dominated`], which removes every configuration that costs at least
//! as much as another one while yielding no more.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One retraining configuration: profit `gain` in `[0, 1]` and per-sample
/// compute `cost`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrainConfig {
    pub gain: f64,
    pub cost: f64,
}

/// One inference configuration: normalized profit in `(0, 1]` and per-sample
/// compute `cost > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferConfig {
    pub profit: f64,
    pub cost: f64,
}

impl RetrainConfig {
    pub const NONE: RetrainConfig = RetrainConfig { gain: 0.0, cost: 0.0 };

    pub fn new(gain: f64, cost: f64) -> Self {
        Self { gain, cost }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && (0.0..=1.0).contains(&self.gain)) {
            return Err(Error::InvalidConfig(format!(
                "retraining gain {} outside [0, 1]",
                self.gain
            )));
        }
        if !(self.cost.is_finite() && self.cost >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "retraining cost {} is negative",
                self.cost
            )));
        }
        if self.cost == 0.0 && self.gain > 0.0 {
            return Err(Error::InvalidConfig(format!(
                "zero-cost retraining configuration with gain {}",
                self.gain
            )));
        }
        Ok(())
    }
}

impl InferConfig {
    pub fn new(profit: f64, cost: f64) -> Self {
        Self { profit, cost }
    }

    fn validate(&self) -> Result<()> {
        if !(self.profit.is_finite() && self.profit > 0.0 && self.profit <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "inference profit {} outside (0, 1]",
                self.profit
            )));
        }
        if !(self.cost.is_finite() && self.cost > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "inference cost {} must be positive",
                self.cost
            )));
        }
        Ok(())
    }
}

/// Pruned configuration menus. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSet {
    retrain: Vec<RetrainConfig>,
    infer: Vec<InferConfig>,
}

impl ProfileSet {
    pub fn retrain(&self) -> &[RetrainConfig] {
        &self.retrain
    }

    pub fn infer(&self) -> &[InferConfig] {
        &self.infer
    }

    /// Number of retraining configurations (`M`).
    pub fn m(&self) -> usize {
        self.retrain.len()
    }

    /// Number of inference configurations (`N`).
    pub fn n(&self) -> usize {
        self.infer.len()
    }

    /// 1-based accessors, matching the indices stored in decisions.
    pub fn retrain_at(&self, i: usize) -> &RetrainConfig {
        &self.retrain[i - 1]
    }

    pub fn infer_at(&self, j: usize) -> &InferConfig {
        &self.infer[j - 1]
    }

    pub fn a_min_retrain(&self) -> f64 {
        self.retrain[0].gain
    }

    pub fn a_max_retrain(&self) -> f64 {
        self.retrain[self.retrain.len() - 1].gain
    }

    pub fn a_min_infer(&self) -> f64 {
        self.infer[0].profit
    }

    pub fn a_max_infer(&self) -> f64 {
        self.infer[self.infer.len() - 1].profit
    }

    pub fn c_min_infer(&self) -> f64 {
        self.infer[0].cost
    }

    /// Per-sample cost of the most expensive pair `(M, N)`.
    pub fn c_top_pair(&self) -> f64 {
        self.retrain[self.retrain.len() - 1].cost + self.infer[self.infer.len() - 1].cost
    }
}

/// Removes dominated configurations and returns the sorted menus.
///
/// An entry is dropped when some other entry costs no more and yields at
/// least as much; among equal-cost entries only the highest-profit one
/// survives, and exact duplicates collapse. With `insert_zero` the
/// `(gain 0, cost 0)` retraining configuration is added when missing;
/// without it, its absence is an error.
pub fn prune_dominated(
    raw_retrain: &[RetrainConfig],
    raw_infer: &[InferConfig],
    insert_zero: bool,
) -> Result<ProfileSet> {
    for r in raw_retrain {
        r.validate()?;
    }
    for c in raw_infer {
        c.validate()?;
    }

    let mut retrain = raw_retrain.to_vec();
    if !retrain.iter().any(|r| r.cost == 0.0 && r.gain == 0.0) {
        if !insert_zero {
            return Err(Error::MissingZeroRetrain);
        }
        retrain.push(RetrainConfig::NONE);
    }
    let retrain = frontier(retrain, |r| (r.cost, r.gain));
    let infer = frontier(raw_infer.to_vec(), |c| (c.cost, c.profit));
    if infer.is_empty() {
        return Err(Error::EmptyInferenceMenu);
    }

    Ok(ProfileSet { retrain, infer })
}

/// Keeps the strictly increasing (cost, profit) frontier.
fn frontier<T: Copy>(mut items: Vec<T>, key: impl Fn(&T) -> (f64, f64)) -> Vec<T> {
    // cost ascending, then profit descending so the best of a cost tie leads
    items.sort_by(|a, b| {
        let (ca, pa) = key(a);
        let (cb, pb) = key(b);
        ca.total_cmp(&cb).then(pb.total_cmp(&pa))
    });
    let mut kept: Vec<T> = Vec::with_capacity(items.len());
    for item in items {
        let (_, p) = key(&item);
        match kept.last() {
            Some(last) if p <= key(last).1 => {}
            _ => kept.push(item),
        }
    }
    kept
}

/// Normalizes raw accuracies by their maximum, so the best configuration
/// has profit 1.
pub fn normalize_profits(raw_accuracies: &[f64]) -> Result<Vec<f64>> {
    if raw_accuracies.is_empty() {
        return Err(Error::EmptyInferenceMenu);
    }
    if let Some(bad) = raw_accuracies
        .iter()
        .find(|a| !(a.is_finite() && **a > 0.0))
    {
        return Err(Error::InvalidConfig(format!(
            "accuracy {bad} must be positive"
        )));
    }
    let max = raw_accuracies.iter().copied().fold(f64::MIN, f64::max);
    Ok(raw_accuracies.iter().map(|a| a / max).collect())
}
