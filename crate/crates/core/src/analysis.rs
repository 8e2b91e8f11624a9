//! Closed-form competitive ratios and the adversarial Inference-Only trace.

use serde::Serialize;

use crate::engine::check_compatible;
use crate::{AccuracyModel, Error, ProfileSet, Result, Trace};

/// Data volume per slot used by [`build_io_tight_instance`].
pub const TIGHT_INSTANCE_VOLUME: f64 = 1000.0;

/// Relative margin a bound must clear to count as strictly larger.
pub const STRICT_MARGIN: f64 = 1e-12;

/// Inputs that determine the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsInputs {
    pub f_at_zero: f64,
    pub f_at_max: f64,
    pub l: f64,
    pub a_max_retrain: f64,
    pub a_min_infer: f64,
    pub a_max_infer: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrBounds {
    pub inputs: BoundsInputs,
    /// `L A_max^T D_min^2 A_min^I / (f(A_max^T) D_max^2 A_max^I)`; zero when `L = 0`.
    pub alpha: f64,
    /// `f(0) / f(A_max^T)`.
    pub cr_inference_only: f64,
    /// `T f(0) / (f(0) + (T - 1) f(A_max^T))`, an upper bound on the tight
    /// ratio of Inference-Only.
    pub tight_cr_io_upper: f64,
    /// `(1 + alpha) f(0) / f(A_max^T)`.
    pub cr_orric_a: f64,
    /// `1 / (f(A_max^T) / f(0) - alpha)`.
    pub cr_orric_b: f64,
    /// The larger of the two ORRIC ratios; both hold.
    pub cr_orric: f64,
    /// Horizon beyond which ORRIC's guarantee beats Inference-Only's tight
    /// ratio: `(f(A_max^T) - f(0)) / (alpha f(0))`. `None` when `alpha = 0`.
    pub corollary_threshold: Option<f64>,
}

impl CrBounds {
    pub fn threshold(&self) -> Result<f64> {
        self.corollary_threshold.ok_or(Error::UndefinedThreshold)
    }

    /// Whether ORRIC's second ratio strictly exceeds the Inference-Only tight
    /// upper bound, up to [`STRICT_MARGIN`] of rounding.
    pub fn orric_strictly_better(&self) -> bool {
        self.cr_orric_b > self.tight_cr_io_upper * (1.0 + STRICT_MARGIN)
    }
}

/// All competitive-ratio quantities for a model, menu, data range and horizon.
pub fn compute_bounds(
    model: &AccuracyModel,
    profiles: &ProfileSet,
    d_min: f64,
    d_max: f64,
    horizon: usize,
) -> Result<CrBounds> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    if !(d_min > 0.0 && d_min <= d_max && d_max.is_finite()) {
        return Err(Error::InvalidTrace(format!(
            "data bounds [{d_min}, {d_max}] must satisfy 0 < d_min <= d_max"
        )));
    }
    check_compatible(profiles, model)?;

    let inputs = BoundsInputs {
        f_at_zero: model.f_at_zero(),
        f_at_max: model.f_at_max(),
        l: model.l(),
        a_max_retrain: profiles.a_max_retrain(),
        a_min_infer: profiles.a_min_infer(),
        a_max_infer: profiles.a_max_infer(),
        d_min,
        d_max,
        horizon,
    };
    let f0 = inputs.f_at_zero;
    let fm = inputs.f_at_max;
    let t = horizon as f64;

    let alpha = inputs.l * inputs.a_max_retrain * d_min * d_min * inputs.a_min_infer
        / (fm * d_max * d_max * inputs.a_max_infer);
    let cr_inference_only = f0 / fm;
    let tight_cr_io_upper = t * f0 / (f0 + (t - 1.0) * fm);
    let cr_orric_a = (1.0 + alpha) * f0 / fm;
    let cr_orric_b = 1.0 / (fm / f0 - alpha);
    let corollary_threshold = (alpha > 0.0).then(|| (fm - f0) / (alpha * f0));

    Ok(CrBounds {
        inputs,
        alpha,
        cr_inference_only,
        tight_cr_io_upper,
        cr_orric_a,
        cr_orric_b,
        cr_orric: cr_orric_a.max(cr_orric_b),
        corollary_threshold,
    })
}

/// Constant-volume trace with capacity for the top pair in every slot.
///
/// The oracle retrains fully in slot 1 and then earns `f(A_max^T)` per slot,
/// while Inference-Only stays at `f(0)`, so their ratio is exactly the tight
/// upper bound `T f(0) / (f(0) + (T - 1) f(A_max^T))`.
pub fn build_io_tight_instance(
    model: &AccuracyModel,
    profiles: &ProfileSet,
    horizon: usize,
) -> Result<Trace> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    check_compatible(profiles, model)?;
    let d = TIGHT_INSTANCE_VOLUME;
    let c = d * profiles.c_top_pair();
    Trace::new(vec![d; horizon], vec![c; horizon])
}
