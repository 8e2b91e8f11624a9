//! Learning-curve model `f` mapping the average historical retraining extent
//! to the base model performance.
//!
//! Every [`AccuracyModel`] is certified positive at zero, nondecreasing and
//! concave on `[0, A_max^T]` by a 1024-point grid check, and carries a lower
//! bound `L` on `f'(A_max^T)` together with `g(A_max^T) = f(A_max^T) - L A_max^T`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Grid size used to certify monotonicity and concavity.
pub const CERTIFY_GRID: usize = 1024;

const GRID_TOL: f64 = 1e-9;

/// Parametric learning-curve families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum Curve {
    /// `intercept + slope * x`
    Linear { intercept: f64, slope: f64 },
    /// `c - a * (x + shift)^(-alpha)`; the shift keeps `f(0)` finite.
    ShiftedPower { c: f64, a: f64, alpha: f64, shift: f64 },
    /// `c - a * exp(-rate * x)`
    ExponentialSaturation { c: f64, a: f64, rate: f64 },
    /// `a + b * ln(x + shift)`
    ShiftedLog { a: f64, b: f64, shift: f64 },
    /// No drift: retraining has no effect.
    Constant { value: f64 },
}

impl Curve {
    pub fn family(&self) -> &'static str {
        match self {
            Curve::Linear { .. } => "linear",
            Curve::ShiftedPower { .. } => "shifted-power",
            Curve::ExponentialSaturation { .. } => "exponential-saturation",
            Curve::ShiftedLog { .. } => "shifted-log",
            Curve::Constant { .. } => "constant",
        }
    }

    /// Unchecked evaluation.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Curve::Linear { intercept, slope } => intercept + slope * x,
            Curve::ShiftedPower { c, a, alpha, shift } => c - a * (x + shift).powf(-alpha),
            Curve::ExponentialSaturation { c, a, rate } => c - a * (-rate * x).exp(),
            Curve::ShiftedLog { a, b, shift } => a + b * (x + shift).ln(),
            Curve::Constant { value } => value,
        }
    }

    /// Analytic first derivative.
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Curve::Linear { slope, .. } => slope,
            Curve::ShiftedPower { a, alpha, shift, .. } => a * alpha * (x + shift).powf(-alpha - 1.0),
            Curve::ExponentialSaturation { a, rate, .. } => a * rate * (-rate * x).exp(),
            Curve::ShiftedLog { b, shift, .. } => b / (x + shift),
            Curve::Constant { .. } => 0.0,
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            Curve::Linear { intercept, slope } => vec![intercept, slope],
            Curve::ShiftedPower { c, a, alpha, shift } => vec![c, a, alpha, shift],
            Curve::ExponentialSaturation { c, a, rate } => vec![c, a, rate],
            Curve::ShiftedLog { a, b, shift } => vec![a, b, shift],
            Curve::Constant { value } => vec![value],
        }
    }

    fn check_params(&self) -> Result<()> {
        if self.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        match *self {
            Curve::ShiftedPower { shift, alpha, .. } if shift <= 0.0 || alpha <= 0.0 => Err(
                Error::InvalidModel("shifted-power needs shift > 0 and alpha > 0".into()),
            ),
            Curve::ShiftedLog { shift, .. } if shift <= 0.0 => {
                Err(Error::InvalidModel("shifted-log needs shift > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Exponential-saturation curve through `f(0) = f0` and
    /// `f(domain_max) = f_max` with slope exactly `l` at `domain_max`.
    ///
    /// Needs `f_max - f0 > l * domain_max`, otherwise no concave member of
    /// the family matches all three anchors.
    pub fn fit_exponential_saturation(f0: f64, f_max: f64, l: f64, domain_max: f64) -> Result<Curve> {
        let target = (f_max - f0) / (l * domain_max);
        if !(l > 0.0 && domain_max > 0.0 && target.is_finite() && target > 1.0) {
            return Err(Error::InvalidModel(format!(
                "no exponential-saturation curve with f(0)={f0}, f({domain_max})={f_max}, f'={l}"
            )));
        }
        // (e^s - 1) / s is increasing in s > 0; bisect for s = rate * domain_max.
        let h = |s: f64| s.exp_m1() / s;
        let (mut lo, mut hi) = (1e-12, 1.0);
        while h(hi) < target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        let rate = s / domain_max;
        let a = (f_max - f0) / -(-s).exp_m1();
        Ok(Curve::ExponentialSaturation { c: f0 + a, a, rate })
    }
}

/// Certified learning curve plus the constants the scheduler and the bounds
/// depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyModel {
    curve: Curve,
    domain_max: f64,
    f_at_max: f64,
    l: f64,
    g_at_max: f64,
}

impl AccuracyModel {
    /// Validates `curve` on `[0, domain_max]` and fixes `L`.
    ///
    /// Without an override, `L = f'(domain_max)`. Overrides above the
    /// analytic derivative are rejected. `L = 0` is only accepted for the
    /// constant family (the no-drift case), where it is the only valid bound.
    pub fn new(curve: Curve, domain_max: f64, l_override: Option<f64>) -> Result<Self> {
        curve.check_params()?;
        if !(domain_max.is_finite() && domain_max > 0.0) {
            return Err(Error::InvalidModel(format!(
                "domain_max {domain_max} must be positive"
            )));
        }
        let f0 = curve.value(0.0);
        if !(f0 > 0.0) {
            return Err(Error::InvalidModel(format!("f(0) = {f0} must be positive")));
        }
        let f_at_max = curve.value(domain_max);
        if !(f_at_max > 0.0 && f_at_max <= 1.0) {
            return Err(Error::InvalidModel(format!(
                "f(A_max) = {f_at_max} outside (0, 1]"
            )));
        }
        certify_shape(&curve, domain_max)?;

        let slope = curve.derivative(domain_max);
        let l = match l_override {
            None if slope > 0.0 => slope,
            None => {
                return Err(Error::InvalidModel(
                    "f'(A_max) = 0; an explicit L is required".into(),
                ))
            }
            Some(l) if !l.is_finite() || l < 0.0 => {
                return Err(Error::InvalidModel(format!("L = {l} must be non-negative")))
            }
            Some(l) if l > slope + GRID_TOL => {
                return Err(Error::LowerBoundTooLarge { l, derivative: slope })
            }
            Some(l) if l == 0.0 && !matches!(curve, Curve::Constant { .. }) => {
                return Err(Error::InvalidModel(
                    "L = 0 is only accepted for the constant family".into(),
                ))
            }
            Some(l) => l,
        };

        Ok(Self {
            curve,
            domain_max,
            f_at_max,
            l,
            g_at_max: f_at_max - l * domain_max,
        })
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    /// `A_max^T`, the right end of the domain.
    pub fn domain_max(&self) -> f64 {
        self.domain_max
    }

    pub fn f_at_max(&self) -> f64 {
        self.f_at_max
    }

    pub fn f_at_zero(&self) -> f64 {
        self.curve.value(0.0)
    }

    /// Lower bound `L` on `f'(A_max^T)`.
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn g_at_max(&self) -> f64 {
        self.g_at_max
    }

    /// `f(x)` for `x` in `[0, A_max^T]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x <= self.domain_max) {
            return Err(Error::OutOfDomain {
                x,
                domain_max: self.domain_max,
            });
        }
        Ok(self.curve.value(x))
    }

    /// `f(x)` with `x` clamped into the domain; used on accumulated ratios
    /// that can drift one ulp past `A_max^T`.
    pub(crate) fn eval_clamped(&self, x: f64) -> f64 {
        self.curve.value(x.clamp(0.0, self.domain_max))
    }

    /// Whether `f(x) <= L x + g(A_max^T)` holds on a uniform grid.
    pub fn check_lemma1(&self, grid_size: usize) -> bool {
        linear_majorant_holds(&self.curve, self.l, self.domain_max, grid_size)
    }
}

/// Grid check of `f(x) <= L x + f(A_max) - L A_max` for an arbitrary `L`.
pub fn linear_majorant_holds(curve: &Curve, l: f64, domain_max: f64, grid_size: usize) -> bool {
    let g = curve.value(domain_max) - l * domain_max;
    grid(domain_max, grid_size).all(|x| curve.value(x) <= l * x + g + GRID_TOL)
}

fn grid(domain_max: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |k| {
        if k == n - 1 {
            domain_max
        } else {
            domain_max * k as f64 / (n - 1) as f64
        }
    })
}

fn certify_shape(curve: &Curve, domain_max: f64) -> Result<()> {
    let ys: Vec<f64> = grid(domain_max, CERTIFY_GRID).map(|x| curve.value(x)).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidModel("f is not finite on the domain".into()));
    }
    if ys.windows(2).any(|w| w[1] - w[0] < -GRID_TOL) {
        return Err(Error::InvalidModel(format!(
            "{} curve is decreasing on [0, {domain_max}]",
            curve.family()
        )));
    }
    if ys.windows(3).any(|w| w[2] - 2.0 * w[1] + w[0] > GRID_TOL) {
        return Err(Error::InvalidModel(format!(
            "{} curve is not concave on [0, {domain_max}]",
            curve.family()
        )));
    }
    Ok(())
}
