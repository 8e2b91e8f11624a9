//! Synthetic trace laws and the CIFAR-10-C replay scenario.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::profiles::normalize_profits;
use crate::{
    prune_dominated, AccuracyModel, Curve, Error, InferConfig, ProfileSet, Result, RetrainConfig,
    Trace,
};

const D_STREAM: u64 = 0;
const C_STREAM: u64 = 1;

/// Law for the per-slot data volume `D(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum DataLaw {
    Constant { d: f64 },
    Uniform { d_min: f64, d_max: f64 },
}

/// Law for the per-slot capacity `C(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum CapacityLaw {
    Constant { c: f64 },
    Uniform { c_lo: f64, c_hi: f64 },
    /// `C(t) = D(t) (C_M^T + C_N^I)`: the top pair always fits.
    Sufficient,
    /// `C(t) = D(t) C_min^I`: only the cheapest inference fits.
    Scarce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub horizon: usize,
    pub d_law: DataLaw,
    pub c_law: CapacityLaw,
    #[serde(default)]
    pub seed: u64,
}

/// Counter-based uniform draws: slot `t` of stream `s` always maps to the
/// same value, independent of how many other draws were made.
struct SlotSampler {
    rng: ChaCha8Rng,
}

impl SlotSampler {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    fn uniform(&mut self, t: usize, lo: f64, hi: f64) -> f64 {
        self.rng.set_word_pos(2 * t as u128);
        let unit = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * unit
    }
}

/// Draws a trace from `spec`; deterministic in the seed.
pub fn generate_trace(spec: &TraceSpec, profiles: &ProfileSet) -> Result<Trace> {
    sample_trace(spec, Some(profiles))
}

/// [`generate_trace`] with an optional menu. Without one, the `sufficient`
/// and `scarce` laws are unavailable and feasibility is not checked.
pub fn sample_trace(spec: &TraceSpec, profiles: Option<&ProfileSet>) -> Result<Trace> {
    if spec.horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let (d_lo, d_hi) = match spec.d_law {
        DataLaw::Constant { d } => (d, d),
        DataLaw::Uniform { d_min, d_max } => (d_min, d_max),
    };
    if !(d_lo > 0.0 && d_lo <= d_hi && d_hi.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "data law bounds [{d_lo}, {d_hi}] must satisfy 0 < lo <= hi"
        )));
    }
    if let CapacityLaw::Uniform { c_lo, c_hi } = spec.c_law {
        if !(c_lo <= c_hi && c_hi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "capacity range [{c_lo}, {c_hi}] is empty"
            )));
        }
    }
    let (c_min, c_top) = match (profiles, spec.c_law) {
        (Some(p), _) => (p.c_min_infer(), p.c_top_pair()),
        (None, CapacityLaw::Sufficient | CapacityLaw::Scarce) => {
            return Err(Error::InvalidConfig(
                "sufficient and scarce laws need a profile menu".into(),
            ))
        }
        (None, _) => (0.0, 0.0),
    };
    let floor = match spec.c_law {
        CapacityLaw::Constant { c } => Some(c),
        CapacityLaw::Uniform { c_lo, .. } => Some(c_lo),
        _ => None,
    };
    if let Some(floor) = floor.filter(|&f| f < d_hi * c_min) {
        return Err(Error::InfeasibleLaw(format!(
            "capacity floor {floor} below D_max * C_min^I = {}",
            d_hi * c_min
        )));
    }

    let mut d_rng = SlotSampler::new(spec.seed, D_STREAM);
    let mut c_rng = SlotSampler::new(spec.seed, C_STREAM);
    let mut d = Vec::with_capacity(spec.horizon);
    let mut c = Vec::with_capacity(spec.horizon);
    for t in 0..spec.horizon {
        let dt = match spec.d_law {
            DataLaw::Constant { d } => d,
            DataLaw::Uniform { d_min, d_max } => d_rng.uniform(t, d_min, d_max),
        };
        let ct = match spec.c_law {
            CapacityLaw::Constant { c } => c,
            CapacityLaw::Uniform { c_lo, c_hi } => c_rng.uniform(t, c_lo, c_hi),
            CapacityLaw::Sufficient => dt * c_top,
            CapacityLaw::Scarce => dt * c_min,
        };
        d.push(dt);
        c.push(ct);
    }
    let trace = Trace::with_bounds(d, c, d_lo, d_hi)?;
    if let Some(p) = profiles {
        trace.check_feasible(p)?;
    }
    Ok(trace)
}

/// One row of the bundled accuracy/cost table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub model: String,
    pub resolution: u32,
    pub macs_m: f64,
    pub latency_us: f64,
    pub corruption: String,
    pub accuracy: f64,
}

const BUILTIN_TABLE: &str = include_str!("../data/table2.csv");

pub const STUDENT_MODEL: &str = "MobileNetV2";
pub const TEACHER_MODEL: &str = "ResNet50";

/// Corruptions where downsampling beats full resolution for the student.
pub const NOISE_CORRUPTIONS: [&str; 4] =
    ["gaussian noise", "impulse noise", "shot noise", "speckle noise"];

/// MobileNetV2 CIFAR-10 accuracy at 32x32 and 28x28.
pub const F_AT_MAX_CLEAN: f64 = 0.7957;
pub const F_AT_MAX_NOISE: f64 = 0.7329;

/// Accuracy/cost table shipped with the crate.
pub fn builtin_table() -> Vec<TableRow> {
    parse_table(BUILTIN_TABLE.as_bytes()).expect("bundled table parses")
}

pub fn parse_table<R: std::io::Read>(reader: R) -> Result<Vec<TableRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<TableRow>, _>>()?;
    Ok(rows)
}

/// Names of the datasets present in the bundled table.
pub fn corruptions() -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for row in builtin_table() {
        if !names.contains(&row.corruption) {
            names.push(row.corruption);
        }
    }
    names
}

fn default_ratios() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3, 0.5, 1.0]
}

fn default_kappa() -> f64 {
    3.0
}

fn default_l() -> f64 {
    0.01
}

fn default_horizon() -> usize {
    100
}

fn default_volume() -> f64 {
    1000.0
}

/// Replay of the CIFAR-10-C scheduling setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySpec {
    pub corruption: String,
    #[serde(default = "default_ratios")]
    pub sampling_ratios: Vec<f64>,
    /// Training cost of one sample relative to a student forward pass.
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Overrides the per-corruption `f(A_max^T)`.
    #[serde(default)]
    pub f_at_max: Option<f64>,
    #[serde(default = "default_l")]
    pub l: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_volume")]
    pub d: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ReplaySpec {
    pub fn new(corruption: &str) -> Self {
        Self {
            corruption: corruption.to_string(),
            sampling_ratios: default_ratios(),
            kappa: default_kappa(),
            f_at_max: None,
            l: default_l(),
            horizon: default_horizon(),
            d: default_volume(),
            seed: 0,
        }
    }
}

/// Everything a replay run needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replay {
    pub profiles: ProfileSet,
    pub model: AccuracyModel,
    pub trace_spec: TraceSpec,
    /// Retraining-gain normalizer `1 / max_i C_i^T`.
    pub beta: f64,
    /// Capacity bounds per slot: student and teacher full-resolution MACs
    /// times `D`.
    pub c1: f64,
    pub c2: f64,
}

/// Builds profiles, learning curve and trace law for one corruption.
///
/// Inference menu: the student's resolutions with accuracies normalized by
/// their maximum. Retraining menu: one entry per sampling ratio costing
/// `ratio * (teacher MACs + kappa * student MACs)` per uploaded sample, with
/// gain proportional to cost and the largest gain equal to 1. The learning
/// curve is exponential-saturation through the best uncorrected student
/// accuracy at 0 and `f(A_max^T)` at 1 with slope `L` there; when those
/// anchors leave no room for curvature it is linear with slope `L`.
pub fn build_replay(spec: &ReplaySpec) -> Result<Replay> {
    build_replay_from(spec, &builtin_table())
}

pub fn build_replay_from(spec: &ReplaySpec, table: &[TableRow]) -> Result<Replay> {
    let rows_of = |model: &str| -> Vec<&TableRow> {
        let mut rows: Vec<&TableRow> = table
            .iter()
            .filter(|r| r.model == model && r.corruption == spec.corruption)
            .collect();
        rows.sort_by_key(|r| r.resolution);
        rows
    };
    let student = rows_of(STUDENT_MODEL);
    let teacher = rows_of(TEACHER_MODEL);
    if student.is_empty() || teacher.is_empty() {
        return Err(Error::Unknown {
            kind: "corruption",
            name: spec.corruption.clone(),
        });
    }
    if !(spec.kappa >= 0.0 && spec.kappa.is_finite()) {
        return Err(Error::InvalidConfig(format!("kappa {} must be >= 0", spec.kappa)));
    }
    if spec.sampling_ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::InvalidConfig("sampling ratios must lie in [0, 1]".into()));
    }

    let accuracies: Vec<f64> = student.iter().map(|r| r.accuracy).collect();
    let profits = normalize_profits(&accuracies)?;
    let infer: Vec<InferConfig> = student
        .iter()
        .zip(&profits)
        .map(|(r, &p)| InferConfig::new(p, r.macs_m * 1e6))
        .collect();

    let student_full = student.last().unwrap().macs_m * 1e6;
    let teacher_full = teacher.last().unwrap().macs_m * 1e6;
    let per_sample = teacher_full + spec.kappa * student_full;
    let costs: Vec<f64> = spec.sampling_ratios.iter().map(|r| r * per_sample).collect();
    let max_cost = costs.iter().copied().fold(0.0, f64::max);
    if max_cost <= 0.0 {
        return Err(Error::InvalidConfig("no positive sampling ratio".into()));
    }
    let retrain: Vec<RetrainConfig> = costs
        .iter()
        .map(|&c| RetrainConfig::new(c / max_cost, c))
        .collect();
    let profiles = prune_dominated(&retrain, &infer, true)?;

    let is_noise = NOISE_CORRUPTIONS.contains(&spec.corruption.as_str());
    let f_at_max = spec
        .f_at_max
        .unwrap_or(if is_noise { F_AT_MAX_NOISE } else { F_AT_MAX_CLEAN });
    let f0 = accuracies.iter().copied().fold(0.0, f64::max) / 100.0;
    let curve = Curve::fit_exponential_saturation(f0, f_at_max, spec.l, 1.0).unwrap_or(
        Curve::Linear {
            intercept: f_at_max - spec.l,
            slope: spec.l,
        },
    );
    let model = AccuracyModel::new(curve, profiles.a_max_retrain(), Some(spec.l))?;

    let c1 = spec.d * student_full;
    let c2 = spec.d * teacher_full;
    let trace_spec = TraceSpec {
        horizon: spec.horizon,
        d_law: DataLaw::Constant { d: spec.d },
        c_law: CapacityLaw::Uniform { c_lo: c1, c_hi: c2 },
        seed: spec.seed,
    };

    Ok(Replay {
        profiles,
        model,
        trace_spec,
        beta: 1.0 / max_cost,
        c1,
        c2,
    })
}
