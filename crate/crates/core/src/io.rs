//! File formats: profile menus (JSON or CSV), model specs (JSON), traces and
//! run results (CSV), weight schedules (CSV) and bounds reports (JSON).
//!
//! Numbers are written with 12 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::CrBounds;
use crate::numeric::{fmt_sig12, round_sig12};
use crate::{
    prune_dominated, AccuracyModel, Curve, Error, InferConfig, ProfileSet, Result, RetrainConfig,
    RunResult, ScheduleWeights, Trace,
};

/// Unpruned menus as stored on disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawProfiles {
    #[serde(default)]
    pub retrain: Vec<RetrainConfig>,
    pub infer: Vec<InferConfig>,
}

impl RawProfiles {
    pub fn prune(&self, insert_zero: bool) -> Result<ProfileSet> {
        prune_dominated(&self.retrain, &self.infer, insert_zero)
    }
}

impl From<&ProfileSet> for RawProfiles {
    fn from(p: &ProfileSet) -> Self {
        Self {
            retrain: p.retrain().to_vec(),
            infer: p.infer().to_vec(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    kind: String,
    gain_or_profit: f64,
    cost: f64,
}

pub fn parse_profiles_json(text: &str) -> Result<RawProfiles> {
    Ok(serde_json::from_str(text)?)
}

/// CSV menus with header `kind,gain_or_profit,cost`; `kind` is `retrain`
/// or `infer`.
pub fn parse_profiles_csv<R: Read>(reader: R) -> Result<RawProfiles> {
    let mut raw = RawProfiles::default();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for row in rdr.deserialize() {
        let row: ProfileRow = row?;
        match row.kind.as_str() {
            "retrain" => raw.retrain.push(RetrainConfig::new(row.gain_or_profit, row.cost)),
            "infer" => raw.infer.push(InferConfig::new(row.gain_or_profit, row.cost)),
            other => {
                return Err(Error::Unknown {
                    kind: "profile kind",
                    name: other.to_string(),
                })
            }
        }
    }
    Ok(raw)
}

/// Reads menus from JSON or, for `.csv` paths, CSV.
pub fn read_profiles(path: &Path) -> Result<RawProfiles> {
    let text = std::fs::read_to_string(path)?;
    if is_csv(path) {
        parse_profiles_csv(text.as_bytes())
    } else {
        parse_profiles_json(&text)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn profiles_json(profiles: &ProfileSet) -> Value {
    json!({
        "retrain": profiles.retrain().iter()
            .map(|r| json!({"gain": num(r.gain), "cost": num(r.cost)}))
            .collect::<Vec<_>>(),
        "infer": profiles.infer().iter()
            .map(|c| json!({"profit": num(c.profit), "cost": num(c.cost)}))
            .collect::<Vec<_>>(),
    })
}

/// Model spec: `{"family": ..., "params": {...}, "domain_max": x, "L": l}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub curve: Curve,
    pub domain_max: f64,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<AccuracyModel> {
        AccuracyModel::new(self.curve, self.domain_max, self.l)
    }
}

pub fn parse_model_json(text: &str) -> Result<ModelSpec> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_model(path: &Path) -> Result<ModelSpec> {
    parse_model_json(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    t: usize,
    d: f64,
    c: f64,
}

/// Trace CSV with header `t,d,c`; rows must be numbered `1..=T` in order.
pub fn parse_trace_csv<R: Read>(reader: R) -> Result<Trace> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut d = Vec::new();
    let mut c = Vec::new();
    for (k, row) in rdr.deserialize().enumerate() {
        let row: TraceRow = row?;
        if row.t != k + 1 {
            return Err(Error::Parse(format!(
                "trace row {} has t = {}, expected {}",
                k + 1,
                row.t,
                k + 1
            )));
        }
        d.push(row.d);
        c.push(row.c);
    }
    Trace::new(d, c)
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    parse_trace_csv(std::fs::File::open(path)?)
}

pub fn write_trace_csv<W: Write>(out: W, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "d", "c"])?;
    for (k, (d, c)) in trace.d().iter().zip(trace.c()).enumerate() {
        w.write_record([(k + 1).to_string(), fmt_sig12(*d), fmt_sig12(*c)])?;
    }
    w.flush()?;
    Ok(())
}

/// Run CSV with header
/// `t,retrain_index,infer_index,u,perf,cum_perf,budget_used,capacity`.
pub fn write_run_csv<W: Write>(out: W, run: &RunResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t",
        "retrain_index",
        "infer_index",
        "u",
        "perf",
        "cum_perf",
        "budget_used",
        "capacity",
    ])?;
    for k in 0..run.horizon() {
        let d = run.decisions[k];
        w.write_record([
            (k + 1).to_string(),
            d.retrain_index.to_string(),
            d.infer_index.to_string(),
            fmt_sig12(run.budgets[k]),
            fmt_sig12(run.per_slot_perf[k]),
            fmt_sig12(run.cumulative_perf[k]),
            fmt_sig12(run.per_slot_budget_use[k]),
            fmt_sig12(run.capacity[k]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Weight schedule CSV with header `t,v,w,lambda`.
pub fn write_weights_csv<W: Write>(out: W, schedule: &[ScheduleWeights]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "v", "w", "lambda"])?;
    for (k, s) in schedule.iter().enumerate() {
        w.write_record([
            (k + 1).to_string(),
            fmt_sig12(s.v),
            fmt_sig12(s.w),
            fmt_sig12(s.lambda),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON number rounded to 12 significant digits; non-finite values become
/// `null`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig12(x))
    } else {
        Value::Null
    }
}

/// Bounds report; an undefined crossover threshold is written as the string
/// `"undefined"`.
pub fn bounds_json(b: &CrBounds) -> Value {
    let i = &b.inputs;
    json!({
        "inputs": {
            "f_at_zero": num(i.f_at_zero),
            "f_at_max": num(i.f_at_max),
            "L": num(i.l),
            "a_max_retrain": num(i.a_max_retrain),
            "a_min_infer": num(i.a_min_infer),
            "a_max_infer": num(i.a_max_infer),
            "d_min": num(i.d_min),
            "d_max": num(i.d_max),
            "T": i.horizon,
        },
        "alpha": num(b.alpha),
        "cr_inference_only": num(b.cr_inference_only),
        "tight_cr_io_upper": num(b.tight_cr_io_upper),
        "cr_orric_a": num(b.cr_orric_a),
        "cr_orric_b": num(b.cr_orric_b),
        "cr_orric": num(b.cr_orric),
        "corollary_threshold": b.corollary_threshold.map_or(json!("undefined"), num),
        "orric_strictly_better": b.orric_strictly_better(),
    })
}
