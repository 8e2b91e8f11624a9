use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use orric_core::engine::DEFAULT_ORACLE_CAP;
use orric_core::io::{
    bounds_json, num, profiles_json, read_model, read_profiles, read_trace, write_run_csv,
    write_trace_csv, write_weights_csv, ModelSpec,
};
use orric_core::numeric::round_sig12;
use orric_core::policies::weight_schedule;
use orric_core::scenario::{CapacityLaw, DataLaw, Replay};
use orric_core::{
    build_replay, compute_bounds, generate_trace, nonconvexity_witness, offline_optimal,
    run_policy, sample_trace, AccuracyModel, Error, Policy, ProfileSet, ReplaySpec, RunResult,
    Trace, TraceSpec,
};
use serde_json::{json, Value};

/// Retraining/inference scheduling experiments on an edge server.
#[derive(Parser)]
#[command(name = "orric", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a trace from a data/capacity law and write it as CSV.
    GenTrace {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        trace: TraceArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove dominated configurations and print the pruned menus as JSON.
    Prune {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run policies (and the offline optimum) on one trace.
    Run {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        trace: TraceArgs,
        /// Comma-separated policy names; `all` is the five policies plus `oracle`.
        #[arg(long, default_value = "all")]
        policies: String,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Offline optimum of one trace, as a run CSV.
    Oracle {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        trace: TraceArgs,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Competitive-ratio bounds as JSON.
    Bounds {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Take D_min, D_max and T from this trace.
        #[arg(long, conflicts_with_all = ["d_min", "d_max"])]
        trace: Option<PathBuf>,
        #[arg(long)]
        d_min: Option<f64>,
        #[arg(long)]
        d_max: Option<f64>,
        #[arg(long = "T")]
        horizon: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the replay menus, model, trace and constants for one corruption.
    Replay {
        /// Corruption name, e.g. `fog` or `gaussian noise`.
        name: String,
        #[arg(long = "T")]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Training cost of one sample relative to a student forward pass.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search for points showing f(x) y is neither convex nor concave.
    Witness {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        y_lo: f64,
        #[arg(long, default_value_t = 1.0)]
        y_hi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Menus as JSON or CSV (`kind,gain_or_profit,cost`).
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Learning-curve spec as JSON.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Use the bundled replay setup for this corruption instead of files.
    #[arg(long, conflicts_with_all = ["profiles", "model"])]
    replay: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawKind {
    Constant,
    Uniform,
    Sufficient,
    Scarce,
}

#[derive(Args)]
struct TraceArgs {
    /// Trace CSV (`t,d,c`).
    #[arg(long, conflicts_with = "law")]
    trace: Option<PathBuf>,
    /// Capacity law; the data law is constant `--d` or uniform on
    /// `[--d-min, --d-max]`.
    #[arg(long, value_enum)]
    law: Option<LawKind>,
    #[arg(long, conflicts_with_all = ["d_min", "d_max"])]
    d: Option<f64>,
    #[arg(long, requires = "d_max")]
    d_min: Option<f64>,
    #[arg(long, requires = "d_min")]
    d_max: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, requires = "c_hi")]
    c_lo: Option<f64>,
    #[arg(long, requires = "c_lo")]
    c_hi: Option<f64>,
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

const DEFAULT_HORIZON: usize = 100;
const DEFAULT_VOLUME: f64 = 1000.0;

struct Problem {
    profiles: ProfileSet,
    model: AccuracyModel,
    replay: Option<Replay>,
}

fn load_menus(path: &Path) -> Result<ProfileSet> {
    let raw = read_profiles(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(raw.prune(true)?)
}

fn load_model(path: &Path) -> Result<AccuracyModel> {
    let spec = read_model(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(spec.build()?)
}

fn replay_for(name: &str, horizon: Option<usize>, seed: u64, kappa: Option<f64>) -> Result<Replay> {
    let mut spec = ReplaySpec::new(name);
    if let Some(t) = horizon {
        spec.horizon = t;
    }
    if let Some(k) = kappa {
        spec.kappa = k;
    }
    spec.seed = seed;
    Ok(build_replay(&spec)?)
}

impl ProblemArgs {
    fn load(&self, t: &TraceArgs) -> Result<Problem> {
        if let Some(name) = &self.replay {
            let replay = replay_for(name, t.horizon, t.seed, None)?;
            return Ok(Problem {
                profiles: replay.profiles.clone(),
                model: replay.model,
                replay: Some(replay),
            });
        }
        let (Some(p), Some(m)) = (&self.profiles, &self.model) else {
            bail!("need --profiles and --model, or --replay NAME");
        };
        Ok(Problem {
            profiles: load_menus(p)?,
            model: load_model(m)?,
            replay: None,
        })
    }

    /// Menus only; the model is not needed to sample a trace.
    fn load_menus(&self, t: &TraceArgs) -> Result<(Option<ProfileSet>, Option<Replay>)> {
        if let Some(name) = &self.replay {
            let replay = replay_for(name, t.horizon, t.seed, None)?;
            return Ok((Some(replay.profiles.clone()), Some(replay)));
        }
        Ok((self.profiles.as_deref().map(load_menus).transpose()?, None))
    }
}

impl TraceArgs {
    fn spec(&self, law: LawKind) -> Result<TraceSpec> {
        let d_law = match (self.d_min, self.d_max) {
            (Some(d_min), Some(d_max)) => DataLaw::Uniform { d_min, d_max },
            _ => DataLaw::Constant { d: self.d.unwrap_or(DEFAULT_VOLUME) },
        };
        let c_law = match law {
            LawKind::Constant => CapacityLaw::Constant {
                c: self.c.ok_or_else(|| anyhow!("--law constant needs --c"))?,
            },
            LawKind::Uniform => match (self.c_lo, self.c_hi) {
                (Some(c_lo), Some(c_hi)) => CapacityLaw::Uniform { c_lo, c_hi },
                _ => bail!("--law uniform needs --c-lo and --c-hi"),
            },
            LawKind::Sufficient => CapacityLaw::Sufficient,
            LawKind::Scarce => CapacityLaw::Scarce,
        };
        Ok(TraceSpec {
            horizon: self.horizon.unwrap_or(DEFAULT_HORIZON),
            d_law,
            c_law,
            seed: self.seed,
        })
    }

    fn resolve(&self, profiles: Option<&ProfileSet>, replay: Option<&Replay>) -> Result<Trace> {
        if let Some(path) = &self.trace {
            let trace = read_trace(path).with_context(|| format!("reading {}", path.display()))?;
            if let Some(p) = profiles {
                trace.check_feasible(p)?;
            }
            return Ok(trace);
        }
        if let Some(law) = self.law {
            return Ok(sample_trace(&self.spec(law)?, profiles)?);
        }
        match (replay, profiles) {
            (Some(r), Some(p)) => Ok(generate_trace(&r.trace_spec, p)?),
            _ => bail!("need --trace PATH, --law KIND or --replay NAME"),
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => Ok(std::io::stdout().write_all(bytes)?),
    }
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", path.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> orric_core::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Parsed `--policies` list.
struct Selection {
    policies: Vec<Policy>,
    oracle: bool,
}

fn parse_policies(list: &str) -> Result<Selection> {
    let mut sel = Selection { policies: Vec::new(), oracle: false };
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match name {
            "all" => {
                sel.policies.extend(Policy::ALL);
                sel.oracle = true;
            }
            "oracle" => sel.oracle = true,
            _ => sel.policies.push(name.parse()?),
        }
    }
    let mut seen = Vec::new();
    sel.policies.retain(|p| {
        let fresh = !seen.contains(p);
        seen.push(*p);
        fresh
    });
    if sel.policies.is_empty() && !sel.oracle {
        bail!("--policies selects nothing");
    }
    Ok(sel)
}

fn cmd_run(
    problem: &ProblemArgs,
    trace_args: &TraceArgs,
    policies: &str,
    cap: u64,
    out: &Path,
) -> Result<()> {
    let sel = parse_policies(policies)?;
    let p = problem.load(trace_args)?;
    let trace = trace_args.resolve(Some(&p.profiles), p.replay.as_ref())?;
    let horizon = trace.horizon();
    let bounds = compute_bounds(&p.model, &p.profiles, trace.d_min(), trace.d_max(), horizon)?;

    let runs: Vec<RunResult> = sel
        .policies
        .iter()
        .map(|&policy| run_policy(policy, &trace, &p.profiles, &p.model))
        .collect::<orric_core::Result<_>>()?;
    let oracle = if sel.oracle {
        match offline_optimal(&trace, &p.profiles, &p.model, cap) {
            Ok(r) => Some(Ok(r)),
            Err(e @ Error::EnumerationCap { .. }) => Some(Err(e.to_string())),
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for run in runs.iter().chain(oracle.iter().filter_map(|o| o.as_ref().ok())) {
        let bytes = csv_bytes(|b| write_run_csv(b, run))?;
        write_atomic(&out.join(format!("run_{}.csv", run.policy)), &bytes)?;
    }
    let schedule = weight_schedule(
        horizon,
        &p.model,
        trace.d_min(),
        trace.d_max(),
        p.profiles.a_min_infer(),
    )?;
    write_atomic(&out.join("weights.csv"), &csv_bytes(|b| write_weights_csv(b, &schedule))?)?;
    write_atomic(&out.join("trace.csv"), &csv_bytes(|b| write_trace_csv(b, &trace))?)?;

    // ratios are taken between the totals as printed
    let oracle_total = oracle
        .as_ref()
        .and_then(|o| o.as_ref().ok())
        .map(|r| round_sig12(r.total));
    let policy_rows: Vec<Value> = runs
        .iter()
        .map(|r| {
            let total = round_sig12(r.total);
            let mut row = json!({ "name": r.policy, "total": num(total) });
            if let Some(opt) = oracle_total {
                row["ratio_vs_oracle"] = num(total / opt);
            }
            if r.policy == "knowledge-distillation" {
                row["degraded_slots"] = json!(r.degraded_slots);
            }
            row
        })
        .collect();
    let oracle_json = match &oracle {
        None => Value::Null,
        Some(Ok(r)) => json!({ "total": num(r.total) }),
        Some(Err(reason)) => json!({ "skipped": reason }),
    };
    let summary = json!({
        "T": horizon,
        "policies": policy_rows,
        "oracle": oracle_json,
        "bounds": bounds_json(&bounds),
    });
    write_atomic(&out.join("summary.json"), &pretty(&summary))
}

fn cmd_bounds(
    problem: &ProblemArgs,
    trace: Option<&Path>,
    d_min: Option<f64>,
    d_max: Option<f64>,
    horizon: Option<usize>,
) -> Result<Value> {
    let no_trace = TraceArgs {
        trace: None,
        law: None,
        d: None,
        d_min: None,
        d_max: None,
        c: None,
        c_lo: None,
        c_hi: None,
        horizon,
        seed: 0,
    };
    let p = problem.load(&no_trace)?;
    let (lo, hi, t) = match (trace, &p.replay) {
        (Some(path), _) => {
            let tr = read_trace(path).with_context(|| format!("reading {}", path.display()))?;
            (tr.d_min(), tr.d_max(), horizon.unwrap_or(tr.horizon()))
        }
        (None, Some(r)) if d_min.is_none() && d_max.is_none() => {
            let d = match r.trace_spec.d_law {
                DataLaw::Constant { d } => d,
                DataLaw::Uniform { .. } => unreachable!("replay volumes are constant"),
            };
            (d, d, r.trace_spec.horizon)
        }
        (None, _) => {
            let (Some(lo), Some(hi)) = (d_min.or(d_max), d_max.or(d_min)) else {
                bail!("need --d-min/--d-max or --trace");
            };
            (lo, hi, horizon.ok_or_else(|| anyhow!("need --T"))?)
        }
    };
    let b = compute_bounds(&p.model, &p.profiles, lo, hi, t)?;
    Ok(bounds_json(&b))
}

fn cmd_replay(name: &str, horizon: Option<usize>, seed: u64, kappa: Option<f64>, out: &Path) -> Result<()> {
    let r = replay_for(name, horizon, seed, kappa)?;
    let trace = generate_trace(&r.trace_spec, &r.profiles)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_atomic(&out.join("profiles.json"), &pretty(&profiles_json(&r.profiles)))?;
    let model = ModelSpec {
        curve: *r.model.curve(),
        domain_max: r.model.domain_max(),
        l: Some(r.model.l()),
    };
    write_atomic(&out.join("model.json"), &pretty(&serde_json::to_value(model)?))?;
    write_atomic(&out.join("trace.csv"), &csv_bytes(|b| write_trace_csv(b, &trace))?)?;
    let info = json!({
        "corruption": name,
        "T": r.trace_spec.horizon,
        "seed": seed,
        "beta": num(r.beta),
        "c1": num(r.c1),
        "c2": num(r.c2),
        "f_at_zero": num(r.model.f_at_zero()),
        "f_at_max": num(r.model.f_at_max()),
        "L": num(r.model.l()),
        "curve_family": r.model.curve().family(),
        "M": r.profiles.m(),
        "N": r.profiles.n(),
    });
    write_atomic(&out.join("replay.json"), &pretty(&info))
}

fn cmd_witness(model: &Path, y_lo: f64, y_hi: f64) -> Result<Value> {
    let w = nonconvexity_witness(&load_model(model)?, y_lo, y_hi)?;
    let point = |p: Option<orric_core::engine::WitnessPoint>| {
        p.map_or(Value::Null, |p| {
            json!({
                "x1": num(p.x1), "x2": num(p.x2), "y1": num(p.y1), "y2": num(p.y2),
                "alpha": num(p.alpha), "E": num(p.e),
            })
        })
    };
    Ok(json!({
        "found": w.found(),
        "positive": point(w.positive),
        "negative": point(w.negative),
    }))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenTrace { problem, trace, out } => {
            let (profiles, replay) = problem.load_menus(&trace)?;
            let tr = trace.resolve(profiles.as_ref(), replay.as_ref())?;
            emit(out.as_deref(), &csv_bytes(|b| write_trace_csv(b, &tr))?)
        }
        Command::Prune { profiles, out } => {
            emit(out.as_deref(), &pretty(&profiles_json(&load_menus(&profiles)?)))
        }
        Command::Run { problem, trace, policies, oracle_cap, out } => {
            cmd_run(&problem, &trace, &policies, oracle_cap, &out)
        }
        Command::Oracle { problem, trace, oracle_cap, out } => {
            let p = problem.load(&trace)?;
            let tr = trace.resolve(Some(&p.profiles), p.replay.as_ref())?;
            let r = offline_optimal(&tr, &p.profiles, &p.model, oracle_cap)?;
            emit(out.as_deref(), &csv_bytes(|b| write_run_csv(b, &r))?)
        }
        Command::Bounds { problem, trace, d_min, d_max, horizon, out } => {
            let v = cmd_bounds(&problem, trace.as_deref(), d_min, d_max, horizon)?;
            emit(out.as_deref(), &pretty(&v))
        }
        Command::Replay { name, horizon, seed, kappa, out } => {
            cmd_replay(&name, horizon, seed, kappa, &out)
        }
        Command::Witness { model, y_lo, y_hi, out } => {
            emit(out.as_deref(), &pretty(&cmd_witness(&model, y_lo, y_hi)?))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let infeasible = err
        .chain()
        .filter_map(|e| e.downcast_ref::<Error>())
        .any(Error::is_infeasible);
    if infeasible {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
