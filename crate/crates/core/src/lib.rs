//! Online resource allocation between colocated model retraining and
//! inference serving on an edge server.
//!
//! The crate models a time-slotted system where every slot receives `D(t)`
//! samples and `C(t)` units of compute. A scheduler picks one retraining
//! configuration and one inference configuration per slot; the long-term
//! objective rewards inference profit scaled by a concave learning curve of
//! the average historical retraining extent.
//!
//! Modules:
//! - [`profiles`]: configuration menus and dominance pruning.
//! - [`accuracy`]: learning-curve families and their derived constants.
//! - [`policies`]: ORRIC's two-pointer slot rule and four heuristics.
//! - [`engine`]: trace execution, the exact objective, the brute-force
//!   offline optimum and the non-convexity witness search.
//! - [`analysis`]: competitive-ratio bounds and the adversarial instance for
//!   Inference-Only.
//! - [`scenario`]: synthetic trace laws and the CIFAR-10-C replay setup.
//! - [`io`]: file formats shared by the CLI and the browser demo.

pub mod accuracy;
pub mod analysis;
pub mod engine;
mod error;
pub mod io;
pub mod numeric;
pub mod policies;
pub mod profiles;
pub mod scenario;

pub use accuracy::{AccuracyModel, Curve};
pub use analysis::{build_io_tight_instance, compute_bounds, CrBounds};
pub use engine::{
    evaluate_objective, nonconvexity_witness, offline_optimal, run_policy, RunResult, Trace,
};
pub use error::{Error, Result};
pub use policies::{compute_weights, heuristic_step, orric_step, Decision, Policy, ScheduleWeights};
pub use profiles::{normalize_profits, prune_dominated, InferConfig, ProfileSet, RetrainConfig};
pub use scenario::{build_replay, generate_trace, sample_trace, ReplaySpec, TraceSpec};
