use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inference menu is empty")]
    EmptyInferenceMenu,

    #[error("retraining menu has no zero-cost, zero-gain configuration")]
    MissingZeroRetrain,

    #[error("accuracy model rejected: {0}")]
    InvalidModel(String),

    #[error("lower bound L = {l} exceeds f'(A_max) = {derivative}")]
    LowerBoundTooLarge { l: f64, derivative: f64 },

    #[error("argument {x} outside model domain [0, {domain_max}]")]
    OutOfDomain { x: f64, domain_max: f64 },

    #[error("slot {t} outside horizon [1, {horizon}]")]
    SlotOutOfRange { t: usize, horizon: usize },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("budget {budget} per sample admits no configuration pair")]
    NoFeasiblePair { budget: f64 },

    #[error("slot {t}: budget {budget} per sample admits no configuration pair")]
    Infeasible { t: usize, budget: f64 },

    #[error("trace law cannot be served: {0}")]
    InfeasibleLaw(String),

    #[error("slot {t}: decision uses {used} compute but capacity is {capacity}")]
    BudgetExceeded { t: usize, used: f64, capacity: f64 },

    #[error("offline enumeration of {size} retraining sequences exceeds cap {cap}")]
    EnumerationCap { size: f64, cap: u64 },

    #[error("crossover threshold is undefined when L = 0")]
    UndefinedThreshold,

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by a trace that cannot be served under the
    /// profile set (as opposed to malformed inputs).
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::Infeasible { .. }
                | Error::NoFeasiblePair { .. }
                | Error::BudgetExceeded { .. }
                | Error::InfeasibleLaw(_)
        )
    }
}
