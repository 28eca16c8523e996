use thiserror::Error;

use crate::mdp::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(#[from] Violation),

    #[error(
        "invalid policy: action {action} at state {state} is out of range for {n_actions} actions"
    )]
    InvalidPolicy {
        state: usize,
        action: usize,
        n_actions: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The linear system `(I - gamma P) v = r` was reported singular.
    #[error("malformed kernel: linear system is singular")]
    MalformedKernel,

    #[error("value iteration hit the iteration limit ({iterations}) with residual {residual:e}")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("chain is not ergodic: {0}")]
    NotErgodic(String),

    #[error(
        "MDP is not uniformly ergodic: policy {policy:?} admits no minorization up to m = {m_max}"
    )]
    NotUniformlyErgodic { policy: Vec<usize>, m_max: usize },

    #[error("chain did not mix within m_max = {m_max}")]
    NotMixing { m_max: usize },

    #[error("policy enumeration infeasible: |A|^|S| = {count:e} exceeds cap {cap}; supply the optimal gain externally")]
    EnumerationInfeasible { count: f64, cap: u64 },

    #[error("sample size {n} per state-action pair overflows the sample counters")]
    CountOverflow { n: u64 },

    #[error("sample budget exceeded: requires {required} samples, cap is {cap}")]
    BudgetExceeded { required: u64, cap: u64 },

    #[error("regression failed: {0}")]
    Regression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
