use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain where the formula is defined.
    #[error("{op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("invalid safety spec: {0}")]
    InvalidSpec(String),

    #[error("ville bound requires an upper bound B on the barrier")]
    MissingUpperBound,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("negative conditional second moment {value} at step {step}")]
    NegativeSecondMoment { step: usize, value: f64 },

    #[error("invalid disturbance: {0}")]
    InvalidDistribution(String),

    #[error("invalid gait parameter: {0}")]
    InvalidGait(String),

    /// The robot sits exactly on the obstacle center, so the outward direction is undefined.
    #[error("barrier direction undefined: position coincides with the obstacle center")]
    DegenerateDirection,

    #[error("safety filter infeasible: constraint gradient vanishes with violation {violation:e}")]
    InfeasibleFilter { violation: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        op,
        msg: msg.into(),
    }
}
