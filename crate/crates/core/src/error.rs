use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid realization: {0}")]
    InvalidRealization(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model mismatch: {algorithm} requires {expected}, instance is {found}")]
    ModelMismatch {
        algorithm: &'static str,
        expected: &'static str,
        found: &'static str,
    },

    #[error("allocation row sums to {sum}, exceeding 1 + {tol}")]
    InfeasibleMarginals { sum: f64, tol: f64 },

    #[error("no oracle value for edge subset {mask:#x}")]
    OracleGap { mask: u64 },

    #[error("oracle returned {value} > 1 on subset {mask:#x}; scale the reward into [0, 1]")]
    ScalingViolation { mask: u64, value: f64 },

    #[error(
        "fractional support of {support} edges exceeds the enumeration limit {limit}; use sampling"
    )]
    EnumerationLimit { support: usize, limit: usize },

    #[error("search space of {size} exceeds the cap {cap}")]
    SizeCap { size: f64, cap: f64 },

    #[error("curvature undefined: every singleton has zero value")]
    UndefinedCurvature,

    #[error("P'' vanishes at u = {u} inside the domain")]
    DegenerateCurvature { u: f64 },

    #[error("no feasible r >= {floor}: {diagnostics}")]
    NoFeasibleRatio { floor: f64, diagnostics: String },

    #[error("load {u} exceeds the ODE grid end {end}")]
    GridExceeded { u: f64, end: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
