use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative or non-finite rate {value} for {what}")]
    NegativeRate { what: String, value: f64 },

    #[error("atom point {point:?} lies outside [0,1]^{d}")]
    AtomOutOfCube { point: Vec<f64>, d: usize },

    #[error("atom at the zero vector; put the Kingman part in rho_pair instead")]
    AtomAtZero,

    #[error("type index {index} out of range for d = {d}")]
    TypeOutOfRange { index: usize, d: usize },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("measure for type {target} is not integrable: {detail}")]
    NonIntegrable { target: usize, detail: String },

    #[error("transition table needs {needed} entries, cap is {cap}")]
    CapExceeded { needed: u128, cap: u128 },

    #[error("invalid typed partition: {0}")]
    InvalidPartition(String),

    #[error("improper integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("recursion violated: max residual {residual:e} exceeds {tolerance:e}")]
    RecursionViolated { residual: f64, tolerance: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
