use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("{list} has {found} entries, expected {expected}")]
    LengthMismatch {
        list: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("attach site {site} is out of range for a bath of {bath_sites} sites")]
    AttachSiteOutOfRange { site: usize, bath_sites: usize },

    #[error("operation requires {expected} topology")]
    WrongTopology { expected: &'static str },

    #[error("{what} = {value} lies outside the bath band (|x| < {limit})")]
    OutOfBand {
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("dark-state condition not satisfied: {0}")]
    DarkConditionNotMet(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("Fock basis of {size} states exceeds the cap of {cap}")]
    BasisTooLarge { size: u128, cap: usize },

    #[error("permanent of a {size}x{size} matrix exceeds the cap of {cap}")]
    PermanentTooLarge { size: usize, cap: usize },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("mixture weights must be non-negative and sum to 1 (sum {0})")]
    InvalidWeights(f64),

    #[error("filtering failure: post-selected trace {trace:e} is below {threshold:e}")]
    FilteringFailure { trace: f64, threshold: f64 },

    #[error("integration step too large: trace drifted by {drift:e}")]
    StepSize { drift: f64 },

    #[error("bath of {bath_sites} sites is too short for z = {z} (need clearance {required}, have {available})")]
    LightCone {
        bath_sites: usize,
        z: f64,
        required: usize,
        available: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
