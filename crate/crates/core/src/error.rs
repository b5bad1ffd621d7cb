use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid run-length set: {0}")]
    InvalidRunLengthSet(String),

    #[error("run-length set components overlap at weight {0}")]
    Overlap(String),

    #[error("invalid label set: {0}")]
    InvalidLabels(String),

    #[error("invalid run string: {0}")]
    InvalidRunString(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("series diverges at s = {s}: {detail}")]
    Diverges { s: f64, detail: String },

    #[error("series tolerance {tol:e} not reached within {cap} terms")]
    IterationCap { tol: f64, cap: usize },

    #[error("could not bracket the capacity: {0}")]
    NoBracket(String),

    #[error("capacity is 0 (degenerate system): {0}")]
    Degenerate(String),

    #[error("maxentropic run-length distribution does not normalize: sum = {sum}")]
    Normalization { sum: f64 },

    #[error(
        "sign of the capacity residual is indeterminate at c = {c}: interval [{lo:e}, {hi:e}]"
    )]
    Indeterminate { c: f64, lo: f64, hi: f64 },

    #[error("weight {weight} does not lie on {unit}")]
    OffGrid { weight: String, unit: String },

    #[error("truncation covers only {covered} of the probability mass (need {required})")]
    TruncationInsufficient { covered: f64, required: f64 },

    #[error("{what} exceeds the size limit {limit}")]
    SizeLimit { what: String, limit: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
