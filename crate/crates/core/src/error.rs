use alloc::string::String;

use crate::quarter::Quarter;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("malformed quarter `{0}`: expected YYYYQn with n in 1..=4")]
    ParseQuarter(String),
    #[error("malformed date `{0}`: expected YYYY-MM-DD")]
    ParseDate(String),
    #[error("unknown release `{0}`: expected 1, 2 or 3")]
    ParseRelease(String),
    #[error("non-finite forecast value for economist `{economist}` in {quarter}")]
    NonFiniteValue { economist: String, quarter: Quarter },
    #[error("duplicate value for {quarter} in release {release}")]
    DuplicateActual { quarter: Quarter, release: u8 },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(
        "design matrix is rank deficient: column {column} is linearly dependent on earlier columns"
    )]
    RankDeficient { column: usize },
    #[error("not enough observations: {required} required, {available} available")]
    InsufficientObservations { required: usize, available: usize },
    #[error("HAC lag {lag} must be smaller than the sample size {n}")]
    LagTooLarge { lag: usize, n: usize },
    #[error("restriction covariance R V R' is singular")]
    SingularCovariance,
    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),
    #[error("no baseline for {quarter}")]
    MissingBaseline { quarter: Quarter },
    #[error("gap of {len} missing quarters starting at {start} exceeds the limit of {limit}")]
    GapTooLong {
        start: Quarter,
        len: usize,
        limit: usize,
    },
    #[error("insufficient history before target {target}: {required} observations required, {available} available")]
    InsufficientHistory {
        target: Quarter,
        required: usize,
        available: usize,
    },
    #[error("fixed effects need at least two forecasters with two or more observations")]
    SingleEntity,
    #[error("clustered covariance needs at least two clusters, got {0}")]
    TooFewClusters(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
}
