use thiserror::Error;

/// Errors raised by the library. Validation failures that are part of an
/// operation's normal contract are returned as reports instead.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown measurement `{0}`")]
    UnknownMeasurement(String),
    #[error("unknown outcome `{outcome}` for measurement `{measurement}`")]
    UnknownOutcome { measurement: String, outcome: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid procedure: {0}")]
    InvalidProcedure(String),
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error("incompatible protocols: {0}")]
    IncompatibleProtocols(String),
    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),
    #[error("not a subset: {0}")]
    NotSubset(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("site-locality violation: {0}")]
    SiteLocality(String),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("candidate cap of {cap} exhausted after {visited} candidates")]
    CapExceeded { cap: u64, visited: u64 },
    #[error("extraction failed at step {step}: {detail}")]
    Extraction { step: String, detail: String },
    #[error("schema violation at {at}: {detail}")]
    Schema { at: String, detail: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
