use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid control parameters: {0}")]
    InvalidParams(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown policy `{name}`; valid kinds: {valid}")]
    UnknownPolicy { name: String, valid: &'static str },

    #[error("policy `{kind}` requires parameter `{param}` (write it as `{kind}:<{param}>`)")]
    MissingPolicyParameter { kind: &'static str, param: &'static str },

    #[error("invalid policy `{spec}`: {reason}")]
    InvalidPolicy { spec: String, reason: String },

    #[error("invalid intent: {0}")]
    InvalidIntent(String),

    #[error("translation does not match trace: {0}")]
    InconsistentTranslation(String),

    #[error("trace is empty")]
    EmptyTrace,

    #[error("oracle deadline {deadline} exceeds the enumeration limit of {limit} slots")]
    OracleDeadline { deadline: usize, limit: usize },

    #[error("realization has {available} slots but {required} are required")]
    RealizationTooShort { available: usize, required: usize },

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
