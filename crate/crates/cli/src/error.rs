use serde::Serialize;
use serde_json::{json, Value};
use signcoach_core::driver::DriverError;
use signcoach_core::format::SchemaViolation;
use signcoach_core::pipeline::PipelineError;
use signcoach_core::session::SessionError;
use signcoach_core::synth::SpecOutOfRange;
use signcoach_service::StoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: file not found")]
    FileNotFound { path: String },
    #[error("{file}: {violation}")]
    Schema { file: String, violation: SchemaViolation },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("config: {0}")]
    Config(String),
    #[error("no store configured; pass --store, set `store` in the config file or SIGNCOACH_STORE")]
    NoStore,
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Session(#[from] DriverError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Spec(#[from] SpecOutOfRange),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
    detail: Value,
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> CliError {
        let path = path.as_ref().display().to_string();
        match source.kind() {
            std::io::ErrorKind::NotFound => CliError::FileNotFound { path },
            _ => CliError::Io { path, source },
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::FileNotFound { .. } | CliError::Store(StoreError::NotFound { .. }) => "NotFound",
            CliError::Schema { .. } | CliError::Store(StoreError::Schema(_)) => "SchemaViolation",
            CliError::Store(StoreError::Conflict { .. }) => "Conflict",
            CliError::Argument(_) | CliError::Store(StoreError::InvalidId(_)) => "InvalidArgument",
            CliError::Config(_) | CliError::NoStore => "Config",
            CliError::Session(DriverError::Session(SessionError::IllegalEvent { .. })) => "IllegalEvent",
            CliError::Session(DriverError::Schema(_)) => "SchemaViolation",
            CliError::Session(DriverError::Pipeline(PipelineError::PoorTracking { .. }))
            | CliError::Pipeline(PipelineError::PoorTracking { .. }) => "PoorTracking",
            CliError::Session(_) => "SessionError",
            CliError::Pipeline(_) => "ComparisonFailed",
            CliError::Spec(_) => "SpecOutOfRange",
            CliError::Store(StoreError::Io(_)) | CliError::Io { .. } => "Io",
        }
    }

    fn detail(&self) -> Value {
        match self {
            CliError::FileNotFound { path } => json!({ "path": path }),
            CliError::Schema { file, violation } => {
                json!({ "file": file, "path": violation.path, "reason": violation.reason })
            }
            CliError::Store(StoreError::NotFound { collection, id }) => json!({ "collection": collection, "id": id }),
            CliError::Session(DriverError::Session(SessionError::IllegalEvent { phase, event })) => {
                json!({ "phase": phase, "event": event })
            }
            CliError::Spec(e) => json!({ "kind": e.kind, "reason": e.reason }),
            _ => Value::Null,
        }
    }

    /// `{ "code", "message", "detail" }` on one line.
    pub fn to_json(&self) -> String {
        let body = ErrorBody {
            code: self.code(),
            message: self.to_string(),
            detail: self.detail(),
        };
        serde_json::to_string(&body).expect("errors serialize")
    }
}
