use serde::Serialize;

use degenlab::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_ACCEPTANCE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Machine-readable failure, printed as one JSON line on stderr.
#[derive(Clone, Debug, Serialize)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<i32>,
    #[serde(skip)]
    pub code: i32,
}

impl CliError {
    pub fn validation(kind: &str, message: impl Into<String>) -> Self {
        Self { kind: kind.into(), message: message.into(), k: None, code: EXIT_VALIDATION }
    }

    pub fn internal(kind: &str, message: impl Into<String>) -> Self {
        Self { kind: kind.into(), message: message.into(), k: None, code: EXIT_INTERNAL }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!("{{\"kind\":\"{}\"}}", self.kind))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::Unresolvable { k, .. } => Self { kind: "unresolvable".into(), message, k: Some(k), code: EXIT_VALIDATION },
            Error::Precondition(_) | Error::InvalidGrid(_) | Error::Domain(_) | Error::SeriesTooLong(_) | Error::MalformedSeries(_) | Error::EmptySeries => {
                Self::validation("validation", message)
            }
            Error::Io(_) | Error::Json(_) => Self::internal("io", message),
            _ => Self::internal("numerical", message),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}
