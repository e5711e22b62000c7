use serde::Serialize;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// A failed command: the exit code, a short tag and a human message.
#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    #[serde(rename = "exit_code")]
    pub code: u8,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn validation(kind: &str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn runtime(kind: &str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::runtime("io", format!("{}: {e}", path.display()))
    }

    /// One-line JSON record for machine consumers.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "status": "error",
            "exit_code": self.code,
            "kind": self.kind,
            "message": self.message,
        })
        .to_string()
    }
}

impl From<hazborrow::Error> for CliError {
    fn from(e: hazborrow::Error) -> Self {
        let code = if e.is_validation() {
            EXIT_VALIDATION
        } else {
            EXIT_RUNTIME
        };
        Self {
            code,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}
