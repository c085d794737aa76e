use std::fmt;

use serde_json::json;

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// An error that ends the run, reported as a JSON object on stderr.
#[derive(Debug)]
pub struct Failure {
    pub kind: String,
    pub message: String,
    pub code: u8,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Failure {
        Failure {
            kind: "invalid-argument".into(),
            message: message.into(),
            code: EXIT_INPUT,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind, "message": self.message, "exit_code": self.code } }).to_string()
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<tnl_core::Error> for Failure {
    fn from(e: tnl_core::Error) -> Failure {
        Failure {
            kind: e.kind().into(),
            code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure {
            kind: "io".into(),
            message: e.to_string(),
            code: EXIT_INPUT,
        }
    }
}
