use std::fmt;
use std::path::Path;

use serde::Serialize;

/// Failure of a run, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Core(vanish::Error),
    /// Bad configuration or unreadable input.
    Input(String),
    /// A certificate or bound check did not hold.
    Check(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    /// 1 input error, 2 solver non-convergence, 3 certificate failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => e.exit_code(),
            CliError::Input(_) => 1,
            CliError::Check(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Input(_) => "input",
            CliError::Check(_) => "check_failed",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Report {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .expect("error report serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(m) | CliError::Check(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<vanish::Error> for CliError {
    fn from(e: vanish::Error) -> Self {
        CliError::Core(e)
    }
}
