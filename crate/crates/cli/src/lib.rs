//! Library surface of the `mvk` command-line tool; the binary is a thin
//! argument-parsing shell over these functions so tests can drive the exact
//! command implementations in-process.

// Validation sites use `!(x > 0.0)` so NaN inputs fail the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

/// Errors mapped onto the process exit-code contract:
/// 2 = configuration/usage, 3 = numerical blow-up, 4 = linear algebra.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerics(String),
    Linalg(String),
}

impl CliError {
    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerics(_) => 3,
            CliError::Linalg(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerics(m) => write!(f, "numerical error: {m}"),
            CliError::Linalg(m) => write!(f, "linear algebra error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mvk_core::CoreError> for CliError {
    fn from(err: mvk_core::CoreError) -> Self {
        use mvk_core::CoreError::*;
        match err {
            NonFinite { .. } => CliError::Numerics(err.to_string()),
            GramSingular { .. } | EigenFailure { .. } => CliError::Linalg(err.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
