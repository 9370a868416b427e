//! Command implementations and the HTTP service behind the `gradecast`
//! binary.

pub mod args;
pub mod commands;
pub mod service;

use std::fmt;

use gradecast_core::{Error, PredictError};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_COMPUTATION: u8 = 3;

/// A failed command: message for stderr plus the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { code: EXIT_INPUT, message: message.into() }
    }

    pub fn computation(message: impl Into<String>) -> Self {
        CliError { code: EXIT_COMPUTATION, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TooFewSamples { .. }
            | Error::NonFiniteInput
            | Error::DimensionMismatch { .. }
            | Error::SingularClassModel(_)
            | Error::TooFewClasses(_)
            | Error::InvalidPartition
            | Error::EmptyInput
            | Error::EmptyPairs
            | Error::LengthMismatch { .. }
            | Error::ZeroDenominator => EXIT_COMPUTATION,
            _ => EXIT_INPUT,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<PredictError> for CliError {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::Failed(inner) => inner.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
