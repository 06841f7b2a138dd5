//! Process-level error classification. Every failure maps to one of three
//! exit codes so scripts can branch on the kind of problem:
//!
//! - `1` usage: bad flags, bad config values, invalid parameter
//!   combinations, or a held training lock,
//! - `2` data: unreadable or malformed input files and artifacts,
//! - `3` backend: the generation backend stayed down through its retry
//!   budget.

use std::fmt;

use refute_core::orchestrate::OrchestrateError;
use refute_core::pipeline::PipelineError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Backend(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Backend(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) | CliError::Backend(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl std::error::Error for CliError {}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

pub fn backend(msg: impl Into<String>) -> CliError {
    CliError::Backend(msg.into())
}

impl From<OrchestrateError> for CliError {
    fn from(err: OrchestrateError) -> Self {
        match &err {
            OrchestrateError::Backend { .. } => backend(err.to_string()),
            OrchestrateError::BadRequest(_) | OrchestrateError::BadTemplate(_) => {
                usage(err.to_string())
            }
            OrchestrateError::EmptyEvidence => {
                data("no evidence matched the claim; is the store populated?")
            }
            OrchestrateError::Pipeline(PipelineError::BadConfig(_)) => usage(err.to_string()),
            OrchestrateError::Pipeline(_) | OrchestrateError::Reward(_) => data(err.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(usage("x").exit_code(), 1);
        assert_eq!(data("x").exit_code(), 2);
        assert_eq!(backend("x").exit_code(), 3);
    }

    #[test]
    fn backend_exhaustion_maps_to_backend_code() {
        let err = OrchestrateError::Backend {
            message: "connection refused".into(),
            attempts: 3,
            evidence: vec![],
        };
        assert_eq!(CliError::from(err).exit_code(), 3);
    }

    #[test]
    fn bad_pipeline_config_maps_to_usage() {
        let err = OrchestrateError::Pipeline(PipelineError::BadConfig("k too large".into()));
        assert_eq!(CliError::from(err).exit_code(), 1);
    }
}
