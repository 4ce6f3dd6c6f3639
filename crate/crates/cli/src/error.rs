//! Error classes that map onto process exit codes.

use crashnet_ingest::IngestError;
use thiserror::Error;

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Bad flags, bad configuration or an unknown symbol.
#[derive(Debug, Error)]
#[error("{message}")]
pub struct UsageError {
    pub message: String,
}

impl UsageError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { message: message.into() }
    }

    pub fn unknown_symbol(symbol: &str) -> Self {
        Self::new(format!("unknown symbol `{symbol}`"))
    }
}

/// `report` found a stage without its outputs.
#[derive(Debug, Error)]
#[error("missing output of stage `{stage}`: {path} not found (run `crashnet {stage}` first)")]
pub struct MissingStageOutput {
    pub stage: String,
    pub path: String,
}

/// Exit code for an error chain: usage problems and unknown symbols are 2,
/// everything else 1.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<IngestError>() {
            if matches!(e, IngestError::SymbolUnknown { .. } | IngestError::UnknownExchange(_)) {
                return EXIT_USAGE;
            }
        }
    }
    EXIT_RUNTIME
}
