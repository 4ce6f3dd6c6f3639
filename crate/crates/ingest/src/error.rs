use crashnet_core::panel::PanelError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("network error for {url}: {message}")]
    Network { url: String, message: String },
    #[error("{exchange} does not list symbol `{symbol}`")]
    SymbolUnknown { exchange: String, symbol: String },
    #[error("{exchange} has no history for {symbol} in [{start}, {end})")]
    HistoryUnavailable { exchange: String, symbol: String, start: i64, end: i64 },
    #[error("unexpected HTTP {status} from {url}: {body}")]
    Http { url: String, status: u16, body: String },
    #[error("could not parse response from {url}: {message}")]
    Parse { url: String, message: String },
    #[error("invalid range: start {start} must not exceed end {end}")]
    InvalidRange { start: i64, end: i64 },
    #[error("{symbol}: {hours} consecutive missing hours starting at {start} (limit {limit})")]
    GapTooLarge { symbol: String, start: i64, hours: usize, limit: usize },
    #[error("nothing stored for `{symbol}` on {exchange}; run `fetch` first")]
    MissingSymbol { exchange: String, symbol: String },
    #[error("{symbol}: first hour {ts} is missing, nothing to forward-fill from")]
    MissingFirstHour { symbol: String, ts: i64 },
    #[error("store at {0} is locked by another writer")]
    StoreLocked(PathBuf),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("registry: {0}")]
    Registry(String),
    #[error("unknown exchange `{0}` (expected kraken or binance)")]
    UnknownExchange(String),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl IngestError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, IngestError::Network { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IngestError::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        IngestError::Csv { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, IngestError>;
