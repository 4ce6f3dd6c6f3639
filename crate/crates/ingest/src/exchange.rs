//! Exchange identifiers and the common interface of market-data sources.

use crate::binance::Binance;
use crate::error::{IngestError, Result};
use crate::http::{HttpClient, RateLimiter, RetryPolicy, Transport};
use crate::kraken::Kraken;
use crashnet_core::{Candle, TradeRecord};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exchange {
    Kraken,
    Binance,
}

impl Exchange {
    pub fn name(self) -> &'static str {
        match self {
            Exchange::Kraken => "kraken",
            Exchange::Binance => "binance",
        }
    }

    pub fn quote(self) -> &'static str {
        match self {
            Exchange::Kraken => "USD",
            Exchange::Binance => "BUSD",
        }
    }

    /// Requests per second allowed by default.
    pub fn default_rate(self) -> f64 {
        match self {
            Exchange::Kraken => 1.0,
            Exchange::Binance => 10.0,
        }
    }

    pub fn base_url(self) -> &'static str {
        match self {
            Exchange::Kraken => "https://api.kraken.com",
            Exchange::Binance => "https://api.binance.com",
        }
    }

    /// Builds a client talking to `base_url` through `transport`.
    pub fn connect(
        self,
        transport: Box<dyn Transport>,
        limiter: RateLimiter,
        retry: RetryPolicy,
    ) -> Box<dyn MarketSource> {
        let http = HttpClient::new(transport, limiter, retry);
        match self {
            Exchange::Kraken => Box::new(Kraken::new(http, self.base_url())),
            Exchange::Binance => Box::new(Binance::new(http, self.base_url())),
        }
    }
}

impl fmt::Display for Exchange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Exchange {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kraken" => Ok(Exchange::Kraken),
            "binance" => Ok(Exchange::Binance),
            _ => Err(IngestError::UnknownExchange(s.to_string())),
        }
    }
}

/// A source of hourly candles and public trades. Ranges are half-open
/// `[start, end)` in epoch seconds.
pub trait MarketSource: Send + Sync {
    fn name(&self) -> &str;

    fn quote(&self) -> &str;

    /// Ascending, de-duplicated hourly candles with `start <= ts < end`.
    fn fetch_candles(&self, symbol: &str, start: i64, end: i64) -> Result<Vec<Candle>>;

    /// Trades with `start <= ts_ms / 1000 < end`, ascending by `(ts_ms, trade_id)`.
    fn fetch_trades(&self, symbol: &str, start: i64, end: i64) -> Result<Vec<TradeRecord>>;
}

pub(crate) fn check_range(start: i64, end: i64) -> Result<()> {
    if start > end {
        return Err(IngestError::InvalidRange { start, end });
    }
    Ok(())
}

pub(crate) fn check_symbol(exchange: &str, symbol: &str) -> Result<()> {
    if symbol.is_empty() || !symbol.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) {
        return Err(IngestError::SymbolUnknown { exchange: exchange.into(), symbol: symbol.into() });
    }
    Ok(())
}

pub(crate) fn parse_f64(url: &str, v: &serde_json::Value) -> Result<f64> {
    let parsed = match v {
        serde_json::Value::String(s) => s.parse::<f64>().ok(),
        serde_json::Value::Number(n) => n.as_f64(),
        _ => None,
    };
    parsed.ok_or_else(|| IngestError::Parse { url: url.into(), message: format!("expected a number, got {v}") })
}

pub(crate) fn parse_json(url: &str, body: &str) -> Result<serde_json::Value> {
    serde_json::from_str(body).map_err(|e| IngestError::Parse { url: url.into(), message: e.to_string() })
}
