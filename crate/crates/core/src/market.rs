//! Market data records shared by ingestion and analytics.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const HOUR_SECS: i64 = 3_600;
pub const HOUR_MS: i64 = 3_600_000;

/// Aggressor (taker) side of a public trade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn flipped(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "buy" => Ok(Side::Buy),
            "sell" => Ok(Side::Sell),
            other => Err(format!("invalid trade side `{other}` (expected buy or sell)")),
        }
    }
}

/// One public trade. `trade_id` is exchange-assigned where available,
/// otherwise a synthetic ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub ts_ms: i64,
    pub price: f64,
    pub amount: f64,
    pub side: Side,
    pub trade_id: u64,
}

impl TradeRecord {
    pub fn notional(&self) -> f64 {
        self.price * self.amount
    }

    /// UTC hour (epoch seconds, hour-aligned) this trade falls in.
    /// A trade exactly on the boundary belongs to the later hour.
    pub fn hour(&self) -> i64 {
        self.ts_ms.div_euclid(HOUR_MS) * HOUR_SECS
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.price.is_finite() && self.price > 0.0) {
            return Err(format!("trade {}: price must be > 0, got {}", self.trade_id, self.price));
        }
        if !(self.amount.is_finite() && self.amount > 0.0) {
            return Err(format!("trade {}: amount must be > 0, got {}", self.trade_id, self.amount));
        }
        Ok(())
    }

    /// Ordering key used for tape de-duplication.
    pub fn key(&self) -> (i64, u64) {
        (self.ts_ms, self.trade_id)
    }
}

/// Hourly OHLCV bar; `ts` is the hour's opening epoch second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub ts: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Candle {
    pub fn validate(&self) -> Result<(), String> {
        if self.ts.rem_euclid(HOUR_SECS) != 0 {
            return Err(format!("candle ts {} is not hour-aligned", self.ts));
        }
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(format!("candle {}: prices must be positive", self.ts));
        }
        if self.low > self.open.min(self.close) || self.high < self.open.max(self.close) {
            return Err(format!("candle {}: high/low do not bracket open/close", self.ts));
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return Err(format!("candle {}: negative volume", self.ts));
        }
        Ok(())
    }
}

/// A labelled point in time drawn on plots and attached to reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMarker {
    pub label: String,
    pub ts: i64,
}

impl EventMarker {
    pub fn new(label: impl Into<String>, ts: i64) -> Self {
        Self { label: label.into(), ts }
    }
}

pub fn floor_hour(ts: i64) -> i64 {
    ts.div_euclid(HOUR_SECS) * HOUR_SECS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hour_boundary_belongs_to_later_hour() {
        let t = TradeRecord { ts_ms: 7_200_000, price: 1.0, amount: 1.0, side: Side::Buy, trade_id: 0 };
        assert_eq!(t.hour(), 7_200);
        let t = TradeRecord { ts_ms: 7_199_999, ..t };
        assert_eq!(t.hour(), 3_600);
    }

    #[test]
    fn candle_validation() {
        let c = Candle { ts: 3600, open: 10.0, high: 12.0, low: 9.0, close: 11.0, volume: 1.0 };
        assert!(c.validate().is_ok());
        assert!(Candle { low: 10.5, ..c }.validate().is_err());
        assert!(Candle { ts: 3601, ..c }.validate().is_err());
        assert!(Candle { volume: -1.0, ..c }.validate().is_err());
    }

    #[test]
    fn side_parse() {
        assert_eq!("sell".parse::<Side>().unwrap(), Side::Sell);
        assert!("SELL".parse::<Side>().is_err());
        assert_eq!(Side::Buy.flipped(), Side::Sell);
    }
}
