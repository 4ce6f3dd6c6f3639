//! Kraken public REST endpoints: `/0/public/Trades` paged by a nanosecond
//! `since` cursor, and `/0/public/OHLC`, which only serves the most recent
//! 720 bars. Older candles are rebuilt from the trade history.

use crate::candles::{build_candles_from_trades, normalize_candles, normalize_trades};
use crate::error::{IngestError, Result};
use crate::exchange::{check_range, check_symbol, parse_f64, parse_json, MarketSource};
use crate::http::{HttpClient, HttpResponse};
use crashnet_core::market::HOUR_SECS;
use crashnet_core::{Candle, Side, TradeRecord};
use serde_json::Value;

pub struct Kraken {
    http: HttpClient,
    base: String,
}

/// Kraken's pair name for a ticker quoted in USD.
pub fn pair(symbol: &str) -> String {
    match symbol {
        "BTC" => "XBTUSD".to_string(),
        "DOGE" => "XDGUSD".to_string(),
        s => format!("{s}USD"),
    }
}

fn errors(body: &Value) -> Vec<String> {
    body.get("error")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(|e| e.as_str().map(str::to_string)).collect())
        .unwrap_or_default()
}

fn classify(url: &str, resp: &HttpResponse) -> Result<()> {
    if let Ok(v) = serde_json::from_str::<Value>(&resp.body) {
        if errors(&v).iter().any(|e| e.contains("Rate limit") || e.contains("Too many requests")) {
            return Err(IngestError::Network { url: url.into(), message: "rate limited".into() });
        }
    }
    Ok(())
}

impl Kraken {
    pub fn new(http: HttpClient, base: &str) -> Self {
        Self { http, base: base.trim_end_matches('/').to_string() }
    }

    /// Fetches a URL and returns the `result` object, mapping Kraken's error
    /// strings onto typed errors.
    fn call(&self, url: &str, symbol: &str) -> Result<Value> {
        let resp = self.http.get_with(url, |r| classify(url, r))?;
        let body = parse_json(url, &resp.body);
        if let Ok(v) = &body {
            let errs = errors(v);
            if errs.iter().any(|e| e.contains("Unknown asset pair")) {
                return Err(IngestError::SymbolUnknown { exchange: "kraken".into(), symbol: symbol.into() });
            }
            if !errs.is_empty() {
                return Err(IngestError::Http { url: url.into(), status: resp.status, body: errs.join("; ") });
            }
        }
        if resp.status != 200 {
            return Err(IngestError::Http { url: url.into(), status: resp.status, body: resp.body });
        }
        body?
            .get("result")
            .cloned()
            .ok_or_else(|| IngestError::Parse { url: url.into(), message: "missing `result`".into() })
    }

    /// `ordinal` numbers trades for responses that omit Kraken's trade id.
    fn trades_page(&self, symbol: &str, since: &str, ordinal: &mut u64) -> Result<(Vec<TradeRecord>, Option<String>)> {
        let url = format!("{}/0/public/Trades?pair={}&since={}", self.base, pair(symbol), since);
        let result = self.call(&url, symbol)?;
        let rows = series(&url, &result)?;
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            out.push(parse_trade(&url, row, *ordinal)?);
            *ordinal += 1;
        }
        let last = result.get("last").and_then(|v| match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        });
        Ok((out, last))
    }
}

/// The result's data array lives under the pair key, next to `last`.
fn series<'a>(url: &str, result: &'a Value) -> Result<&'a Vec<Value>> {
    result
        .as_object()
        .and_then(|o| o.iter().find(|(k, _)| k.as_str() != "last"))
        .and_then(|(_, v)| v.as_array())
        .ok_or_else(|| IngestError::Parse { url: url.into(), message: "missing data array".into() })
}

fn parse_trade(url: &str, row: &Value, ordinal: u64) -> Result<TradeRecord> {
    let bad = |m: &str| IngestError::Parse { url: url.into(), message: format!("{m}: {row}") };
    let a = row.as_array().ok_or_else(|| bad("trade is not an array"))?;
    if a.len() < 4 {
        return Err(bad("short trade row"));
    }
    let price = parse_f64(url, &a[0])?;
    let amount = parse_f64(url, &a[1])?;
    let time = parse_f64(url, &a[2])?;
    // times carry four decimals; round there before truncating to ms
    let ts_ms = (time * 10_000.0).round() as i64 / 10;
    let side = match a[3].as_str() {
        Some("b") => Side::Buy,
        Some("s") => Side::Sell,
        _ => return Err(bad("side must be `b` or `s`")),
    };
    let trade_id = a.get(6).and_then(Value::as_u64).unwrap_or(ordinal);
    Ok(TradeRecord { ts_ms, price, amount, side, trade_id })
}

fn parse_ohlc(url: &str, row: &Value) -> Result<Candle> {
    let bad = || IngestError::Parse { url: url.into(), message: format!("bad OHLC row: {row}") };
    let a = row.as_array().filter(|a| a.len() >= 7).ok_or_else(bad)?;
    Ok(Candle {
        ts: a[0].as_i64().ok_or_else(bad)?,
        open: parse_f64(url, &a[1])?,
        high: parse_f64(url, &a[2])?,
        low: parse_f64(url, &a[3])?,
        close: parse_f64(url, &a[4])?,
        volume: parse_f64(url, &a[6])?,
    })
}

impl MarketSource for Kraken {
    fn name(&self) -> &str {
        "kraken"
    }

    fn quote(&self) -> &str {
        "USD"
    }

    fn fetch_candles(&self, symbol: &str, start: i64, end: i64) -> Result<Vec<Candle>> {
        check_range(start, end)?;
        check_symbol("kraken", symbol)?;
        if start == end {
            return Ok(Vec::new());
        }
        let url = format!("{}/0/public/OHLC?pair={}&interval=60&since={}", self.base, pair(symbol), start - HOUR_SECS);
        let result = self.call(&url, symbol)?;
        let mut candles = Vec::new();
        for row in series(&url, &result)? {
            candles.push(parse_ohlc(&url, row)?);
        }
        let candles = normalize_candles(candles);
        if candles.first().is_some_and(|c| c.ts <= start) {
            return Ok(candles.into_iter().filter(|c| c.ts >= start && c.ts < end).collect());
        }
        log::info!("kraken {symbol}: OHLC history starts after {start}, rebuilding candles from trades");
        let trades = self.fetch_trades(symbol, start, end)?;
        if trades.is_empty() {
            return Err(IngestError::HistoryUnavailable { exchange: "kraken".into(), symbol: symbol.into(), start, end });
        }
        Ok(build_candles_from_trades(&trades))
    }

    fn fetch_trades(&self, symbol: &str, start: i64, end: i64) -> Result<Vec<TradeRecord>> {
        check_range(start, end)?;
        check_symbol("kraken", symbol)?;
        if start == end {
            return Ok(Vec::new());
        }
        let (start_ms, end_ms) = (start * 1000, end * 1000);
        let mut since = (start as i128 * 1_000_000_000).to_string();
        let mut out = Vec::new();
        let mut ordinal = 0;
        loop {
            let (page, last) = self.trades_page(symbol, &since, &mut ordinal)?;
            let reached_end = page.iter().any(|t| t.ts_ms >= end_ms);
            out.extend(page.iter().filter(|t| t.ts_ms >= start_ms && t.ts_ms < end_ms));
            match last {
                Some(next) if !page.is_empty() && !reached_end && next != since => since = next,
                _ => break,
            }
        }
        Ok(normalize_trades(out))
    }
}
