//! Binance public REST endpoints: `/api/v3/klines` paged by `startTime`,
//! and `/api/v3/aggTrades` queried one hour at a time (the endpoint rejects
//! wider time windows) and continued by `fromId` when a page is full.

use crate::candles::{normalize_candles, normalize_trades};
use crate::error::{IngestError, Result};
use crate::exchange::{check_range, check_symbol, parse_f64, parse_json, MarketSource};
use crate::http::{HttpClient, HttpResponse};
use crashnet_core::market::HOUR_MS;
use crashnet_core::{Candle, Side, TradeRecord};
use serde_json::Value;

pub const PAGE_LIMIT: usize = 1000;

pub struct Binance {
    http: HttpClient,
    base: String,
}

/// Binance's pair name; quotes are in BUSD.
pub fn pair(symbol: &str) -> String {
    format!("{symbol}BUSD")
}

impl Binance {
    pub fn new(http: HttpClient, base: &str) -> Self {
        Self { http, base: base.trim_end_matches('/').to_string() }
    }

    fn call(&self, url: &str, symbol: &str) -> Result<Vec<Value>> {
        let resp: HttpResponse = self.http.get_with(url, |_| Ok(()))?;
        let body = parse_json(url, &resp.body);
        if resp.status != 200 {
            let code = body.as_ref().ok().and_then(|v| v.get("code")).and_then(Value::as_i64);
            if resp.status == 400 && code == Some(-1121) {
                return Err(IngestError::SymbolUnknown { exchange: "binance".into(), symbol: symbol.into() });
            }
            return Err(IngestError::Http { url: url.into(), status: resp.status, body: resp.body });
        }
        match body? {
            Value::Array(a) => Ok(a),
            other => Err(IngestError::Parse { url: url.into(), message: format!("expected an array, got {other}") }),
        }
    }
}

fn parse_kline(url: &str, row: &Value) -> Result<Candle> {
    let bad = || IngestError::Parse { url: url.into(), message: format!("bad kline: {row}") };
    let a = row.as_array().filter(|a| a.len() >= 6).ok_or_else(bad)?;
    Ok(Candle {
        ts: a[0].as_i64().ok_or_else(bad)? / 1000,
        open: parse_f64(url, &a[1])?,
        high: parse_f64(url, &a[2])?,
        low: parse_f64(url, &a[3])?,
        close: parse_f64(url, &a[4])?,
        volume: parse_f64(url, &a[5])?,
    })
}

fn parse_agg_trade(url: &str, row: &Value) -> Result<TradeRecord> {
    let bad = |f: &str| IngestError::Parse { url: url.into(), message: format!("aggTrade missing `{f}`: {row}") };
    let field = |f: &str| row.get(f).ok_or_else(|| bad(f));
    let buyer_is_maker = field("m")?.as_bool().ok_or_else(|| bad("m"))?;
    Ok(TradeRecord {
        ts_ms: field("T")?.as_i64().ok_or_else(|| bad("T"))?,
        price: parse_f64(url, field("p")?)?,
        amount: parse_f64(url, field("q")?)?,
        // the maker was the buyer, so the aggressor sold
        side: if buyer_is_maker { Side::Sell } else { Side::Buy },
        trade_id: field("a")?.as_u64().ok_or_else(|| bad("a"))?,
    })
}

impl MarketSource for Binance {
    fn name(&self) -> &str {
        "binance"
    }

    fn quote(&self) -> &str {
        "BUSD"
    }

    fn fetch_candles(&self, symbol: &str, start: i64, end: i64) -> Result<Vec<Candle>> {
        check_range(start, end)?;
        check_symbol("binance", symbol)?;
        if start == end {
            return Ok(Vec::new());
        }
        let (mut from, end_ms) = (start * 1000, end * 1000);
        let mut out = Vec::new();
        while from < end_ms {
            let url = format!(
                "{}/api/v3/klines?symbol={}&interval=1h&startTime={}&endTime={}&limit={}",
                self.base,
                pair(symbol),
                from,
                end_ms - 1,
                PAGE_LIMIT
            );
            let rows = self.call(&url, symbol)?;
            for row in &rows {
                out.push(parse_kline(&url, row)?);
            }
            match out.last() {
                Some(c) if rows.len() == PAGE_LIMIT => from = c.ts * 1000 + HOUR_MS,
                _ => break,
            }
        }
        let out: Vec<Candle> = normalize_candles(out).into_iter().filter(|c| c.ts >= start && c.ts < end).collect();
        if out.is_empty() {
            return Err(IngestError::HistoryUnavailable { exchange: "binance".into(), symbol: symbol.into(), start, end });
        }
        Ok(out)
    }

    fn fetch_trades(&self, symbol: &str, start: i64, end: i64) -> Result<Vec<TradeRecord>> {
        check_range(start, end)?;
        check_symbol("binance", symbol)?;
        let (start_ms, end_ms) = (start * 1000, end * 1000);
        let mut out = Vec::new();
        let mut window = start_ms;
        while window < end_ms {
            let last_ms = (window.div_euclid(HOUR_MS) * HOUR_MS + HOUR_MS).min(end_ms) - 1;
            let mut url = format!(
                "{}/api/v3/aggTrades?symbol={}&startTime={}&endTime={}&limit={}",
                self.base,
                pair(symbol),
                window,
                last_ms,
                PAGE_LIMIT
            );
            loop {
                let rows = self.call(&url, symbol)?;
                let mut page = Vec::with_capacity(rows.len());
                for row in &rows {
                    page.push(parse_agg_trade(&url, row)?);
                }
                let past_end = page.iter().any(|t| t.ts_ms > last_ms);
                out.extend(page.iter().filter(|t| t.ts_ms >= window && t.ts_ms <= last_ms));
                match page.last() {
                    Some(t) if rows.len() == PAGE_LIMIT && !past_end => {
                        url = format!(
                            "{}/api/v3/aggTrades?symbol={}&fromId={}&limit={}",
                            self.base,
                            pair(symbol),
                            t.trade_id + 1,
                            PAGE_LIMIT
                        );
                    }
                    _ => break,
                }
            }
            window = last_ms + 1;
        }
        Ok(normalize_trades(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn maker_flag_maps_to_taker_side() {
        let row = json!({"a": 7, "p": "1.5", "q": "2", "f": 1, "l": 1, "T": 1000, "m": true, "M": true});
        assert_eq!(parse_agg_trade("u", &row).unwrap().side, Side::Sell);
        let row = json!({"a": 8, "p": "1.5", "q": "2", "f": 1, "l": 1, "T": 1000, "m": false, "M": true});
        assert_eq!(parse_agg_trade("u", &row).unwrap().side, Side::Buy);
    }

    #[test]
    fn kline_row() {
        let row = json!([1651363200000i64, "1", "2", "0.5", "1.5", "10", 1651366799999i64, "15", 3, "5", "7", "0"]);
        let c = parse_kline("u", &row).unwrap();
        assert_eq!((c.ts, c.open, c.high, c.low, c.close, c.volume), (1_651_363_200, 1.0, 2.0, 0.5, 1.5, 10.0));
    }
}
