use crashnet_core::Side;
use crashnet_ingest::http::{FixtureTransport, RateLimiter, RetryPolicy};
use crashnet_ingest::{build_candles_from_trades, Exchange, IngestError, MarketSource};
use std::path::Path;

const MAY_1: i64 = 1_651_363_200;
const MAY_9: i64 = 1_652_054_400;

fn client(exchange: Exchange, fixture: &str) -> Box<dyn MarketSource> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(fixture);
    let transport = FixtureTransport::from_file(&path).unwrap();
    exchange.connect(Box::new(transport), RateLimiter::unlimited(), RetryPolicy::no_delay(5))
}

#[test]
fn binance_three_hours() {
    let c = client(Exchange::Binance, "binance.json").fetch_candles("BTC", MAY_1, MAY_1 + 3 * 3600).unwrap();
    assert_eq!(c.len(), 3);
    assert!(c.windows(2).all(|w| w[0].ts < w[1].ts));
    assert_eq!(c[0].ts, MAY_1);
    assert!(c.iter().all(|c| c.validate().is_ok()));
}

#[test]
fn binance_full_sample() {
    let c = client(Exchange::Binance, "binance.json").fetch_candles("BTC", MAY_1, MAY_1 + 16 * 86_400).unwrap();
    assert_eq!(c.len(), 384);
    assert_eq!(c.last().unwrap().ts, MAY_1 + 383 * 3600);
}

#[test]
fn empty_ranges() {
    let k = client(Exchange::Kraken, "kraken.json");
    assert!(k.fetch_candles("BTC", MAY_9, MAY_9).unwrap().is_empty());
    assert!(k.fetch_trades("LUNA", MAY_9, MAY_9).unwrap().is_empty());
    let b = client(Exchange::Binance, "binance.json");
    assert!(b.fetch_trades("BTC", MAY_1, MAY_1).unwrap().is_empty());
    assert!(matches!(k.fetch_trades("BTC", 10, 5), Err(IngestError::InvalidRange { .. })));
}

#[test]
fn binance_unknown_symbol() {
    let err = client(Exchange::Binance, "binance.json").fetch_candles("FOO", MAY_1, MAY_1 + 3 * 3600).unwrap_err();
    assert!(matches!(err, IngestError::SymbolUnknown { ref symbol, .. } if symbol == "FOO"));
}

#[test]
fn binance_taker_side() {
    let h = 1_651_752_000;
    let t = client(Exchange::Binance, "binance.json").fetch_trades("BTC", h, h + 3600).unwrap();
    assert_eq!(t.len(), 6);
    // the first two records are buyer-is-maker true, then false
    let by_id = |id: u64| t.iter().find(|r| r.trade_id == id).unwrap().side;
    assert_eq!(by_id(812_345_670), Side::Sell);
    assert_eq!(by_id(812_345_671), Side::Buy);
}

#[test]
fn binance_paginates_full_pages() {
    let h = 1_651_755_600;
    let t = client(Exchange::Binance, "binance.json").fetch_trades("BTC", h, h + 3600).unwrap();
    // 1 250 in the hour; the continuation page also returns two later trades
    assert_eq!(t.len(), 1250);
    assert!(t.windows(2).all(|w| w[0].key() < w[1].key()));
    assert!(t.iter().all(|r| r.ts_ms >= h * 1000 && r.ts_ms < (h + 3600) * 1000));
}

#[test]
fn kraken_trades_follow_cursor() {
    let t = client(Exchange::Kraken, "kraken.json").fetch_trades("LUNA", MAY_9, MAY_9 + 7200).unwrap();
    assert!(!t.is_empty());
    assert!(t.windows(2).all(|w| w[0].ts_ms <= w[1].ts_ms && w[0].key() < w[1].key()));
    assert!(t.iter().all(|r| r.ts_ms >= MAY_9 * 1000 && r.ts_ms < (MAY_9 + 7200) * 1000));
    // trades from both pages are present
    assert!(t.iter().any(|r| r.trade_id < 4_100_060));
    assert!(t.iter().any(|r| r.trade_id >= 4_100_060));
}

#[test]
fn kraken_rebuilds_old_candles_from_trades() {
    let k = client(Exchange::Kraken, "kraken.json");
    let candles = k.fetch_candles("LUNA", MAY_9, MAY_9 + 7200).unwrap();
    let trades = k.fetch_trades("LUNA", MAY_9, MAY_9 + 7200).unwrap();
    assert_eq!(candles, build_candles_from_trades(&trades));
    assert_eq!(candles.len(), 2);
}

#[test]
fn kraken_retries_rate_limit() {
    let c = client(Exchange::Kraken, "kraken.json").fetch_candles("BTC", MAY_9, MAY_9 + 3 * 3600).unwrap();
    assert_eq!(c.iter().map(|c| c.ts).collect::<Vec<_>>(), vec![MAY_9, MAY_9 + 3600, MAY_9 + 7200]);
}

#[test]
fn kraken_errors() {
    let k = client(Exchange::Kraken, "kraken.json");
    assert!(matches!(k.fetch_trades("FOO", MAY_9, MAY_9 + 60), Err(IngestError::SymbolUnknown { .. })));
    assert!(matches!(k.fetch_candles("FOO", MAY_9, MAY_9 + 3600), Err(IngestError::SymbolUnknown { .. })));
    assert!(matches!(k.fetch_candles("ADA", MAY_9, MAY_9 + 3600), Err(IngestError::HistoryUnavailable { .. })));
    assert!(matches!(k.fetch_candles("luna", MAY_9, MAY_9 + 3600), Err(IngestError::SymbolUnknown { .. })));
}

#[test]
fn unrecorded_request_is_a_network_error() {
    let err = client(Exchange::Binance, "binance.json").fetch_candles("ETH", MAY_1, MAY_1 + 3600).unwrap_err();
    assert!(err.is_retryable());
}
