use crashnet_core::{Candle, TradeRecord};

/// One candle per UTC hour containing at least one trade. Input must be in
/// time order; hours without trades are skipped.
pub fn build_candles_from_trades(trades: &[TradeRecord]) -> Vec<Candle> {
    let mut out: Vec<Candle> = Vec::new();
    for t in trades {
        let hour = t.hour();
        match out.last_mut() {
            Some(c) if c.ts == hour => {
                c.high = c.high.max(t.price);
                c.low = c.low.min(t.price);
                c.close = t.price;
                c.volume += t.amount;
            }
            _ => out.push(Candle { ts: hour, open: t.price, high: t.price, low: t.price, close: t.price, volume: t.amount }),
        }
    }
    out
}

/// Sorts by `ts`, keeping the last candle seen for each hour.
pub fn normalize_candles(mut candles: Vec<Candle>) -> Vec<Candle> {
    candles.reverse();
    candles.sort_by_key(|c| c.ts);
    candles.dedup_by_key(|c| c.ts);
    candles
}

/// Sorts by `(ts_ms, trade_id)` and drops exact key duplicates.
pub fn normalize_trades(mut trades: Vec<TradeRecord>) -> Vec<TradeRecord> {
    trades.sort_by_key(|t| t.key());
    trades.dedup_by_key(|t| t.key());
    trades
}

#[cfg(test)]
mod tests {
    use super::*;
    use crashnet_core::Side;
    use proptest::prelude::*;

    fn trade(ts_ms: i64, price: f64, amount: f64) -> TradeRecord {
        TradeRecord { ts_ms, price, amount, side: Side::Buy, trade_id: ts_ms as u64 }
    }

    #[test]
    fn single_trade() {
        let c = build_candles_from_trades(&[trade(5_000, 100.0, 2.0)]);
        assert_eq!(c, vec![Candle { ts: 0, open: 100.0, high: 100.0, low: 100.0, close: 100.0, volume: 2.0 }]);
    }

    #[test]
    fn ohlc_definition() {
        let tape: Vec<_> = [100.0, 110.0, 90.0, 105.0].iter().enumerate().map(|(i, p)| trade(i as i64, *p, 1.0)).collect();
        let c = build_candles_from_trades(&tape)[0];
        assert_eq!((c.open, c.high, c.low, c.close, c.volume), (100.0, 110.0, 90.0, 105.0, 4.0));
    }

    #[test]
    fn empty_hours_skipped() {
        let c = build_candles_from_trades(&[trade(0, 1.0, 1.0), trade(3 * 3_600_000, 2.0, 1.0)]);
        assert_eq!(c.iter().map(|c| c.ts).collect::<Vec<_>>(), vec![0, 10_800]);
        assert!(build_candles_from_trades(&[]).is_empty());
    }

    #[test]
    fn normalize_keeps_latest_candle() {
        let a = Candle { ts: 0, open: 1.0, high: 1.0, low: 1.0, close: 1.0, volume: 1.0 };
        let b = Candle { close: 1.0, volume: 2.0, ..a };
        let out = normalize_candles(vec![a, Candle { ts: 3600, ..a }, b]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].volume, 2.0);
    }

    proptest! {
        #[test]
        fn volume_conserved(mut raw in prop::collection::vec((0i64..50_000_000, 0.1f64..100.0, 0.001f64..5.0), 0..300)) {
            raw.sort_by_key(|r| r.0);
            let tape: Vec<TradeRecord> = raw.iter().map(|&(t, p, a)| trade(t, p, a)).collect();
            let candles = build_candles_from_trades(&tape);
            let total: f64 = tape.iter().map(|t| t.amount).sum();
            let got: f64 = candles.iter().map(|c| c.volume).sum();
            prop_assert!((got - total).abs() <= 1e-9 * total.max(1.0));
            for c in &candles {
                prop_assert!(c.validate().is_ok());
            }
            let hours: std::collections::BTreeSet<i64> = tape.iter().map(|t| t.hour()).collect();
            prop_assert_eq!(candles.len(), hours.len());
        }
    }
}
