//! Candle and trade CSV archives.
//!
//! Candles: `ts,open,high,low,close,volume`. Trades:
//! `ts_ms,price,amount,side,trade_id`. Floats are written in their shortest
//! round-trip form so export followed by import is lossless.

use crate::error::{IngestError, Result};
use crashnet_core::{Candle, TradeRecord};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::io::{Read, Write};
use std::path::Path;

pub const CANDLE_HEADER: [&str; 6] = ["ts", "open", "high", "low", "close", "volume"];
pub const TRADE_HEADER: [&str; 5] = ["ts_ms", "price", "amount", "side", "trade_id"];

fn write_rows<W: Write, T: Serialize>(w: W, header: &[&str], rows: &[T]) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: DeserializeOwned>(r: R, header: &[&str]) -> std::result::Result<Vec<T>, String> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let got = rdr.headers().map_err(|e| e.to_string())?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(format!("expected header `{}`, found `{}`", header.join(","), got.iter().collect::<Vec<_>>().join(",")));
    }
    rdr.deserialize().map(|r| r.map_err(|e| e.to_string())).collect()
}

pub fn write_candles<W: Write>(w: W, candles: &[Candle]) -> csv::Result<()> {
    write_rows(w, &CANDLE_HEADER, candles)
}

pub fn write_trades<W: Write>(w: W, trades: &[TradeRecord]) -> csv::Result<()> {
    write_rows(w, &TRADE_HEADER, trades)
}

pub fn read_candles<R: Read>(r: R) -> std::result::Result<Vec<Candle>, String> {
    let rows: Vec<Candle> = read_rows(r, &CANDLE_HEADER)?;
    for c in &rows {
        c.validate()?;
    }
    Ok(rows)
}

pub fn read_trades<R: Read>(r: R) -> std::result::Result<Vec<TradeRecord>, String> {
    let rows: Vec<TradeRecord> = read_rows(r, &TRADE_HEADER)?;
    for t in &rows {
        t.validate()?;
    }
    Ok(rows)
}

fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| IngestError::io(dir, e))?;
    }
    std::fs::File::create(path).map_err(|e| IngestError::io(path, e))
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| IngestError::io(path, e))
}

pub fn save_candles(path: &Path, candles: &[Candle]) -> Result<()> {
    write_candles(create(path)?, candles).map_err(|e| IngestError::csv(path, e))
}

pub fn save_trades(path: &Path, trades: &[TradeRecord]) -> Result<()> {
    write_trades(create(path)?, trades).map_err(|e| IngestError::csv(path, e))
}

pub fn load_candles(path: &Path) -> Result<Vec<Candle>> {
    read_candles(open(path)?).map_err(|message| IngestError::Format { path: path.into(), message })
}

pub fn load_trades(path: &Path) -> Result<Vec<TradeRecord>> {
    read_trades(open(path)?).map_err(|message| IngestError::Format { path: path.into(), message })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crashnet_core::Side;
    use proptest::prelude::*;

    #[test]
    fn header_checked() {
        let err = read_candles("time,open,high,low,close,volume\n".as_bytes()).unwrap_err();
        assert!(err.contains("expected header"));
        assert!(read_trades("ts_ms,price,amount,side,trade_id\n1,1,1,hold,1\n".as_bytes()).is_err());
    }

    #[test]
    fn layout() {
        let mut buf = Vec::new();
        write_trades(&mut buf, &[TradeRecord { ts_ms: 5, price: 0.1, amount: 2.0, side: Side::Sell, trade_id: 9 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "ts_ms,price,amount,side,trade_id\n5,0.1,2.0,sell,9\n");
    }

    proptest! {
        #[test]
        fn trades_round_trip(rows in prop::collection::vec((any::<i64>(), 1e-12f64..1e12, 1e-12f64..1e9, any::<bool>(), any::<u64>()), 0..50)) {
            let trades: Vec<TradeRecord> = rows.iter().map(|&(ts_ms, price, amount, b, trade_id)| TradeRecord {
                ts_ms, price, amount, side: if b { Side::Buy } else { Side::Sell }, trade_id,
            }).collect();
            let mut buf = Vec::new();
            write_trades(&mut buf, &trades).unwrap();
            prop_assert_eq!(read_trades(buf.as_slice()).unwrap(), trades);
        }

        #[test]
        fn candles_round_trip(rows in prop::collection::vec((-1000i64..1000, 1e-9f64..1e9, 1.0f64..2.0, 0.0f64..1e9), 0..50)) {
            let candles: Vec<Candle> = rows.iter().map(|&(h, p, k, v)| Candle {
                ts: h * 3600, open: p, high: p * k, low: p / k, close: p, volume: v,
            }).collect();
            let mut buf = Vec::new();
            write_candles(&mut buf, &candles).unwrap();
            prop_assert_eq!(read_candles(buf.as_slice()).unwrap(), candles);
        }
    }
}
