//! Seeded synthetic market used for demos and end-to-end tests.
//!
//! Hourly log-prices follow a one-factor model. LUNA collapses and UST
//! loses its peg part-way through; the fiat-backed stablecoins stay near
//! 1 with tiny noise. Each hour gets a tape of trades whose last price is
//! the hour's close, and candles are built from those tapes.

use crate::candles::build_candles_from_trades;
use crate::error::Result;
use crate::exchange::{check_range, MarketSource};
use crashnet_core::market::HOUR_MS;
use crashnet_core::{Candle, Side, TradeRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StudentT};
use std::collections::BTreeMap;

pub const EXCHANGE: &str = "synthetic";
pub const DEFAULT_ASSETS: [&str; 10] = ["BTC", "ETH", "LUNA", "UST", "USDT", "SOL", "DOGE", "AVAX", "LINK", "DAI"];
/// 2022-05-01T00:00:00Z.
pub const DEFAULT_START: i64 = 1_651_363_200;
pub const DEFAULT_HOURS: usize = 400;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub assets: Vec<String>,
    pub start: i64,
    pub hours: usize,
    pub seed: u64,
    pub trades_per_hour: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            assets: DEFAULT_ASSETS.iter().map(|s| s.to_string()).collect(),
            start: DEFAULT_START,
            hours: DEFAULT_HOURS,
            seed: DEFAULT_SEED,
            trades_per_hour: 12,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Profile {
    price: f64,
    beta: f64,
    idio: f64,
}

fn profile(symbol: &str) -> Profile {
    match symbol {
        "BTC" => Profile { price: 38_000.0, beta: 1.0, idio: 0.002 },
        "ETH" => Profile { price: 2_800.0, beta: 1.15, idio: 0.003 },
        "LUNA" => Profile { price: 80.0, beta: 1.3, idio: 0.008 },
        "UST" | "USDT" | "DAI" => Profile { price: 1.0, beta: 0.0, idio: 0.0002 },
        "DOGE" => Profile { price: 0.13, beta: 1.2, idio: 0.006 },
        _ => Profile { price: 20.0, beta: 1.1, idio: 0.005 },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub candles: BTreeMap<String, Vec<Candle>>,
    pub trades: BTreeMap<String, Vec<TradeRecord>>,
}

fn symbol_seed(seed: u64, symbol: &str) -> u64 {
    symbol.bytes().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Hourly closes: a common heavy-tailed factor plus idiosyncratic noise,
/// with the LUNA/UST collapse injected from 40% of the sample on.
fn closes(cfg: &SyntheticConfig) -> BTreeMap<String, Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t = StudentT::new(4.0).unwrap();
    let crash = cfg.hours * 2 / 5;
    let factor: Vec<f64> = (0..cfg.hours)
        .map(|h| {
            let vol = if h >= crash && h < crash + 96 { 0.012 } else { 0.005 };
            vol * t.sample(&mut rng) / 2f64.sqrt()
        })
        .collect();
    let mut out = BTreeMap::new();
    for symbol in &cfg.assets {
        let p = profile(symbol);
        let mut rng = ChaCha8Rng::seed_from_u64(symbol_seed(cfg.seed, symbol));
        let noise = Normal::new(0.0, p.idio).unwrap();
        let z = Normal::new(0.0, 1.0).unwrap();
        let mut log_p = p.price.ln();
        let mut path = Vec::with_capacity(cfg.hours);
        for (h, f) in factor.iter().enumerate() {
            let mut r = p.beta * f + noise.sample(&mut rng);
            match symbol.as_str() {
                "LUNA" if h >= crash => r += -0.06 + 0.015 * z.sample(&mut rng),
                "UST" if h >= crash => {
                    // slide towards a tenth of the peg
                    let target = 0.1f64.ln().max(log_p - 0.03);
                    r = target - log_p + 0.01 * z.sample(&mut rng);
                }
                "UST" | "USDT" | "DAI" => r = -0.2 * (log_p - p.price.ln()) + noise.sample(&mut rng),
                _ => {}
            }
            log_p += r;
            path.push(log_p.exp());
        }
        out.insert(symbol.clone(), path);
    }
    out
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticMarket {
    let closes = closes(cfg);
    let mut candles = BTreeMap::new();
    let mut trades = BTreeMap::new();
    for (symbol, path) in &closes {
        let mut rng = ChaCha8Rng::seed_from_u64(symbol_seed(cfg.seed.wrapping_add(1), symbol));
        let size = Exp::new(1.0).unwrap();
        let scale = 10_000.0 / profile(symbol).price;
        let mut prev = profile(symbol).price;
        let mut tape = Vec::with_capacity(cfg.hours * cfg.trades_per_hour);
        let mut id = 0u64;
        for (h, &close) in path.iter().enumerate() {
            let hour_ms = (cfg.start + h as i64 * 3600) * 1000;
            let n = cfg.trades_per_hour.max(1);
            let mut offsets: Vec<i64> = (0..n).map(|_| rng.random_range(0..HOUR_MS)).collect();
            offsets.sort_unstable();
            let down = close < prev;
            for (k, off) in offsets.iter().enumerate() {
                let frac = (k + 1) as f64 / n as f64;
                let price = if k + 1 == n {
                    close
                } else {
                    let mid = prev + (close - prev) * frac;
                    mid * (1.0 + 0.001 * (rng.random::<f64>() - 0.5))
                };
                // falling hours lean towards aggressive selling
                let p_sell = if down { 0.65 } else { 0.4 };
                let side = if rng.random::<f64>() < p_sell { Side::Sell } else { Side::Buy };
                tape.push(TradeRecord { ts_ms: hour_ms + off, price, amount: scale * (0.05 + size.sample(&mut rng)), side, trade_id: id });
                id += 1;
            }
            prev = close;
        }
        candles.insert(symbol.clone(), build_candles_from_trades(&tape));
        trades.insert(symbol.clone(), tape);
    }
    SyntheticMarket { candles, trades }
}

/// Serves a generated market through the same interface as an exchange.
pub struct SyntheticSource {
    market: SyntheticMarket,
}

impl SyntheticSource {
    pub fn new(cfg: &SyntheticConfig) -> Self {
        Self { market: generate(cfg) }
    }

    pub fn market(&self) -> &SyntheticMarket {
        &self.market
    }
}

impl MarketSource for SyntheticSource {
    fn name(&self) -> &str {
        EXCHANGE
    }

    fn quote(&self) -> &str {
        "USD"
    }

    fn fetch_candles(&self, symbol: &str, start: i64, end: i64) -> Result<Vec<Candle>> {
        check_range(start, end)?;
        let all = self.market.candles.get(symbol).ok_or_else(|| crate::error::IngestError::SymbolUnknown {
            exchange: EXCHANGE.into(),
            symbol: symbol.into(),
        })?;
        Ok(all.iter().filter(|c| c.ts >= start && c.ts < end).copied().collect())
    }

    fn fetch_trades(&self, symbol: &str, start: i64, end: i64) -> Result<Vec<TradeRecord>> {
        check_range(start, end)?;
        let all = self.market.trades.get(symbol).ok_or_else(|| crate::error::IngestError::SymbolUnknown {
            exchange: EXCHANGE.into(),
            symbol: symbol.into(),
        })?;
        Ok(all.iter().filter(|t| t.ts_ms >= start * 1000 && t.ts_ms < end * 1000).copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_complete() {
        let cfg = SyntheticConfig::default();
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        assert_eq!(a.candles.len(), 10);
        for (symbol, c) in &a.candles {
            assert_eq!(c.len(), DEFAULT_HOURS, "{symbol}");
            assert!(c.iter().all(|c| c.validate().is_ok()));
        }
        let luna = &a.candles["LUNA"];
        assert!(luna.last().unwrap().close < luna[0].close * 0.01);
        let usdt = &a.candles["USDT"];
        assert!(usdt.iter().all(|c| (c.close - 1.0).abs() < 0.01));
        let other = generate(&SyntheticConfig { seed: 7, ..cfg });
        assert_ne!(other.candles["BTC"], a.candles["BTC"]);
    }
}
