//! `fetch`: fill the local store from an exchange, a CSV directory or the
//! synthetic generator.

use super::Context;
use crate::error::UsageError;
use anyhow::{Context as _, Result};
use crashnet_ingest::http::{RateLimiter, ReqwestTransport, RetryPolicy};
use crashnet_ingest::store::import_dir;
use crashnet_ingest::synthetic::{SyntheticConfig, SyntheticSource};
use crashnet_ingest::{DataKind, Exchange, MarketSource};
use std::path::PathBuf;

#[derive(Debug, Clone, Default)]
pub struct FetchArgs {
    /// Overrides `data.exchange`.
    pub source: Option<String>,
    /// Directory for the `csv` source.
    pub import: Option<PathBuf>,
    pub no_trades: bool,
}

fn connect(ctx: &Context, source: &str) -> Result<Box<dyn MarketSource>> {
    let s = &ctx.settings;
    if source == crashnet_ingest::synthetic::EXCHANGE {
        let cfg = SyntheticConfig {
            assets: ctx.symbols(),
            start: s.start,
            hours: ((s.end - s.start) / 3600) as usize,
            seed: s.config.data.synthetic_seed,
            ..Default::default()
        };
        return Ok(Box::new(SyntheticSource::new(&cfg)));
    }
    let exchange: Exchange = source.parse()?;
    let rate = s.config.data.rate.unwrap_or(exchange.default_rate());
    if rate.is_nan() || rate <= 0.0 {
        return Err(UsageError::new("data.rate must be positive").into());
    }
    let transport = ReqwestTransport::new()?;
    Ok(exchange.connect(Box::new(transport), RateLimiter::new(rate, 1), RetryPolicy::default()))
}

pub fn run(ctx: &Context, args: &FetchArgs) -> Result<()> {
    let s = &ctx.settings;
    let source = args.source.clone().unwrap_or_else(|| s.config.data.exchange.clone());
    let store = ctx.store();
    std::fs::create_dir_all(store.root()).with_context(|| format!("creating {}", store.root().display()))?;
    let mut writer = store.writer()?;

    if source == "csv" {
        let dir = args.import.as_ref().ok_or_else(|| UsageError::new("`--source csv` needs `--import <DIR>`"))?;
        let symbols = import_dir(&mut writer, dir, "csv", "USD")?;
        println!("imported {} symbols from {}", symbols.len(), dir.display());
    } else {
        if args.import.is_some() {
            return Err(UsageError::new("`--import` only applies to `--source csv`").into());
        }
        let src = connect(ctx, &source)?;
        let trades = s.config.data.trades && !args.no_trades;
        let (mut fetched, mut skipped, mut rows) = (0, 0, 0);
        for symbol in ctx.symbols() {
            let mut kinds = vec![DataKind::Candles];
            if trades {
                kinds.push(DataKind::Trades);
            }
            for kind in kinds {
                let r = writer.sync(src.as_ref(), &symbol, kind, s.start, s.end)?;
                fetched += r.fetched_days;
                skipped += r.skipped_days;
                rows += r.rows;
            }
        }
        println!("{source}: fetched {fetched} symbol-days ({rows} rows), {skipped} already stored");
    }

    let manifest = writer.manifest().clone();
    drop(writer);
    let exchange = if source == "csv" { "csv" } else { source.as_str() };
    for kind in [DataKind::Candles, DataKind::Trades] {
        let symbols = manifest.symbols(exchange, kind);
        let total: usize = manifest
            .entries()
            .iter()
            .filter(|e| e.exchange == exchange && e.kind == kind)
            .map(|e| e.row_count)
            .sum();
        println!("{exchange} {}: {} symbols, {total} rows", kind.as_str(), symbols.len());
    }
    Ok(())
}
