//! `imbalance`: hourly sell-minus-buy notional from stored trades.

use super::{Context, StageOutput};
use crate::svg;
use crate::time::format_time;
use anyhow::{Context as _, Result};
use crashnet_core::format::sig;
use crashnet_core::microstructure::{hourly_imbalance, imbalance_report};
use crashnet_ingest::load_trades;

pub const BAR_HEADER: [&str; 4] = ["hour", "buy_notional", "sell_notional", "imbalance"];

pub fn run(ctx: &Context) -> Result<()> {
    let s = &ctx.settings;
    let store = ctx.store();
    let mut reports = Vec::new();
    for symbol in &s.config.imbalance.assets {
        let trades = load_trades(&store, ctx.exchange(), symbol, s.start, s.end).with_context(|| format!("trades for {symbol}"))?;
        if trades.is_empty() {
            log::warn!("{symbol}: no trades in range");
        }
        let bars = hourly_imbalance(&trades)?;
        reports.push((symbol, imbalance_report(&bars, &s.events)));
    }
    let mut out = StageOutput::create(s, "imbalance")?;
    for (symbol, report) in reports {
        out.csv(
            &format!("{symbol}.csv"),
            &BAR_HEADER,
            report
                .bars
                .iter()
                .map(|b| vec![format_time(b.hour), sig(b.buy_notional, 6), sig(b.sell_notional, 6), sig(b.imbalance, 6)]),
        )?;

        let mut rows = Vec::new();
        for (kind, list) in [("selling", &report.top_selling), ("buying", &report.top_buying)] {
            for (k, b) in list.iter().enumerate() {
                rows.push(vec![kind.to_string(), (k + 1).to_string(), format_time(b.hour), sig(b.imbalance, 6)]);
            }
        }
        for e in &report.events {
            let value = e.bar.map(|i| sig(report.bars[i].imbalance, 6)).unwrap_or_default();
            rows.push(vec!["event".into(), e.marker.label.clone(), format_time(e.marker.ts), value]);
        }
        out.csv(&format!("{symbol}_peaks.csv"), &["kind", "rank", "hour", "imbalance"], rows)?;

        let bars: Vec<(i64, f64)> = report.bars.iter().map(|b| (b.hour, b.imbalance)).collect();
        let title = format!("Hourly imbalance for {symbol} ({})", ctx.exchange());
        out.text(&format!("{symbol}.svg"), &svg::imbalance_chart(&title, &bars, &s.events))?;
    }
    out.finish("imbalance")
}
