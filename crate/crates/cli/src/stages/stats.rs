//! `stats`: descriptive statistics, average returns over an event window
//! and rescaled prices.

use super::{Context, StageOutput};
use crate::svg::{self, Series, TimeChart, MUTED, PALETTE};
use crate::time::format_time;
use anyhow::{Context as _, Result};
use crashnet_core::format::{sig, sig_or_undefined};
use crashnet_core::panel::{average_returns, describe, describe_series, log_returns, market_return, rescale, sort_by_value, DescriptiveStats};

pub const DESCRIPTIVE_HEADER: [&str; 8] = ["asset", "mean", "median", "std", "skewness", "kurtosis", "min", "max"];

pub fn stats_row(asset: &str, d: &DescriptiveStats) -> Vec<String> {
    vec![
        asset.to_string(),
        sig(d.mean, 6),
        sig(d.median, 6),
        sig(d.std, 6),
        sig_or_undefined(d.skewness, 6),
        sig_or_undefined(d.kurtosis, 6),
        sig(d.min, 6),
        sig(d.max, 6),
    ]
}

/// Assets drawn in colour: the correlation focus, then the imbalance list.
pub fn highlighted(ctx: &Context, assets: &[String]) -> Vec<String> {
    let c = &ctx.settings.config;
    let mut out: Vec<String> = Vec::new();
    for a in c.corr.focus.iter().chain(&c.imbalance.assets) {
        if assets.contains(a) && !out.contains(a) {
            out.push(a.clone());
        }
    }
    out
}

pub fn run(ctx: &Context) -> Result<()> {
    let s = &ctx.settings;
    let panel = ctx.panel()?;
    let rp = log_returns(&panel)?;
    let m = market_return(&rp);
    let mut out = StageOutput::create(s, "stats")?;

    let mut rows = Vec::with_capacity(rp.n_assets() + 1);
    for asset in rp.assets() {
        rows.push(stats_row(asset, &describe(&rp, asset, s.kurtosis)?));
    }
    rows.push(stats_row("MARKET", &describe_series(&m.values, s.kurtosis)?));
    out.csv("descriptive.csv", &DESCRIPTIVE_HEADER, rows)?;

    let from = s.resolve_time(&s.config.stats.average_from)?;
    let to = s.resolve_time(&s.config.stats.average_to)?;
    let mut avg = average_returns(&rp, from, to)
        .with_context(|| format!("average returns from {} to {}", format_time(from), format_time(to)))?;
    sort_by_value(&mut avg, false);
    out.csv("average_returns.csv", &["asset", "average_return"], avg.iter().map(|(a, v)| vec![a.clone(), sig(*v, 6)]))?;

    out.csv(
        "market_return.csv",
        &["time", "market_return"],
        m.timestamps.iter().zip(&m.values).map(|(t, v)| vec![format_time(*t), sig(*v, 6)]),
    )?;

    let scaled = rescale(&panel);
    let focus = highlighted(ctx, panel.assets());
    let ts = panel.timestamps();
    let line = |i: usize| -> Vec<(f64, f64)> { ts.iter().zip(&scaled[i]).map(|(t, v)| (*t as f64, *v)).collect() };
    let mut series: Vec<Series> = Vec::new();
    for (i, a) in panel.assets().iter().enumerate() {
        if !focus.contains(a) {
            let mut s = Series::new(a.clone(), line(i), MUTED);
            s.width = 0.8;
            s.legend = false;
            series.push(s);
        }
    }
    for (k, a) in focus.iter().enumerate() {
        let i = panel.asset_index(a).expect("highlighted assets are in the panel");
        series.push(Series::new(a.clone(), line(i), PALETTE[k % PALETTE.len()]));
    }
    let chart = TimeChart {
        title: "Rescaled hourly closing prices".into(),
        y_label: "price / first price (log scale)".into(),
        log_y: true,
        series,
        bands: vec![],
        markers: s.events.clone(),
    };
    out.text("rescaled_prices.svg", &svg::time_chart(&chart))?;
    out.finish("stats")
}
