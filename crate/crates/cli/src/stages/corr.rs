//! `corr`: rolling weighted correlations and their averages.

use super::{Context, StageOutput};
use crate::svg::{self, Series, TimeChart, PALETTE};
use crate::time::format_time;
use anyhow::Result;
use crashnet_core::corrnet::{average_corr, ema, make_weights, rolling_corr, Focus, RollingCorrSeries};
use crashnet_core::format::sig;
use crashnet_core::ReturnPanel;

pub fn rolling(ctx: &Context, rp: &ReturnPanel) -> Result<RollingCorrSeries> {
    let c = &ctx.settings.config.corr;
    let w = make_weights(c.window, c.theta, ctx.settings.theta_mode)?;
    Ok(rolling_corr(rp, c.step, &w)?)
}

pub fn run(ctx: &Context) -> Result<()> {
    let s = &ctx.settings;
    let c = &s.config.corr;
    let rp = ctx.returns()?;
    ctx.require_assets(&rp, &c.focus)?;
    let series = rolling(ctx, &rp)?;
    let mut out = StageOutput::create(s, "corr")?;

    let mut focus = vec![("MARKET".to_string(), Focus::Market)];
    focus.extend(c.focus.iter().map(|a| (a.clone(), Focus::Asset(a.clone()))));
    let mut columns = Vec::new();
    for (name, f) in &focus {
        let raw = average_corr(&series, f)?;
        let smooth = ema(&raw, c.alpha)?;
        columns.push((name.clone(), raw, smooth));
    }

    let ends = series.window_ends();
    let mut header = vec!["time".to_string()];
    for (name, _, _) in &columns {
        header.push(name.clone());
        header.push(format!("{name}_ema"));
    }
    header.push("degenerate_pairs".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = ends.iter().enumerate().map(|(k, t)| {
        let mut row = vec![format_time(*t)];
        for (_, raw, smooth) in &columns {
            row.push(sig(raw[k], 6));
            row.push(sig(smooth[k], 6));
        }
        let m = &series.matrices[k];
        let n = m.n();
        let pairs = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).filter(|&(i, j)| m.degenerate[(i, j)]).count();
        row.push(pairs.to_string());
        row
    });
    out.csv("avg_corr.csv", &header_refs, rows)?;

    if c.matrices {
        let assets = &series.assets;
        let rows = series.matrices.iter().flat_map(|m| {
            let n = m.n();
            (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (m, i, j))).map(|(m, i, j)| {
                vec![
                    format_time(m.window_end),
                    assets[i].clone(),
                    assets[j].clone(),
                    sig(m.matrix[(i, j)], 6),
                    u8::from(m.degenerate[(i, j)]).to_string(),
                ]
            })
        });
        out.csv("matrices.csv", &["time", "asset_i", "asset_j", "rho", "degenerate"], rows)?;
    }

    let mut lines = Vec::new();
    for (k, (name, raw, smooth)) in columns.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut r = Series::new(format!("{name} (raw)"), ends.iter().zip(raw).map(|(t, v)| (*t as f64, *v)).collect(), color);
        r.width = 0.6;
        r.dashed = true;
        r.legend = false;
        lines.push(r);
        lines.push(Series::new(name.clone(), ends.iter().zip(smooth).map(|(t, v)| (*t as f64, *v)).collect(), color));
    }
    let chart = TimeChart {
        title: format!("Average weighted correlation ({}h windows, EMA α = {})", c.window, c.alpha),
        y_label: "average correlation".into(),
        log_y: false,
        series: lines,
        bands: vec![],
        markers: s.events.clone(),
    };
    out.text("avg_corr.svg", &svg::time_chart(&chart))?;
    out.finish("corr")
}
