//! `tmfg`: filtered networks per window, eigenvector centrality, percentile
//! bands and network snapshots.

use super::{corr, Context, StageOutput};
use crate::svg::{self, Band, Series, TimeChart, PALETTE};
use crate::time::{file_stamp, format_time};
use anyhow::{bail, Result};
use crashnet_core::format::sig;
use crashnet_core::market::floor_hour;
use crashnet_core::tmfg::{centrality_series, force_layout, validate, CentralityOptions, PERCENTILE_LEVELS};

fn file_safe(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn run(ctx: &Context) -> Result<()> {
    let s = &ctx.settings;
    let c = &s.config;
    let rp = ctx.returns()?;
    ctx.require_assets(&rp, &c.corr.focus)?;
    let rolling = corr::rolling(ctx, &rp)?;
    let opts = CentralityOptions { transform: s.transform, adjacency: s.adjacency, alpha: c.corr.alpha };
    let cs = centrality_series(&rolling, &c.corr.focus, &opts)?;
    for (g, t) in cs.graphs.iter().zip(&cs.window_ends) {
        let report = validate(g);
        if !report.all_passed() {
            let names: Vec<&str> = report.failures().iter().map(|f| f.name).collect();
            bail!("network for window ending {} failed checks: {}", format_time(*t), names.join(", "));
        }
    }
    let assets = &rolling.assets;
    let mut out = StageOutput::create(s, "tmfg")?;

    for (g, t) in cs.graphs.iter().zip(&cs.window_ends) {
        let rows = g.edges().iter().map(|e| vec![assets[e.source].clone(), assets[e.target].clone(), sig(e.weight, 6)]);
        out.csv(&format!("edges/{}.csv", file_stamp(*t)), &["source", "target", "weight"], rows)?;
    }

    let rows = cs.window_ends.iter().enumerate().flat_map(|(k, t)| {
        cs.per_asset.iter().map(move |a| vec![format_time(*t), a.asset.clone(), sig(a.raw[k], 6), sig(a.smoothed[k], 6)])
    });
    out.csv("centrality.csv", &["time", "asset", "raw", "smoothed"], rows)?;

    let band_names: Vec<String> = PERCENTILE_LEVELS.iter().map(|p| format!("p{p}")).collect();
    let mut header = vec!["time"];
    header.extend(band_names.iter().map(String::as_str));
    let bands = cs.bands.clone().unwrap_or_default();
    out.csv(
        "bands.csv",
        &header,
        bands.iter().map(|b| {
            let mut row = vec![format_time(b.window_end)];
            row.extend(b.values.iter().map(|v| sig(*v, 6)));
            row
        }),
    )?;

    let at = |i: usize| -> Vec<(f64, f64)> { bands.iter().map(|b| (b.window_end as f64, b.values[i])).collect() };
    let shaded = if bands.is_empty() {
        vec![]
    } else {
        // 1–99, 5–95 and 25–75 percent ranges of the other assets
        [(0, 5, 0.12), (1, 4, 0.18), (2, 3, 0.28)]
            .iter()
            .map(|&(lo, hi, o)| Band { lower: at(lo), upper: at(hi), color: "#7f7f7f", opacity: o })
            .collect()
    };
    let lines = c
        .corr
        .focus
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let a = cs.asset(f).expect("focus assets are in the panel");
            let pts = cs.window_ends.iter().zip(&a.smoothed).map(|(t, v)| (*t as f64, *v)).collect();
            let mut line = Series::new(f.clone(), pts, PALETTE[(k + 1) % PALETTE.len()]);
            line.width = 2.0;
            line
        })
        .collect();
    let chart = TimeChart {
        title: "Eigenvector centrality (EMA) with percentile bands of the other assets".into(),
        y_label: "centrality".into(),
        log_y: false,
        series: lines,
        bands: shaded,
        markers: s.events.clone(),
    };
    out.text("centrality.svg", &svg::time_chart(&chart))?;

    let snapshots: Vec<(String, i64)> = if c.tmfg.snapshots.is_empty() {
        s.events.iter().map(|e| (e.label.clone(), e.ts)).collect()
    } else {
        c.tmfg
            .snapshots
            .iter()
            .map(|t| s.resolve_time(t).map(|ts| (file_stamp(ts), ts)))
            .collect::<Result<_, _>>()?
    };
    let focus_idx: Vec<usize> = c.corr.focus.iter().filter_map(|f| assets.iter().position(|a| a == f)).collect();
    for (name, ts) in snapshots {
        // the latest window that ends at or before the snapshot hour
        let Some(k) = cs.window_ends.iter().rposition(|&e| e <= floor_hour(ts)) else {
            log::warn!("no window ends by {}; skipping snapshot {name}", format_time(ts));
            continue;
        };
        let g = &cs.graphs[k];
        let pos = force_layout(g, c.output.seed, c.tmfg.layout_iterations);
        let edges: Vec<(usize, usize, f64)> = g.edges().iter().map(|e| (e.source, e.target, e.weight)).collect();
        let title = svg::at_time("Filtered network", cs.window_ends[k]);
        let drawing = svg::network_chart(&title, assets, &pos, &edges, &cs.vectors[k].values, &focus_idx);
        out.text(&format!("network_{}.svg", file_safe(&name)), &drawing)?;
    }
    out.finish("tmfg")
}
