//! `herd`: CSAD regressions over the full sample and rolling windows.

use super::{Context, StageOutput};
use crate::error::UsageError;
use crate::svg::{self, Series, TimeChart, PALETTE};
use crate::time::format_time;
use anyhow::Result;
use crashnet_core::format::sig;
use crashnet_core::herding::{csad, exclude_assets, rolling_herding, run_herding, HerdingRegressionResult, PValueDist, RegressionForm};
use crashnet_core::panel::market_return;
use crashnet_ingest::registry::SECTORS;
use std::fmt::Write;

pub const REGRESSION_HEADER: [&str; 7] = ["form", "coef_name", "estimate", "nw_se", "t", "p", "stars"];
pub const NO_HERDING: &str = "no significant herding";

pub fn regression_rows(r: &HerdingRegressionResult) -> Vec<Vec<String>> {
    let form = r.form.name().to_string();
    let mut rows: Vec<Vec<String>> = r
        .coefficients
        .iter()
        .map(|c| {
            vec![
                form.clone(),
                c.name.to_string(),
                sig(c.estimate, 6),
                sig(c.std_error, 6),
                sig(c.t_stat, 6),
                sig(c.p_value, 6),
                c.stars.to_string(),
            ]
        })
        .collect();
    let blank = || vec![String::new(); 4];
    for (name, value) in [("R2", sig(r.r2, 6)), ("adj_R2", sig(r.adj_r2, 6)), ("lag", r.lag.to_string()), ("T", r.t.to_string())] {
        let mut row = vec![form.clone(), name.to_string(), value];
        row.extend(blank());
        rows.push(row);
    }
    rows
}

/// One line per coefficient, e.g. `rm_sq -0.4237 (se 0.31, p 0.17)`.
fn describe_fit(r: &HerdingRegressionResult) -> String {
    let mut s = String::new();
    for c in &r.coefficients {
        let _ = writeln!(s, "  {:<12} {:>12}  se {:>10}  t {:>8}  p {:>10} {}", c.name, sig(c.estimate, 5), sig(c.std_error, 4), sig(c.t_stat, 4), sig(c.p_value, 4), c.stars);
    }
    let _ = writeln!(s, "  R2 {}  adj R2 {}  HAC lag {}  T {}", sig(r.r2, 4), sig(r.adj_r2, 4), r.lag, r.t);
    s
}

pub fn verdict(results: &[&HerdingRegressionResult], level: f64) -> String {
    let found: Vec<String> = results
        .iter()
        .flat_map(|r| r.herding_terms(level).into_iter().map(move |c| format!("{} {} = {} (p {})", r.form.name(), c.name, sig(c.estimate, 4), sig(c.p_value, 3))))
        .collect();
    if found.is_empty() {
        NO_HERDING.to_string()
    } else {
        format!("herding detected: {}", found.join("; "))
    }
}

pub fn run(ctx: &Context) -> Result<()> {
    let s = &ctx.settings;
    let h = &s.config.herd;
    let rp = ctx.returns()?;

    let mut excluded: Vec<String> = Vec::new();
    for sector in &h.exclude_sectors {
        if !SECTORS.contains(&sector.as_str()) {
            return Err(UsageError::new(format!("unknown sector `{sector}`")).into());
        }
        excluded.extend(ctx.registry.in_sector(sector).into_iter().filter(|a| rp.asset_index(a).is_some()));
    }
    for a in &h.exclude_assets {
        if rp.asset_index(a).is_none() {
            return Err(UsageError::unknown_symbol(a).into());
        }
        excluded.push(a.clone());
    }
    excluded.sort();
    excluded.dedup();
    let rp = if excluded.is_empty() { rp } else { exclude_assets(&rp, &excluded)? };
    let m = market_return(&rp);
    let cs = csad(&rp, &m)?;

    let sym = run_herding(&cs, &m, RegressionForm::Symmetric, s.lag, s.pvalue)?;
    let asym = run_herding(&cs, &m, RegressionForm::Asymmetric, s.lag, s.pvalue)?;
    let rolling = if cs.values.len() >= h.window {
        rolling_herding(&cs, &m, h.window, h.step, s.lag, s.pvalue)?
    } else {
        log::warn!("only {} hours; rolling {}-hour regressions skipped", cs.values.len(), h.window);
        Vec::new()
    };
    let mut out = StageOutput::create(s, "herd")?;

    let mut rows = regression_rows(&sym);
    rows.extend(regression_rows(&asym));
    out.csv("regression.csv", &REGRESSION_HEADER, rows)?;

    let names = RegressionForm::Asymmetric.coefficient_names();
    let mut header: Vec<String> = vec!["time".into()];
    for n in names {
        header.push(n.to_string());
        header.push(format!("{n}_p"));
    }
    header.extend(["adj_R2".into(), "herding".into()]);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(
        "rolling.csv",
        &header_refs,
        rolling.iter().map(|r| {
            let mut row = vec![format_time(r.span.1)];
            for c in &r.coefficients {
                row.push(sig(c.estimate, 6));
                row.push(sig(c.p_value, 6));
            }
            row.push(sig(r.adj_r2, 6));
            row.push(u8::from(r.herding_detected(h.level)).to_string());
            row
        }),
    )?;

    let mut summary = String::new();
    let _ = writeln!(summary, "assets: {}", rp.n_assets());
    let _ = writeln!(summary, "excluded: {}", if excluded.is_empty() { "none".to_string() } else { excluded.join(", ") });
    let _ = writeln!(summary, "hours: {} ({} to {})", cs.values.len(), format_time(sym.span.0), format_time(sym.span.1));
    let dist = match s.pvalue {
        PValueDist::StudentT => "Student t",
        PValueDist::Normal => "normal",
    };
    let _ = writeln!(summary, "p-values: two-sided, {dist}, Newey-West standard errors");
    let _ = writeln!(summary, "\nsymmetric: CSAD = alpha + b1 |Rm| + b2 Rm^2");
    summary.push_str(&describe_fit(&sym));
    let _ = writeln!(summary, "\nasymmetric: up/down market split of |Rm| and Rm^2");
    summary.push_str(&describe_fit(&asym));
    let _ = writeln!(summary, "\nverdict at {}: {}", h.level, verdict(&[&sym, &asym], h.level));
    if !rolling.is_empty() {
        let count = |name: &str| rolling.iter().filter(|r| r.herding_terms(h.level).iter().any(|c| c.name == name)).count();
        let n = rolling.len();
        let _ = writeln!(
            summary,
            "rolling {}h windows: {n}; significantly negative up_rm_sq in {}, down_rm_sq in {}",
            h.window,
            count("up_rm_sq"),
            count("down_rm_sq")
        );
    }
    out.text("summary.txt", &summary)?;

    let points: Vec<(f64, f64)> = m.values.iter().copied().zip(cs.values.iter().copied()).collect();
    let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let fit: Vec<(f64, f64)> = (0..=200)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / 200.0;
            let b = &sym.coefficients;
            (x, b[0].estimate + b[1].estimate * x.abs() + b[2].estimate * x * x)
        })
        .collect();
    let curve = Series::new("symmetric fit", fit, PALETTE[1]);
    out.text("csad_scatter.svg", &svg::scatter_chart("CSAD against the market return", "market return", "CSAD", &points, &[curve]))?;

    if !rolling.is_empty() {
        let t_line = |name: &str, color| {
            let pts = rolling.iter().map(|r| (r.span.1 as f64, r.coefficient(name).expect("asymmetric term").t_stat)).collect();
            Series::new(format!("t({name})"), pts, color)
        };
        let chart = TimeChart {
            title: format!("Rolling {}-hour asymmetric regression", h.window),
            y_label: "Newey-West t statistic".into(),
            log_y: false,
            series: vec![t_line("up_rm_sq", PALETTE[2]), t_line("down_rm_sq", PALETTE[1])],
            bands: vec![],
            markers: s.events.clone(),
        };
        out.text("rolling_t.svg", &svg::time_chart(&chart))?;
    }
    out.finish("herd")
}
