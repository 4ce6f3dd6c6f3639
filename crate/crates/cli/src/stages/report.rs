//! `report`: bundle every stage's tables and plots into one directory with
//! a Markdown index.

use super::{stage_files, Context, StageOutput, ANALYSIS_STAGES, OUTPUTS};
use crate::error::MissingStageOutput;
use crate::time::format_time;
use anyhow::{Context as _, Result};
use std::fmt::Write;
use std::path::Path;

fn md_table(path: &Path) -> Result<String> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut s = format!("| {} |\n|{}\n", header.join(" | "), " --- |".repeat(header.len()));
    for rec in rdr.records() {
        let rec = rec?;
        let _ = writeln!(s, "| {} |", rec.iter().collect::<Vec<_>>().join(" | "));
    }
    Ok(s)
}

pub fn run(ctx: &Context) -> Result<()> {
    let s = &ctx.settings;
    let c = &s.config;
    let mut stages = Vec::new();
    for stage in ANALYSIS_STAGES {
        let files = stage_files(s, stage).ok_or_else(|| MissingStageOutput {
            stage: stage.to_string(),
            path: s.stage_dir(stage).join(OUTPUTS).display().to_string(),
        })?;
        stages.push((stage, files));
    }

    let mut out = StageOutput::create(s, "report")?;
    for (stage, files) in &stages {
        for f in files {
            let src = s.stage_dir(stage).join(f);
            let bytes = std::fs::read(&src).with_context(|| format!("reading {}", src.display()))?;
            let rel = format!("{stage}/{f}");
            let dst = out.dir().join(&rel);
            if let Some(parent) = dst.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&dst, bytes).with_context(|| format!("writing {}", dst.display()))?;
        }
    }

    let mut md = String::new();
    let _ = writeln!(md, "# Market crash network report\n");
    let _ = writeln!(md, "- exchange: {}", c.data.exchange);
    let _ = writeln!(md, "- assets: {}", ctx.symbols().len());
    let _ = writeln!(md, "- range: {} to {} (exclusive)", format_time(s.start), format_time(s.end));
    let mode = if c.corr.theta_literal { "decay constant" } else { "fraction of the window" };
    let _ = writeln!(md, "- correlation windows: {} hours, step {}, theta {} ({mode}), EMA alpha {}", c.corr.window, c.corr.step, c.corr.theta, c.corr.alpha);
    let lag = match &c.herd.lag {
        crate::config::LagSetting::Fixed(l) => l.to_string(),
        crate::config::LagSetting::Named(n) => n.clone(),
    };
    let _ = writeln!(md, "- HAC lag: {lag}; herding window {} hours", c.herd.window);
    let _ = writeln!(md, "- layout seed: {}\n", c.output.seed);

    let _ = writeln!(md, "## Events\n");
    for e in &s.events {
        let _ = writeln!(md, "- ({}) {}", e.label, format_time(e.ts));
    }

    let dir = |stage: &str| s.stage_dir(stage);
    let _ = writeln!(md, "\n## Descriptive statistics of hourly log-returns\n");
    md.push_str(&md_table(&dir("stats").join("descriptive.csv"))?);
    let _ = writeln!(md, "\n## Average hourly log-returns from {} to {}\n", c.stats.average_from, c.stats.average_to);
    md.push_str(&md_table(&dir("stats").join("average_returns.csv"))?);
    let _ = writeln!(md, "\n## Herding regressions\n");
    md.push_str(&md_table(&dir("herd").join("regression.csv"))?);
    let summary = std::fs::read_to_string(dir("herd").join("summary.txt")).context("reading herd summary")?;
    let _ = writeln!(md, "\n```\n{}```", summary);

    let _ = writeln!(md, "\n## Plots\n");
    let mut plots = 0;
    for (stage, files) in &stages {
        for f in files.iter().filter(|f| f.ends_with(".svg")) {
            let _ = writeln!(md, "### {stage}/{f}\n\n![{f}]({stage}/{f})\n");
            plots += 1;
        }
    }

    let _ = writeln!(md, "## Tables\n");
    for (stage, files) in &stages {
        let (edges, tables): (Vec<&String>, Vec<&String>) =
            files.iter().filter(|f| f.ends_with(".csv") || f.ends_with(".txt")).partition(|f| f.starts_with("edges/"));
        for f in tables {
            let _ = writeln!(md, "- [{stage}/{f}]({stage}/{f})");
        }
        if !edges.is_empty() {
            let _ = writeln!(md, "- {stage}/edges/: {} edge lists, one per window", edges.len());
        }
    }
    out.text("index.md", &md)?;
    println!("report: {plots} plots indexed");
    out.finish("report")
}
