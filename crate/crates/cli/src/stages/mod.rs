//! Pipeline stages. Each analysis stage reads the store, writes into
//! `<out>/<stage>/` and finishes by listing its files in `outputs.txt`,
//! which `report` uses to tell completed stages apart.

pub mod corr;
pub mod fetch;
pub mod herd;
pub mod imbalance;
pub mod report;
pub mod stats;
pub mod tmfg;

use crate::config::Settings;
use crate::error::UsageError;
use anyhow::{Context as _, Result};
use crashnet_core::panel::log_returns;
use crashnet_core::{PricePanel, ReturnPanel};
use crashnet_ingest::synthetic::DEFAULT_ASSETS;
use crashnet_ingest::{load_panel, Registry, Store};
use std::path::{Path, PathBuf};

pub const OUTPUTS: &str = "outputs.txt";
pub const ANALYSIS_STAGES: [&str; 5] = ["stats", "corr", "tmfg", "herd", "imbalance"];

pub struct Context {
    pub settings: Settings,
    pub registry: Registry,
}

impl Context {
    pub fn new(settings: Settings) -> Result<Self> {
        let registry = match &settings.config.data.registry {
            Some(p) => Registry::from_path(p).map_err(|e| UsageError::new(e.to_string()))?,
            None => Registry::bundled(),
        };
        Ok(Self { settings, registry })
    }

    /// Configured assets; otherwise the synthetic default universe for the
    /// synthetic exchange and the registry for everything else.
    pub fn symbols(&self) -> Vec<String> {
        let data = &self.settings.config.data;
        if !data.assets.is_empty() {
            data.assets.clone()
        } else if data.exchange == crashnet_ingest::synthetic::EXCHANGE {
            DEFAULT_ASSETS.iter().map(|s| s.to_string()).collect()
        } else {
            self.registry.symbols()
        }
    }

    pub fn store(&self) -> Store {
        Store::open(&self.settings.config.data.store)
    }

    pub fn exchange(&self) -> &str {
        &self.settings.config.data.exchange
    }

    pub fn panel(&self) -> Result<PricePanel> {
        let s = &self.settings;
        let panel = load_panel(&self.store(), self.exchange(), &self.symbols(), s.start, s.end, s.config.data.max_gap)
            .context("loading the price panel")?;
        if panel.filled_cells() > 0 {
            log::warn!("{} missing hours were forward-filled", panel.filled_cells());
        }
        Ok(panel)
    }

    pub fn returns(&self) -> Result<ReturnPanel> {
        Ok(log_returns(&self.panel()?)?)
    }

    /// Checks that every listed ticker is part of the panel.
    pub fn require_assets(&self, rp: &ReturnPanel, tickers: &[String]) -> Result<()> {
        for t in tickers {
            if rp.asset_index(t).is_none() {
                return Err(UsageError::new(format!("unknown symbol `{t}`: not among the analysed assets")).into());
            }
        }
        Ok(())
    }
}

/// Output directory of one stage, emptied first.
pub struct StageOutput {
    dir: PathBuf,
    files: Vec<String>,
}

impl StageOutput {
    pub fn create(settings: &Settings, stage: &str) -> Result<Self> {
        let dir = settings.stage_dir(stage);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
        }
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn target(&mut self, name: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        self.files.push(name.to_string());
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.target(name)?;
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.target(name)?;
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes `outputs.txt` and reports what was written.
    pub fn finish(mut self, stage: &str) -> Result<()> {
        self.files.sort();
        let listing: String = self.files.iter().map(|f| format!("{f}\n")).collect();
        std::fs::write(self.dir.join(OUTPUTS), listing).with_context(|| format!("writing {}", self.dir.join(OUTPUTS).display()))?;
        println!("{stage}: wrote {} files to {}", self.files.len(), self.dir.display());
        Ok(())
    }
}

/// Files recorded by a completed stage, or `None` when it has not run.
pub fn stage_files(settings: &Settings, stage: &str) -> Option<Vec<String>> {
    let text = std::fs::read_to_string(settings.stage_dir(stage).join(OUTPUTS)).ok()?;
    Some(text.lines().filter(|l| !l.is_empty()).map(str::to_string).collect())
}
