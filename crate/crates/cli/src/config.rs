//! Run configuration: a TOML file with one table per stage, overlaid by
//! command-line flags and `--set section.key=value` overrides.

use crate::error::UsageError;
use crate::time::{format_time, parse_time};
use crashnet_core::corrnet::ThetaMode;
use crashnet_core::herding::{HacLag, PValueDist};
use crashnet_core::panel::Kurtosis;
use crashnet_core::tmfg::{Adjacency, SimilarityTransform};
use crashnet_core::EventMarker;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataConfig,
    pub corr: CorrConfig,
    pub tmfg: TmfgConfig,
    pub herd: HerdConfig,
    pub events: BTreeMap<String, String>,
    pub stats: StatsConfig,
    pub imbalance: ImbalanceConfig,
    pub output: OutputConfig,
}

impl Default for Config {
    fn default() -> Self {
        let events = [
            ("a", "2022-05-05T12:00Z"),
            ("b", "2022-05-07T22:00Z"),
            ("c", "2022-05-09T14:00Z"),
            ("d", "2022-05-11T10:00Z"),
        ];
        Self {
            data: DataConfig::default(),
            corr: CorrConfig::default(),
            tmfg: TmfgConfig::default(),
            herd: HerdConfig::default(),
            events: events.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            stats: StatsConfig::default(),
            imbalance: ImbalanceConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Root directory of the local store.
    pub store: PathBuf,
    /// `kraken`, `binance`, `synthetic` or `csv`.
    pub exchange: String,
    /// Tickers to analyse; empty means the whole registry.
    pub assets: Vec<String>,
    /// Registry CSV (`symbol,name,sector`); the bundled 61-asset list when unset.
    pub registry: Option<PathBuf>,
    pub start: String,
    /// Exclusive.
    pub end: String,
    pub max_gap: usize,
    /// Whether `fetch` also downloads public trades.
    pub trades: bool,
    pub synthetic_seed: u64,
    /// Requests per second; the exchange default when unset.
    pub rate: Option<f64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            store: PathBuf::from("store"),
            exchange: "kraken".into(),
            assets: Vec::new(),
            registry: None,
            start: "2022-05-01T00:00Z".into(),
            end: "2022-05-17T00:00Z".into(),
            max_gap: 6,
            trades: true,
            synthetic_seed: 42,
            rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrConfig {
    pub window: usize,
    pub step: usize,
    pub theta: f64,
    /// Use θ directly as the decay constant instead of a fraction of the window.
    pub theta_literal: bool,
    /// EMA smoothing factor for averaged correlations and centralities.
    pub alpha: f64,
    /// Assets whose average correlation is tracked alongside the market.
    pub focus: Vec<String>,
    /// Also write every window's matrix.
    pub matrices: bool,
}

impl Default for CorrConfig {
    fn default() -> Self {
        Self {
            window: 24,
            step: 1,
            theta: 0.3,
            theta_literal: false,
            alpha: 0.3,
            focus: vec!["LUNA".into(), "UST".into()],
            matrices: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TransformSetting {
    #[default]
    Raw,
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AdjacencySetting {
    #[default]
    Weighted,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TmfgConfig {
    pub transform: TransformSetting,
    pub adjacency: AdjacencySetting,
    /// Hours to draw network snapshots at; the event markers when empty.
    pub snapshots: Vec<String>,
    pub layout_iterations: usize,
}

impl Default for TmfgConfig {
    fn default() -> Self {
        Self {
            transform: TransformSetting::Raw,
            adjacency: AdjacencySetting::Weighted,
            snapshots: Vec::new(),
            layout_iterations: 200,
        }
    }
}

/// `"auto"` or a fixed number of lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LagSetting {
    Fixed(usize),
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PValueSetting {
    #[default]
    T,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HerdConfig {
    pub lag: LagSetting,
    pub pvalue: PValueSetting,
    pub window: usize,
    pub step: usize,
    pub exclude_sectors: Vec<String>,
    pub exclude_assets: Vec<String>,
    pub level: f64,
}

impl Default for HerdConfig {
    fn default() -> Self {
        Self {
            lag: LagSetting::Named("auto".into()),
            pvalue: PValueSetting::T,
            window: 168,
            step: 1,
            exclude_sectors: Vec::new(),
            exclude_assets: Vec::new(),
            level: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KurtosisSetting {
    #[default]
    Raw,
    Excess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub kurtosis: KurtosisSetting,
    /// Event label or time starting the average-return window.
    pub average_from: String,
    /// Event label or time ending it (inclusive).
    pub average_to: String,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self { kurtosis: KurtosisSetting::Raw, average_from: "b".into(), average_to: "d".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImbalanceConfig {
    pub assets: Vec<String>,
}

impl Default for ImbalanceConfig {
    fn default() -> Self {
        Self { assets: vec!["LUNA".into(), "UST".into(), "BTC".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Seed for network layouts, the only randomness in the outputs.
    pub seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), seed: 42 }
    }
}

/// Flag values that overlay the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub theta: Option<f64>,
    pub theta_literal: bool,
    pub lag: Option<String>,
    pub exclude_sector: Vec<String>,
    pub set: Vec<String>,
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), UsageError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| UsageError::new(format!("bad key `{path}`")))?;
    let mut t = table;
    for p in parts {
        t = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| UsageError::new(format!("`{p}` in `{path}` is not a table")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

/// Parses the right-hand side of `--set` as a TOML value, falling back to a
/// bare string.
fn parse_value(text: &str) -> toml::Value {
    let doc = format!("v = {text}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

/// Times are kept as text; unquoted TOML datetimes become strings.
fn stringify_datetimes(v: &mut toml::Value) {
    match v {
        toml::Value::Datetime(d) => *v = toml::Value::String(d.to_string()),
        toml::Value::Array(a) => a.iter_mut().for_each(stringify_datetimes),
        toml::Value::Table(t) => t.iter_mut().for_each(|(_, v)| stringify_datetimes(v)),
        _ => {}
    }
}

fn integer_to_text(v: &mut toml::Value) {
    match v {
        toml::Value::Integer(i) => *v = toml::Value::String(i.to_string()),
        toml::Value::Array(a) => a.iter_mut().for_each(integer_to_text),
        toml::Value::Table(t) => t.iter_mut().for_each(|(_, v)| integer_to_text(v)),
        _ => {}
    }
}

/// Time-valued keys also accept epoch seconds.
fn epoch_times_as_text(table: &mut toml::Table) {
    for (section, keys) in [("data", &["start", "end"][..]), ("stats", &["average_from", "average_to"]), ("tmfg", &["snapshots"])] {
        if let Some(toml::Value::Table(t)) = table.get_mut(section) {
            for k in keys {
                if let Some(v) = t.get_mut(*k) {
                    integer_to_text(v);
                }
            }
        }
    }
    if let Some(events) = table.get_mut("events") {
        integer_to_text(events);
    }
}

impl Config {
    pub fn load(path: Option<&Path>, o: &Overrides) -> Result<Config, UsageError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| UsageError::new(format!("cannot read config {}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| UsageError::new(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        // an [events] table in the file replaces the defaults; `--set events.x` adds to them
        if !table.contains_key("events") {
            let defaults = Config::default().events.into_iter().map(|(k, v)| (k, toml::Value::String(v))).collect();
            table.insert("events".into(), toml::Value::Table(defaults));
        }
        if let Some(out) = &o.out {
            set_path(&mut table, "output.dir", toml::Value::String(out.display().to_string()))?;
        }
        if let Some(seed) = o.seed {
            let seed = i64::try_from(seed).map_err(|_| UsageError::new("seed must fit in 63 bits"))?;
            set_path(&mut table, "output.seed", toml::Value::Integer(seed))?;
        }
        if let Some(theta) = o.theta {
            set_path(&mut table, "corr.theta", toml::Value::Float(theta))?;
        }
        if o.theta_literal {
            set_path(&mut table, "corr.theta_literal", toml::Value::Boolean(true))?;
        }
        if let Some(lag) = &o.lag {
            set_path(&mut table, "herd.lag", parse_value(lag))?;
        }
        if !o.exclude_sector.is_empty() {
            let list = o.exclude_sector.iter().map(|s| toml::Value::String(s.clone())).collect();
            set_path(&mut table, "herd.exclude_sectors", toml::Value::Array(list))?;
        }
        for kv in &o.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| UsageError::new(format!("--set expects key=value, got `{kv}`")))?;
            set_path(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        epoch_times_as_text(&mut table);
        let mut value = toml::Value::Table(table);
        stringify_datetimes(&mut value);
        value.try_into::<Config>().map_err(|e| UsageError::new(format!("invalid configuration: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Validated, parsed view of a [`Config`].
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: Config,
    pub start: i64,
    pub end: i64,
    /// Sorted by time, then label.
    pub events: Vec<EventMarker>,
    pub theta_mode: ThetaMode,
    pub lag: HacLag,
    pub pvalue: PValueDist,
    pub kurtosis: Kurtosis,
    pub transform: SimilarityTransform,
    pub adjacency: Adjacency,
}

pub fn check_symbol(symbol: &str) -> Result<(), UsageError> {
    if symbol.is_empty() || !symbol.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()) {
        return Err(UsageError::unknown_symbol(symbol));
    }
    Ok(())
}

impl Settings {
    pub fn new(config: Config) -> Result<Settings, UsageError> {
        let start = parse_time(&config.data.start)?;
        let end = parse_time(&config.data.end)?;
        if start % 3600 != 0 || end % 3600 != 0 {
            return Err(UsageError::new("data.start and data.end must fall on whole hours"));
        }
        if end <= start {
            return Err(UsageError::new(format!("empty date range {} .. {}", config.data.start, config.data.end)));
        }
        if config.corr.window < 2 {
            return Err(UsageError::new("corr.window must be at least 2"));
        }
        if config.corr.step == 0 || config.herd.step == 0 {
            return Err(UsageError::new("step sizes must be at least 1"));
        }
        if !(config.corr.theta > 0.0 && config.corr.theta.is_finite()) {
            return Err(UsageError::new("corr.theta must be positive"));
        }
        if !(config.corr.alpha > 0.0 && config.corr.alpha <= 1.0) {
            return Err(UsageError::new("corr.alpha must be in (0, 1]"));
        }
        if !(config.herd.level > 0.0 && config.herd.level < 1.0) {
            return Err(UsageError::new("herd.level must be in (0, 1)"));
        }
        for s in config.data.assets.iter().chain(&config.corr.focus).chain(&config.imbalance.assets) {
            check_symbol(s)?;
        }
        let mut events = Vec::new();
        for (label, when) in &config.events {
            let ts = parse_time(when)?;
            if ts < start || ts >= end {
                log::warn!("event ({label}) at {} lies outside the data range", format_time(ts));
            }
            events.push(EventMarker::new(label.clone(), ts));
        }
        events.sort_by(|a, b| a.ts.cmp(&b.ts).then_with(|| a.label.cmp(&b.label)));
        let lag = match &config.herd.lag {
            LagSetting::Fixed(l) => HacLag::Fixed(*l),
            LagSetting::Named(s) if s.eq_ignore_ascii_case("auto") => HacLag::Auto,
            LagSetting::Named(s) => match s.parse::<usize>() {
                Ok(l) => HacLag::Fixed(l),
                Err(_) => return Err(UsageError::new(format!("herd.lag must be `auto` or a non-negative integer, got `{s}`"))),
            },
        };
        Ok(Settings {
            start,
            end,
            events,
            theta_mode: if config.corr.theta_literal { ThetaMode::Literal } else { ThetaMode::WindowFraction },
            lag,
            pvalue: match config.herd.pvalue {
                PValueSetting::T => PValueDist::StudentT,
                PValueSetting::Normal => PValueDist::Normal,
            },
            kurtosis: match config.stats.kurtosis {
                KurtosisSetting::Raw => Kurtosis::Raw,
                KurtosisSetting::Excess => Kurtosis::Excess,
            },
            transform: match config.tmfg.transform {
                TransformSetting::Raw => SimilarityTransform::Raw,
                TransformSetting::Squared => SimilarityTransform::Squared,
            },
            adjacency: match config.tmfg.adjacency {
                AdjacencySetting::Weighted => Adjacency::Weighted,
                AdjacencySetting::Binary => Adjacency::Binary,
            },
            config,
        })
    }

    /// An event label or a literal time.
    pub fn resolve_time(&self, text: &str) -> Result<i64, UsageError> {
        match self.events.iter().find(|e| e.label == text) {
            Some(e) => Ok(e.ts),
            None => parse_time(text).map_err(|_| UsageError::new(format!("`{text}` is neither an event label nor a time"))),
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.output.dir
    }

    pub fn stage_dir(&self, stage: &str) -> PathBuf {
        self.config.output.dir.join(stage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        let back: Config = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let s = Settings::new(c).unwrap();
        assert_eq!(s.end - s.start, 384 * 3600);
        assert_eq!(s.events.iter().map(|e| e.label.as_str()).collect::<Vec<_>>(), ["a", "b", "c", "d"]);
        assert_eq!(s.lag, HacLag::Auto);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[corr]\ntheta = 0.5\nwindow = 48\n[herd]\nlag = 3\n").unwrap();
        let c = Config::load(Some(&path), &Overrides::default()).unwrap();
        assert_eq!((c.corr.theta, c.corr.window), (0.5, 48));
        assert_eq!(Settings::new(c).unwrap().lag, HacLag::Fixed(3));

        let o = Overrides {
            theta: Some(2.0),
            theta_literal: true,
            lag: Some("auto".into()),
            exclude_sector: vec!["Stablecoins".into()],
            set: vec!["corr.window=12".into(), "data.assets=[\"BTC\",\"ETH\"]".into(), "events.e=2022-05-12T00:00Z".into()],
            ..Default::default()
        };
        let s = Settings::new(Config::load(Some(&path), &o).unwrap()).unwrap();
        assert_eq!((s.config.corr.theta, s.config.corr.window), (2.0, 12));
        assert_eq!(s.theta_mode, ThetaMode::Literal);
        assert_eq!(s.lag, HacLag::Auto);
        assert_eq!(s.config.herd.exclude_sectors, ["Stablecoins"]);
        assert_eq!(s.config.data.assets, ["BTC", "ETH"]);
        assert_eq!(s.events.len(), 5);
    }

    #[test]
    fn rejects_bad_values() {
        let load = |set: &str| {
            Config::load(None, &Overrides { set: vec![set.into()], ..Default::default() }).and_then(Settings::new)
        };
        assert!(load("corr.window=1").is_err());
        assert!(load("corr.windw=24").is_err());
        assert!(load("herd.lag=\"often\"").is_err());
        assert!(load("data.end=2022-04-01").is_err());
        assert!(load("data.start=2022-05-01T00:30Z").is_err());
        let err = load("data.assets=[\"luna\"]").unwrap_err();
        assert!(err.to_string().contains("luna"));
    }
}
