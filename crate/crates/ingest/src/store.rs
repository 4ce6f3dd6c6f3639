//! On-disk store: `root/<exchange>/<SYMBOL>/<kind>/<YYYY-MM-DD>.csv` plus
//! `root/manifest.json` recording, per file, the time range known to be
//! covered and the row count. Writers take an exclusive lock file; readers
//! never lock.

use crate::candles::{normalize_candles, normalize_trades};
use crate::csv_io;
use crate::error::{IngestError, Result};
use crate::exchange::MarketSource;
use crashnet_core::market::HOUR_SECS;
use crashnet_core::{Candle, PricePanel, TradeRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

pub const DAY_SECS: i64 = 86_400;
pub const DEFAULT_MAX_GAP: usize = 6;
const MANIFEST: &str = "manifest.json";
const LOCK: &str = ".lock";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Candles,
    Trades,
}

impl DataKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DataKind::Candles => "candles",
            DataKind::Trades => "trades",
        }
    }
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub exchange: String,
    pub symbol: String,
    pub kind: DataKind,
    pub day: String,
    /// Half-open `[start, end)` in epoch seconds.
    pub covered_range: [i64; 2],
    pub row_count: usize,
    pub quote: String,
}

impl ManifestEntry {
    fn covers(&self, start: i64, end: i64) -> bool {
        self.covered_range[0] <= start && end <= self.covered_range[1]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
}

fn entry_key(exchange: &str, symbol: &str, kind: DataKind, day: &str) -> (String, String, DataKind, String) {
    (exchange.to_string(), symbol.to_string(), kind, day.to_string())
}

impl Manifest {
    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn get(&self, exchange: &str, symbol: &str, kind: DataKind, day: &str) -> Option<&ManifestEntry> {
        self.entries
            .iter()
            .find(|e| e.exchange == exchange && e.symbol == symbol && e.kind == kind && e.day == day)
    }

    pub fn has(&self, exchange: &str, symbol: &str, kind: DataKind) -> bool {
        self.entries.iter().any(|e| e.exchange == exchange && e.symbol == symbol && e.kind == kind)
    }

    pub fn symbols(&self, exchange: &str, kind: DataKind) -> Vec<String> {
        let mut s: Vec<String> =
            self.entries.iter().filter(|e| e.exchange == exchange && e.kind == kind).map(|e| e.symbol.clone()).collect();
        s.dedup();
        s
    }

    pub fn quote(&self, exchange: &str, symbol: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.exchange == exchange && e.symbol == symbol).map(|e| e.quote.as_str())
    }

    fn upsert(&mut self, entry: ManifestEntry) {
        let key = entry_key(&entry.exchange, &entry.symbol, entry.kind, &entry.day);
        self.entries.retain(|e| entry_key(&e.exchange, &e.symbol, e.kind, &e.day) != key);
        self.entries.push(entry);
        self.entries.sort_by(|a, b| {
            entry_key(&a.exchange, &a.symbol, a.kind, &a.day).cmp(&entry_key(&b.exchange, &b.symbol, b.kind, &b.day))
        });
    }
}

pub fn day_label(day_start: i64) -> String {
    chrono::DateTime::from_timestamp(day_start, 0)
        .expect("timestamp in range")
        .format("%Y-%m-%d")
        .to_string()
}

/// UTC days overlapping `[start, end)`, as `(day_start, sub_start, sub_end)`.
fn days(start: i64, end: i64) -> Vec<(i64, i64, i64)> {
    let mut out = Vec::new();
    if start >= end {
        return out;
    }
    let mut d = start.div_euclid(DAY_SECS) * DAY_SECS;
    while d < end {
        out.push((d, start.max(d), end.min(d + DAY_SECS)));
        d += DAY_SECS;
    }
    out
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn file_path(&self, exchange: &str, symbol: &str, kind: DataKind, day: &str) -> PathBuf {
        self.root.join(exchange).join(symbol).join(kind.as_str()).join(format!("{day}.csv"))
    }

    pub fn manifest(&self) -> Result<Manifest> {
        let path = self.root.join(MANIFEST);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&path).map_err(|e| IngestError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| IngestError::Format { path, message: e.to_string() })
    }

    /// Takes the single-writer lock.
    pub fn writer(&self) -> Result<StoreWriter> {
        std::fs::create_dir_all(&self.root).map_err(|e| IngestError::io(&self.root, e))?;
        let lock = self.root.join(LOCK);
        match std::fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => return Err(IngestError::StoreLocked(self.root.clone())),
            Err(e) => return Err(IngestError::io(&lock, e)),
        }
        let manifest = match self.manifest() {
            Ok(m) => m,
            Err(e) => {
                let _ = std::fs::remove_file(&lock);
                return Err(e);
            }
        };
        Ok(StoreWriter { store: self.clone(), manifest, lock })
    }

    fn read_days<T>(
        &self,
        exchange: &str,
        symbol: &str,
        kind: DataKind,
        start: i64,
        end: i64,
        load: impl Fn(&Path) -> Result<Vec<T>>,
    ) -> Result<Vec<T>> {
        let manifest = self.manifest()?;
        let mut out = Vec::new();
        for (d, _, _) in days(start, end) {
            let label = day_label(d);
            if manifest.get(exchange, symbol, kind, &label).is_some() {
                out.extend(load(&self.file_path(exchange, symbol, kind, &label))?);
            }
        }
        Ok(out)
    }

    pub fn read_candles(&self, exchange: &str, symbol: &str, start: i64, end: i64) -> Result<Vec<Candle>> {
        let all = self.read_days(exchange, symbol, DataKind::Candles, start, end, csv_io::load_candles)?;
        Ok(all.into_iter().filter(|c| c.ts >= start && c.ts < end).collect())
    }

    pub fn read_trades(&self, exchange: &str, symbol: &str, start: i64, end: i64) -> Result<Vec<TradeRecord>> {
        let all = self.read_days(exchange, symbol, DataKind::Trades, start, end, csv_io::load_trades)?;
        Ok(all.into_iter().filter(|t| t.ts_ms >= start * 1000 && t.ts_ms < end * 1000).collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SyncReport {
    pub fetched_days: usize,
    pub skipped_days: usize,
    pub rows: usize,
}

/// Exclusive write access to a store; the lock is released on drop.
pub struct StoreWriter {
    store: Store,
    manifest: Manifest,
    lock: PathBuf,
}

impl Drop for StoreWriter {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.lock);
    }
}

impl StoreWriter {
    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn save_manifest(&self) -> Result<()> {
        let path = self.store.root.join(MANIFEST);
        let tmp = self.store.root.join(format!("{MANIFEST}.tmp"));
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n";
        std::fs::write(&tmp, text).map_err(|e| IngestError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| IngestError::io(&path, e))
    }

    fn check_quote(&self, exchange: &str, symbol: &str, quote: &str) -> Result<()> {
        match self.manifest.quote(exchange, symbol) {
            Some(q) if q != quote => Err(IngestError::Format {
                path: self.store.root.join(MANIFEST),
                message: format!("{exchange}/{symbol} is stored in {q}, refusing to mix in {quote}"),
            }),
            _ => Ok(()),
        }
    }

    /// Merges candles into the day files overlapping `[start, end)` and marks
    /// that range covered. Rows outside the range are ignored.
    pub fn put_candles(&mut self, exchange: &str, quote: &str, symbol: &str, start: i64, end: i64, rows: &[Candle]) -> Result<usize> {
        self.check_quote(exchange, symbol, quote)?;
        let mut written = 0;
        for (d, s, e) in days(start, end) {
            let label = day_label(d);
            let path = self.store.file_path(exchange, symbol, DataKind::Candles, &label);
            let existing = self.manifest.get(exchange, symbol, DataKind::Candles, &label).cloned();
            let mut merged = match &existing {
                Some(_) => csv_io::load_candles(&path)?,
                None => Vec::new(),
            };
            merged.extend(rows.iter().filter(|c| c.ts >= s && c.ts < e));
            let merged = normalize_candles(merged);
            csv_io::save_candles(&path, &merged)?;
            written += merged.len();
            let covered = hull(existing.as_ref(), s, e);
            self.manifest.upsert(ManifestEntry {
                exchange: exchange.into(),
                symbol: symbol.into(),
                kind: DataKind::Candles,
                day: label,
                covered_range: covered,
                row_count: merged.len(),
                quote: quote.into(),
            });
            self.save_manifest()?;
        }
        Ok(written)
    }

    pub fn put_trades(
        &mut self,
        exchange: &str,
        quote: &str,
        symbol: &str,
        start: i64,
        end: i64,
        rows: &[TradeRecord],
    ) -> Result<usize> {
        self.check_quote(exchange, symbol, quote)?;
        let mut written = 0;
        for (d, s, e) in days(start, end) {
            let label = day_label(d);
            let path = self.store.file_path(exchange, symbol, DataKind::Trades, &label);
            let existing = self.manifest.get(exchange, symbol, DataKind::Trades, &label).cloned();
            let mut merged = match &existing {
                Some(_) => csv_io::load_trades(&path)?,
                None => Vec::new(),
            };
            merged.extend(rows.iter().filter(|t| t.ts_ms >= s * 1000 && t.ts_ms < e * 1000));
            let merged = normalize_trades(merged);
            csv_io::save_trades(&path, &merged)?;
            written += merged.len();
            let covered = hull(existing.as_ref(), s, e);
            self.manifest.upsert(ManifestEntry {
                exchange: exchange.into(),
                symbol: symbol.into(),
                kind: DataKind::Trades,
                day: label,
                covered_range: covered,
                row_count: merged.len(),
                quote: quote.into(),
            });
            self.save_manifest()?;
        }
        Ok(written)
    }

    /// Fetches whatever part of `[start, end)` the manifest does not cover,
    /// one UTC day at a time, so an interrupted sync resumes where it
    /// stopped. Days already covered are left untouched.
    pub fn sync(&mut self, source: &dyn MarketSource, symbol: &str, kind: DataKind, start: i64, end: i64) -> Result<SyncReport> {
        if start > end {
            return Err(IngestError::InvalidRange { start, end });
        }
        let exchange = source.name().to_string();
        let mut report = SyncReport::default();
        for (d, s, e) in days(start, end) {
            let label = day_label(d);
            let existing = self.manifest.get(&exchange, symbol, kind, &label).cloned();
            if existing.as_ref().is_some_and(|x| x.covers(s, e)) {
                report.skipped_days += 1;
                continue;
            }
            // refetch the union so the covered range stays a single interval
            let [fs, fe] = hull(existing.as_ref(), s, e);
            log::info!("{exchange} {symbol} {kind} {label}: fetching");
            report.rows += match kind {
                DataKind::Candles => {
                    let rows = source.fetch_candles(symbol, fs, fe)?;
                    self.put_candles(&exchange, source.quote(), symbol, fs, fe, &rows)?;
                    rows.len()
                }
                DataKind::Trades => {
                    let rows = source.fetch_trades(symbol, fs, fe)?;
                    self.put_trades(&exchange, source.quote(), symbol, fs, fe, &rows)?;
                    rows.len()
                }
            };
            report.fetched_days += 1;
        }
        Ok(report)
    }
}

fn hull(existing: Option<&ManifestEntry>, s: i64, e: i64) -> [i64; 2] {
    match existing {
        Some(x) => [x.covered_range[0].min(s), x.covered_range[1].max(e)],
        None => [s, e],
    }
}

/// Aligned hourly close grid for `symbols` over `[start, end)`. Missing
/// hours are forward-filled and flagged; a run of more than `max_gap`
/// missing hours, or a missing first hour, is an error.
pub fn load_panel(
    store: &Store,
    exchange: &str,
    symbols: &[String],
    start: i64,
    end: i64,
    max_gap: usize,
) -> Result<PricePanel> {
    if start > end {
        return Err(IngestError::InvalidRange { start, end });
    }
    let start = start.div_euclid(HOUR_SECS) * HOUR_SECS;
    let hours = ((end - start) + HOUR_SECS - 1) / HOUR_SECS;
    let timestamps: Vec<i64> = (0..hours).map(|h| start + h * HOUR_SECS).collect();
    let manifest = store.manifest()?;
    let mut close = Vec::with_capacity(symbols.len());
    let mut flags = Vec::with_capacity(symbols.len());
    for symbol in symbols {
        if !manifest.has(exchange, symbol, DataKind::Candles) {
            return Err(IngestError::MissingSymbol { exchange: exchange.into(), symbol: symbol.clone() });
        }
        let by_hour: BTreeMap<i64, f64> =
            store.read_candles(exchange, symbol, start, end)?.into_iter().map(|c| (c.ts, c.close)).collect();
        let mut row = Vec::with_capacity(timestamps.len());
        let mut filled = Vec::with_capacity(timestamps.len());
        let mut run = 0usize;
        for (i, ts) in timestamps.iter().enumerate() {
            match by_hour.get(ts) {
                Some(&p) => {
                    run = 0;
                    row.push(p);
                    filled.push(false);
                }
                None if i == 0 => return Err(IngestError::MissingFirstHour { symbol: symbol.clone(), ts: *ts }),
                None => {
                    run += 1;
                    if run > max_gap {
                        let gap_start = ts - (run as i64 - 1) * HOUR_SECS;
                        let len = timestamps[i - (run - 1)..].iter().take_while(|t| !by_hour.contains_key(t)).count();
                        return Err(IngestError::GapTooLarge { symbol: symbol.clone(), start: gap_start, hours: len, limit: max_gap });
                    }
                    row.push(row[i - 1]);
                    filled.push(true);
                }
            }
        }
        close.push(row);
        flags.push(filled);
    }
    Ok(PricePanel::new(timestamps, symbols.to_vec(), close, Some(flags))?)
}

/// Stored trades for one symbol, ascending.
pub fn load_trades(store: &Store, exchange: &str, symbol: &str, start: i64, end: i64) -> Result<Vec<TradeRecord>> {
    if !store.manifest()?.has(exchange, symbol, DataKind::Trades) {
        return Err(IngestError::MissingSymbol { exchange: exchange.into(), symbol: symbol.into() });
    }
    Ok(normalize_trades(store.read_trades(exchange, symbol, start, end)?))
}

/// Copies a directory of flat CSV files into the store: `<SYMBOL>.csv`
/// holds candles and `<SYMBOL>.trades.csv` trades. Each file's coverage is
/// the span of hours it contains. Returns the imported symbols.
pub fn import_dir(writer: &mut StoreWriter, dir: &Path, exchange: &str, quote: &str) -> Result<Vec<String>> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| IngestError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    names.sort();
    let mut symbols = Vec::new();
    for path in names {
        let file = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if let Some(symbol) = file.strip_suffix(".trades.csv") {
            let rows = normalize_trades(csv_io::load_trades(&path)?);
            if let (Some(a), Some(b)) = (rows.first(), rows.last()) {
                writer.put_trades(exchange, quote, symbol, a.hour(), b.hour() + HOUR_SECS, &rows)?;
            }
        } else if let Some(symbol) = file.strip_suffix(".csv") {
            let rows = normalize_candles(csv_io::load_candles(&path)?);
            if let (Some(a), Some(b)) = (rows.first(), rows.last()) {
                writer.put_candles(exchange, quote, symbol, a.ts, b.ts + HOUR_SECS, &rows)?;
            }
            symbols.push(symbol.to_string());
        }
    }
    Ok(symbols)
}
