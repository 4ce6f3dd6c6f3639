//! Hourly buy/sell notional and imbalance from a trade tape.
//!
//! Imbalance is sell notional minus buy notional, so positive values mean
//! net selling pressure.

use crate::market::{EventMarker, TradeRecord, HOUR_SECS};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MicroError {
    #[error("trade at index {index} (ts_ms {ts_ms}) is earlier than its predecessor")]
    UnorderedInput { index: usize, ts_ms: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImbalanceBar {
    pub hour: i64,
    pub buy_notional: f64,
    pub sell_notional: f64,
    pub imbalance: f64,
}

impl ImbalanceBar {
    fn empty(hour: i64) -> Self {
        Self { hour, buy_notional: 0.0, sell_notional: 0.0, imbalance: 0.0 }
    }
}

/// One bar per UTC hour from the first trade's hour to the last trade's,
/// including empty hours as zero bars.
pub fn hourly_imbalance(trades: &[TradeRecord]) -> Result<Vec<ImbalanceBar>, MicroError> {
    if let Some(index) = trades.windows(2).position(|w| w[1].ts_ms < w[0].ts_ms) {
        return Err(MicroError::UnorderedInput { index: index + 1, ts_ms: trades[index + 1].ts_ms });
    }
    let (Some(first), Some(last)) = (trades.first(), trades.last()) else {
        return Ok(Vec::new());
    };
    let start = first.hour();
    let hours = ((last.hour() - start) / HOUR_SECS) as usize + 1;
    let mut bars: Vec<ImbalanceBar> = (0..hours).map(|h| ImbalanceBar::empty(start + h as i64 * HOUR_SECS)).collect();
    for t in trades {
        let bar = &mut bars[((t.hour() - start) / HOUR_SECS) as usize];
        match t.side {
            crate::market::Side::Buy => bar.buy_notional += t.notional(),
            crate::market::Side::Sell => bar.sell_notional += t.notional(),
        }
    }
    for bar in &mut bars {
        bar.imbalance = bar.sell_notional - bar.buy_notional;
    }
    Ok(bars)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttachedEvent {
    pub marker: EventMarker,
    /// Index of the bar for the marker's hour, when covered.
    pub bar: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceReport {
    pub bars: Vec<ImbalanceBar>,
    pub events: Vec<AttachedEvent>,
    /// Largest positive imbalances (selling), descending.
    pub top_selling: Vec<ImbalanceBar>,
    /// Most negative imbalances (buying), ascending.
    pub top_buying: Vec<ImbalanceBar>,
}

pub const PEAK_COUNT: usize = 5;

pub fn imbalance_report(bars: &[ImbalanceBar], events: &[EventMarker]) -> ImbalanceReport {
    if bars.is_empty() {
        return ImbalanceReport { bars: vec![], events: vec![], top_selling: vec![], top_buying: vec![] };
    }
    let events = events
        .iter()
        .map(|m| AttachedEvent { marker: m.clone(), bar: bars.iter().position(|b| b.hour == crate::market::floor_hour(m.ts)) })
        .collect();
    let by = |desc: bool| {
        move |a: &ImbalanceBar, b: &ImbalanceBar| -> Ordering {
            let o = a.imbalance.total_cmp(&b.imbalance);
            if desc { o.reverse() } else { o }.then(a.hour.cmp(&b.hour))
        }
    };
    let mut top_selling: Vec<ImbalanceBar> = bars.iter().copied().filter(|b| b.imbalance > 0.0).collect();
    top_selling.sort_by(by(true));
    top_selling.truncate(PEAK_COUNT);
    let mut top_buying: Vec<ImbalanceBar> = bars.iter().copied().filter(|b| b.imbalance < 0.0).collect();
    top_buying.sort_by(by(false));
    top_buying.truncate(PEAK_COUNT);
    ImbalanceReport { bars: bars.to_vec(), events, top_selling, top_buying }
}
