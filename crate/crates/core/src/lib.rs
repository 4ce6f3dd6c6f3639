//! Analytics for studying dependency structure and herding around a market
//! crash: hourly log-returns, exponentially weighted correlation networks,
//! TMFG filtering with eigenvector centrality, CSAD herding regressions with
//! Newey–West inference, and trade-tape imbalance.

pub mod corrnet;
pub mod format;
pub mod herding;
pub mod market;
pub mod microstructure;
pub mod panel;
pub mod tmfg;

pub use market::{Candle, EventMarker, Side, TradeRecord};
pub use panel::{PricePanel, ReturnPanel};
