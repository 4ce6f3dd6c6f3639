//! Market-data ingestion: Kraken and Binance public REST clients, CSV
//! archives, a resumable on-disk store, the asset registry and a seeded
//! synthetic market.

pub mod binance;
pub mod candles;
pub mod csv_io;
pub mod error;
pub mod exchange;
pub mod http;
pub mod kraken;
pub mod registry;
pub mod store;
pub mod synthetic;

pub use candles::build_candles_from_trades;
pub use error::{IngestError, Result};
pub use exchange::{Exchange, MarketSource};
pub use registry::{AssetSpec, Registry};
pub use store::{load_panel, load_trades, DataKind, Store, StoreWriter};
