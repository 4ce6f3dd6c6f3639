//! Asset registry: ticker, display name and sector for the studied universe.

use crate::error::{IngestError, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

const BUNDLED: &str = include_str!("../data/registry.csv");

/// The closed sector vocabulary.
pub const SECTORS: [&str; 19] = [
    "Advertising",
    "Asset Management",
    "Currencies",
    "Data Management",
    "Decentralized Exchanges",
    "Derivatives",
    "File Storage",
    "Gaming",
    "Identity",
    "Interoperability",
    "Lending",
    "Other",
    "Payment Platforms",
    "Scaling",
    "Shared Compute",
    "Smart Contract Platforms",
    "Social Media",
    "Stablecoins",
    "Virtual And Augmented Reality",
];

pub const STABLECOIN_SECTOR: &str = "Stablecoins";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetSpec {
    pub symbol: String,
    pub name: String,
    pub sector: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    assets: Vec<AssetSpec>,
}

impl Registry {
    /// The 61-asset universe shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled registry is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| IngestError::Registry(e.to_string()))?;
        if header.iter().ne(["symbol", "name", "sector"]) {
            return Err(IngestError::Registry("expected header `symbol,name,sector`".into()));
        }
        let assets = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<AssetSpec>, _>>()
            .map_err(|e| IngestError::Registry(e.to_string()))?;
        Self::new(assets)
    }

    pub fn new(assets: Vec<AssetSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &assets {
            if a.symbol.is_empty() {
                return Err(IngestError::Registry("empty symbol".into()));
            }
            if !seen.insert(a.symbol.as_str()) {
                return Err(IngestError::Registry(format!("duplicate symbol `{}`", a.symbol)));
            }
            if !SECTORS.contains(&a.sector.as_str()) {
                return Err(IngestError::Registry(format!("`{}` has unknown sector `{}`", a.symbol, a.sector)));
            }
        }
        Ok(Self { assets })
    }

    pub fn assets(&self) -> &[AssetSpec] {
        &self.assets
    }

    pub fn symbols(&self) -> Vec<String> {
        self.assets.iter().map(|a| a.symbol.clone()).collect()
    }

    pub fn get(&self, symbol: &str) -> Option<&AssetSpec> {
        self.assets.iter().find(|a| a.symbol == symbol)
    }

    pub fn in_sector(&self, sector: &str) -> Vec<String> {
        self.assets.iter().filter(|a| a.sector == sector).map(|a| a.symbol.clone()).collect()
    }

    pub fn stablecoins(&self) -> Vec<String> {
        self.in_sector(STABLECOIN_SECTOR)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_universe() {
        let r = Registry::bundled();
        assert_eq!(r.assets().len(), 61);
        assert_eq!(r.stablecoins(), vec!["DAI", "FXS", "USDT", "UST"]);
        assert_eq!(r.get("LUNA").unwrap().sector, "Smart Contract Platforms");
        let used: HashSet<&str> = r.assets().iter().map(|a| a.sector.as_str()).collect();
        assert_eq!(used.len(), SECTORS.len());
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(Registry::parse("symbol,name,sector\nA,a,Memes\n").is_err());
        assert!(Registry::parse("symbol,name,sector\nA,a,Other\nA,b,Other\n").is_err());
        assert!(Registry::parse("ticker,name,sector\n").is_err());
    }
}
