//! Aligned hourly price panels, log-returns, equally weighted market returns
//! and descriptive statistics.

use crate::market::HOUR_SECS;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PanelError {
    #[error("panel needs at least one asset and two timestamps (got {assets} x {hours})")]
    TooSmall { assets: usize, hours: usize },
    #[error("timestamps must be strictly increasing and spaced by 3600 s (index {index})")]
    IrregularTimestamps { index: usize },
    #[error("asset `{asset}` row has {got} values, expected {expected}")]
    RaggedRow { asset: String, got: usize, expected: usize },
    #[error("duplicate asset `{0}`")]
    DuplicateAsset(String),
    #[error("non-positive or non-finite price for `{asset}` at index {index}")]
    NonPositivePrice { asset: String, index: usize },
    #[error("unknown asset `{0}`")]
    UnknownAsset(String),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("no return timestamps fall inside [{start}, {end}]")]
    EmptyWindow { start: i64, end: i64 },
}

/// Hourly close prices for `N` assets over `T` equally spaced UTC hours.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    timestamps: Vec<i64>,
    assets: Vec<String>,
    close: Vec<Vec<f64>>,
    fill_flags: Vec<Vec<bool>>,
}

impl PricePanel {
    /// Builds a panel, checking every structural invariant. `fill_flags`
    /// defaults to all-false when `None`.
    pub fn new(
        timestamps: Vec<i64>,
        assets: Vec<String>,
        close: Vec<Vec<f64>>,
        fill_flags: Option<Vec<Vec<bool>>>,
    ) -> Result<Self, PanelError> {
        let t = timestamps.len();
        if assets.is_empty() || t < 2 || close.len() != assets.len() {
            return Err(PanelError::TooSmall { assets: close.len().min(assets.len()), hours: t });
        }
        check_hourly(&timestamps)?;
        let mut seen = std::collections::HashSet::new();
        for (asset, row) in assets.iter().zip(&close) {
            if !seen.insert(asset.as_str()) {
                return Err(PanelError::DuplicateAsset(asset.clone()));
            }
            if row.len() != t {
                return Err(PanelError::RaggedRow { asset: asset.clone(), got: row.len(), expected: t });
            }
            if let Some(index) = row.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
                return Err(PanelError::NonPositivePrice { asset: asset.clone(), index });
            }
        }
        let fill_flags = match fill_flags {
            Some(flags) => {
                for (asset, row) in assets.iter().zip(&flags) {
                    if row.len() != t {
                        return Err(PanelError::RaggedRow { asset: asset.clone(), got: row.len(), expected: t });
                    }
                }
                if flags.len() != assets.len() {
                    return Err(PanelError::TooSmall { assets: flags.len(), hours: t });
                }
                flags
            }
            None => vec![vec![false; t]; assets.len()],
        };
        Ok(Self { timestamps, assets, close, fill_flags })
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn close(&self) -> &[Vec<f64>] {
        &self.close
    }

    pub fn fill_flags(&self) -> &[Vec<bool>] {
        &self.fill_flags
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_hours(&self) -> usize {
        self.timestamps.len()
    }

    pub fn filled_cells(&self) -> usize {
        self.fill_flags.iter().flatten().filter(|f| **f).count()
    }

    pub fn asset_index(&self, asset: &str) -> Option<usize> {
        self.assets.iter().position(|a| a == asset)
    }

    pub fn series(&self, asset: &str) -> Option<&[f64]> {
        self.asset_index(asset).map(|i| self.close[i].as_slice())
    }
}

fn check_hourly(timestamps: &[i64]) -> Result<(), PanelError> {
    for (i, w) in timestamps.windows(2).enumerate() {
        if w[1] - w[0] != HOUR_SECS {
            return Err(PanelError::IrregularTimestamps { index: i + 1 });
        }
    }
    Ok(())
}

/// Hourly log-returns; each return is labelled by its later hour.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    timestamps: Vec<i64>,
    assets: Vec<String>,
    returns: Vec<Vec<f64>>,
}

impl ReturnPanel {
    pub fn new(timestamps: Vec<i64>, assets: Vec<String>, returns: Vec<Vec<f64>>) -> Result<Self, PanelError> {
        if assets.is_empty() || timestamps.is_empty() || returns.len() != assets.len() {
            return Err(PanelError::TooSmall { assets: assets.len(), hours: timestamps.len() + 1 });
        }
        for (asset, row) in assets.iter().zip(&returns) {
            if row.len() != timestamps.len() {
                return Err(PanelError::RaggedRow { asset: asset.clone(), got: row.len(), expected: timestamps.len() });
            }
        }
        Ok(Self { timestamps, assets, returns })
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn returns(&self) -> &[Vec<f64>] {
        &self.returns
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn asset_index(&self, asset: &str) -> Option<usize> {
        self.assets.iter().position(|a| a == asset)
    }

    pub fn series(&self, asset: &str) -> Result<&[f64], PanelError> {
        self.asset_index(asset)
            .map(|i| self.returns[i].as_slice())
            .ok_or_else(|| PanelError::UnknownAsset(asset.to_string()))
    }

    /// Column `t` across all assets.
    pub fn cross_section(&self, t: usize) -> impl Iterator<Item = f64> + '_ {
        self.returns.iter().map(move |row| row[t])
    }

    /// Keeps only the listed rows, in their original order.
    pub(crate) fn select_rows(&self, keep: &[usize]) -> ReturnPanel {
        ReturnPanel {
            timestamps: self.timestamps.clone(),
            assets: keep.iter().map(|&i| self.assets[i].clone()).collect(),
            returns: keep.iter().map(|&i| self.returns[i].clone()).collect(),
        }
    }
}

/// `r_{i,t} = ln p_{i,t} - ln p_{i,t-1}`.
pub fn log_returns(panel: &PricePanel) -> Result<ReturnPanel, PanelError> {
    let mut returns = Vec::with_capacity(panel.n_assets());
    for (asset, row) in panel.assets.iter().zip(&panel.close) {
        if let Some(index) = row.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(PanelError::NonPositivePrice { asset: asset.clone(), index });
        }
        returns.push(row.windows(2).map(|w| w[1].ln() - w[0].ln()).collect());
    }
    Ok(ReturnPanel {
        timestamps: panel.timestamps[1..].to_vec(),
        assets: panel.assets.clone(),
        returns,
    })
}

/// Divides each asset's series by its first observation.
pub fn rescale(panel: &PricePanel) -> Vec<Vec<f64>> {
    panel
        .close
        .iter()
        .map(|row| {
            let base = row[0];
            row.iter().map(|p| p / base).collect()
        })
        .collect()
}

/// Equally weighted cross-sectional mean return per hour.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketReturnSeries {
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
}

/// Computed as a mean shifted by the first asset's return, so an hour in
/// which every asset returns the same value yields that value exactly.
pub fn market_return(rp: &ReturnPanel) -> MarketReturnSeries {
    let n = rp.n_assets() as f64;
    let values = (0..rp.len())
        .map(|t| {
            let first = rp.returns[0][t];
            first + rp.cross_section(t).map(|r| r - first).sum::<f64>() / n
        })
        .collect();
    MarketReturnSeries { timestamps: rp.timestamps.clone(), values }
}

/// Convention for the fourth standardized moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kurtosis {
    /// `m4 / m2^2` (3 for a normal distribution).
    #[default]
    Raw,
    /// `m4 / m2^2 - 3`.
    Excess,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    /// `None` when the series has zero variance.
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub min: f64,
    pub max: f64,
}

/// Sample mean, median (midpoint for even length), `n-1` standard deviation,
/// Fisher–Pearson skewness `m3/m2^1.5` and kurtosis `m4/m2^2`.
pub fn describe_series(values: &[f64], convention: Kurtosis) -> Result<DescriptiveStats, PanelError> {
    let n = values.len();
    if n < 4 {
        return Err(PanelError::TooFewObservations { needed: 4, got: n });
    }
    let nf = n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let (min, max) = (sorted[0], sorted[n - 1]);

    if values.iter().all(|v| *v == values[0]) {
        return Ok(DescriptiveStats {
            n,
            mean: values[0],
            median,
            std: 0.0,
            skewness: None,
            kurtosis: None,
            min,
            max,
        });
    }

    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = (m2 / (nf - 1.0)).sqrt();
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let degenerate = m2 <= (f64::EPSILON * scale).powi(2);
    let skewness = (!degenerate).then(|| m3 / m2.powf(1.5));
    let kurtosis = (!degenerate).then(|| {
        let k = m4 / (m2 * m2);
        match convention {
            Kurtosis::Raw => k,
            Kurtosis::Excess => k - 3.0,
        }
    });
    Ok(DescriptiveStats { n, mean, median, std, skewness, kurtosis, min, max })
}

pub fn describe(rp: &ReturnPanel, asset: &str, convention: Kurtosis) -> Result<DescriptiveStats, PanelError> {
    describe_series(rp.series(asset)?, convention)
}

/// Per-asset mean of the returns whose timestamps lie in `[start, end]`,
/// in panel order.
pub fn average_returns(rp: &ReturnPanel, start: i64, end: i64) -> Result<Vec<(String, f64)>, PanelError> {
    let idx: Vec<usize> = rp
        .timestamps
        .iter()
        .enumerate()
        .filter(|(_, ts)| (start..=end).contains(*ts))
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(PanelError::EmptyWindow { start, end });
    }
    let k = idx.len() as f64;
    Ok(rp
        .assets
        .iter()
        .zip(&rp.returns)
        .map(|(a, row)| (a.clone(), idx.iter().map(|&i| row[i]).sum::<f64>() / k))
        .collect())
}

/// Sorts `(asset, value)` pairs by value, ties broken by asset name.
pub fn sort_by_value(pairs: &mut [(String, f64)], descending: bool) {
    pairs.sort_by(|a, b| {
        let ord = a.1.total_cmp(&b.1);
        let ord = if descending { ord.reverse() } else { ord };
        ord.then_with(|| a.0.cmp(&b.0))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hours(t: usize) -> Vec<i64> {
        (0..t as i64).map(|i| 1_651_363_200 + i * HOUR_SECS).collect()
    }

    fn panel(rows: Vec<Vec<f64>>) -> PricePanel {
        let t = rows[0].len();
        let assets = (0..rows.len()).map(|i| format!("A{i}")).collect();
        PricePanel::new(hours(t), assets, rows, None).unwrap()
    }

    #[test]
    fn identity_price_gives_zero_return() {
        let rp = log_returns(&panel(vec![vec![100.0, 100.0]])).unwrap();
        assert_eq!(rp.returns()[0], vec![0.0]);
        assert_eq!(rp.timestamps(), &hours(2)[1..]);
    }

    #[test]
    fn ten_percent_move() {
        // ln(1.1) to 20 digits: 0.09531017980432486004
        let rp = log_returns(&panel(vec![vec![100.0, 110.0]])).unwrap();
        assert!((rp.returns()[0][0] - 0.095_310_179_804_324_86).abs() < 1e-15);
    }

    #[test]
    fn table_one_magnitude() {
        let p0 = 80.0;
        let rp = log_returns(&panel(vec![vec![p0, p0 * (-0.0195f64).exp()]])).unwrap();
        assert!((rp.returns()[0][0] + 0.0195).abs() < 1e-12);
    }

    #[test]
    fn rescale_examples() {
        let r = rescale(&panel(vec![vec![50.0, 100.0], vec![3.0, 3.0]]));
        assert_eq!(r, vec![vec![1.0, 2.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn panel_rejects_bad_input() {
        assert!(matches!(
            PricePanel::new(vec![0, 3600], vec!["A".into()], vec![vec![1.0, 0.0]], None),
            Err(PanelError::NonPositivePrice { index: 1, .. })
        ));
        assert!(matches!(
            PricePanel::new(vec![0, 7200], vec!["A".into()], vec![vec![1.0, 1.0]], None),
            Err(PanelError::IrregularTimestamps { .. })
        ));
        assert!(matches!(
            PricePanel::new(vec![0], vec!["A".into()], vec![vec![1.0]], None),
            Err(PanelError::TooSmall { .. })
        ));
        assert!(matches!(
            PricePanel::new(vec![0, 3600], vec!["A".into(), "A".into()], vec![vec![1.0, 1.0]; 2], None),
            Err(PanelError::DuplicateAsset(_))
        ));
    }

    #[test]
    fn market_return_single_and_symmetric() {
        let rp = ReturnPanel::new(vec![1, 2], vec!["A".into()], vec![vec![0.1, -0.2]]).unwrap();
        assert_eq!(market_return(&rp).values, vec![0.1, -0.2]);
        let rp = ReturnPanel::new(vec![1], vec!["A".into(), "B".into()], vec![vec![0.3], vec![-0.3]]).unwrap();
        assert_eq!(market_return(&rp).values, vec![0.0]);
    }

    #[test]
    fn describe_constant_series_is_degenerate() {
        let s = describe_series(&[0.1; 6], Kurtosis::Raw).unwrap();
        assert_eq!(s.mean, 0.1);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.skewness, None);
        assert_eq!(s.kurtosis, None);
    }

    #[test]
    fn describe_hand_computed() {
        // (-1, 1, -1, 1): mean 0, n-1 std sqrt(4/3), m2 = 1, m3 = 0, m4 = 1.
        let s = describe_series(&[-1.0, 1.0, -1.0, 1.0], Kurtosis::Raw).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.median, 0.0);
        assert!((s.std - (4.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.skewness, Some(0.0));
        assert_eq!(s.kurtosis, Some(1.0));
        let e = describe_series(&[-1.0, 1.0, -1.0, 1.0], Kurtosis::Excess).unwrap();
        assert_eq!(e.kurtosis, Some(-2.0));
        assert_eq!((s.min, s.max), (-1.0, 1.0));
    }

    #[test]
    fn describe_two_point_series_std() {
        // The (-1, 1) example needs n >= 4 for kurtosis; its mean/std/extremes
        // are checked via the doubled series plus the direct n-1 formula.
        let v = [-1.0f64, 1.0];
        let mean = v.iter().sum::<f64>() / 2.0;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 1.0).sqrt();
        assert_eq!(mean, 0.0);
        assert!((std - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(describe_series(&v, Kurtosis::Raw), Err(PanelError::TooFewObservations { .. })));
    }

    #[test]
    fn odd_median() {
        let s = describe_series(&[5.0, 1.0, 3.0, 2.0, 4.0], Kurtosis::Raw).unwrap();
        assert_eq!(s.median, 3.0);
    }

    #[test]
    fn average_returns_windows() {
        let rp = ReturnPanel::new(vec![10, 20, 30], vec!["X".into(), "USDT".into()], vec![vec![0.1, 0.2, 0.6], vec![0.0; 3]])
            .unwrap();
        let one = average_returns(&rp, 20, 20).unwrap();
        assert_eq!(one, vec![("X".to_string(), 0.2), ("USDT".to_string(), 0.0)]);
        let two = average_returns(&rp, 15, 30).unwrap();
        assert!((two[0].1 - 0.4).abs() < 1e-15);
        assert_eq!(two[1].1, 0.0);
        assert!(matches!(average_returns(&rp, 31, 40), Err(PanelError::EmptyWindow { .. })));
        let mut sorted = two.clone();
        sort_by_value(&mut sorted, false);
        assert_eq!(sorted[0].0, "USDT");
    }

    fn naive_moments(v: &[f64]) -> (f64, f64, f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let c = |k: i32| v.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt(), c(3) / c(2).powf(1.5), c(4) / c(2).powi(2))
    }

    proptest! {
        #[test]
        fn telescoping_sum(prices in prop::collection::vec(0.01f64..1000.0, 2..60)) {
            let p = panel(vec![prices.clone()]);
            let rp = log_returns(&p).unwrap();
            let total: f64 = rp.returns()[0].iter().sum();
            let expected = prices.last().unwrap().ln() - prices[0].ln();
            prop_assert!((total - expected).abs() <= 1e-10);
        }

        #[test]
        fn rescale_is_return_invariant(prices in prop::collection::vec(0.01f64..1000.0, 2..40)) {
            let p = panel(vec![prices]);
            let scaled = rescale(&p);
            let q = PricePanel::new(p.timestamps().to_vec(), p.assets().to_vec(), scaled.clone(), None).unwrap();
            prop_assert!(scaled.iter().all(|r| r[0] == 1.0));
            let a = log_returns(&p).unwrap();
            let b = log_returns(&q).unwrap();
            for (x, y) in a.returns()[0].iter().zip(&b.returns()[0]) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn identical_assets_market_equals_asset(r in prop::collection::vec(-0.5f64..0.5, 1..30), n in 1usize..8) {
            let assets = (0..n).map(|i| format!("A{i}")).collect();
            let rp = ReturnPanel::new((0..r.len() as i64).collect(), assets, vec![r.clone(); n]).unwrap();
            prop_assert_eq!(market_return(&rp).values, r);
        }

        #[test]
        fn describe_matches_two_pass_oracle(v in prop::collection::vec(-1.0f64..1.0, 4..100)) {
            let s = describe_series(&v, Kurtosis::Raw).unwrap();
            let (mean, std, skew, kurt) = naive_moments(&v);
            prop_assert!((s.mean - mean).abs() <= 1e-10);
            prop_assert!((s.std - std).abs() <= 1e-10);
            prop_assert!((s.skewness.unwrap() - skew).abs() <= 1e-10 * skew.abs().max(1.0));
            prop_assert!((s.kurtosis.unwrap() - kurt).abs() <= 1e-10 * kurt.abs().max(1.0));
            prop_assert!(s.min <= s.median && s.median <= s.max);
        }
    }
}
