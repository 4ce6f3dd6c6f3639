//! Exponentially weighted Pearson correlation over rolling windows.
//!
//! For a window of `Δt` observations the weights are
//! `w_t = w_0 · exp((t − Δt) / τ)`, `t = 1..Δt`, with `w_0` chosen so that
//! the weights sum to one. The most recent observation carries the largest
//! weight. `τ` is either `θ` itself or `θ · Δt`, see [`ThetaMode`].

use crate::panel::ReturnPanel;
use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

/// Below this weighted variance a series is treated as constant.
pub const DEGENERATE_VARIANCE: f64 = 1e-18;

#[derive(Debug, Error, PartialEq)]
pub enum CorrError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: x has {x}, y has {y}, weights have {w}")]
    LengthMismatch { x: usize, y: usize, w: usize },
    #[error("need at least {needed} return observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("unknown asset `{0}`")]
    UnknownAsset(String),
}

/// How the decay parameter θ maps onto the exponential time constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaMode {
    /// τ = θ · window (θ = 0.3 on 24 hours decays over 7.2 hours).
    #[default]
    WindowFraction,
    /// τ = θ, in observations.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    window: usize,
    theta: f64,
    decay: f64,
    weights: Vec<f64>,
}

impl WeightScheme {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Effective time constant τ in observations.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Equal weights `1/window`; the θ → ∞ limit.
    pub fn uniform(window: usize) -> Result<Self, CorrError> {
        if window < 2 {
            return Err(CorrError::InvalidParameter(format!("window must be >= 2, got {window}")));
        }
        Ok(Self {
            window,
            theta: f64::INFINITY,
            decay: f64::INFINITY,
            weights: vec![1.0 / window as f64; window],
        })
    }
}

pub fn make_weights(window: usize, theta: f64, mode: ThetaMode) -> Result<WeightScheme, CorrError> {
    if window < 2 {
        return Err(CorrError::InvalidParameter(format!("window must be >= 2, got {window}")));
    }
    if !(theta.is_finite() && theta > 0.0) {
        return Err(CorrError::InvalidParameter(format!("theta must be finite and > 0, got {theta}")));
    }
    let decay = match mode {
        ThetaMode::WindowFraction => theta * window as f64,
        ThetaMode::Literal => theta,
    };
    let dt = window as f64;
    // exponents are <= 0 so nothing overflows; the last weight is w_0 itself.
    let raw: Vec<f64> = (1..=window).map(|t| ((t as f64 - dt) / decay).exp()).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.into_iter().map(|w| w / total).collect();
    Ok(WeightScheme { window, theta, decay, weights })
}

/// A correlation value together with its degeneracy flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corr {
    pub rho: f64,
    pub degenerate: bool,
}

fn weighted_mean(x: &[f64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(x, w)| w * x).sum()
}

/// Weighted Pearson correlation. When either weighted variance falls below
/// [`DEGENERATE_VARIANCE`] the result is 0 with `degenerate` set.
pub fn weighted_corr(x: &[f64], y: &[f64], w: &WeightScheme) -> Result<Corr, CorrError> {
    let wt = w.weights();
    if x.len() != y.len() || x.len() != wt.len() {
        return Err(CorrError::LengthMismatch { x: x.len(), y: y.len(), w: wt.len() });
    }
    let (mx, my) = (weighted_mean(x, wt), weighted_mean(y, wt));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for ((xi, yi), wi) in x.iter().zip(y).zip(wt) {
        let (dx, dy) = (xi - mx, yi - my);
        sxy += wi * (dx * dy);
        sxx += wi * (dx * dx);
        syy += wi * (dy * dy);
    }
    Ok(finish(sxy, sxx, syy))
}

fn finish(sxy: f64, sxx: f64, syy: f64) -> Corr {
    if sxx < DEGENERATE_VARIANCE || syy < DEGENERATE_VARIANCE {
        return Corr { rho: 0.0, degenerate: true };
    }
    Corr { rho: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0), degenerate: false }
}

/// One window's weighted correlation matrix, labelled by the timestamp of the
/// window's last return.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCorrMatrix {
    pub window_end: i64,
    pub matrix: DMatrix<f64>,
    /// `degenerate[(i, j)]` is set when either series is constant in the window.
    pub degenerate: DMatrix<bool>,
}

impl WeightedCorrMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Correlation matrix for `columns[start..start+window]` of each row.
pub fn window_matrix(rows: &[Vec<f64>], start: usize, w: &WeightScheme, window_end: i64) -> WeightedCorrMatrix {
    let n = rows.len();
    let wt = w.weights();
    let len = wt.len();
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            let slice = &row[start..start + len];
            let m = weighted_mean(slice, wt);
            slice.iter().map(|v| v - m).collect()
        })
        .collect();
    let var: Vec<f64> = centered
        .iter()
        .map(|d| d.iter().zip(wt).map(|(d, w)| w * (d * d)).sum())
        .collect();
    let mut matrix = DMatrix::identity(n, n);
    let mut degenerate = DMatrix::from_element(n, n, false);
    for i in 0..n {
        degenerate[(i, i)] = var[i] < DEGENERATE_VARIANCE;
        for j in (i + 1)..n {
            let cov: f64 = centered[i].iter().zip(&centered[j]).zip(wt).map(|((a, b), w)| w * (a * b)).sum();
            let c = finish(cov, var[i], var[j]);
            matrix[(i, j)] = c.rho;
            matrix[(j, i)] = c.rho;
            degenerate[(i, j)] = c.degenerate;
            degenerate[(j, i)] = c.degenerate;
        }
    }
    WeightedCorrMatrix { window_end, matrix, degenerate }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingCorrSeries {
    pub assets: Vec<String>,
    pub step: usize,
    pub matrices: Vec<WeightedCorrMatrix>,
}

impl RollingCorrSeries {
    pub fn window_ends(&self) -> Vec<i64> {
        self.matrices.iter().map(|m| m.window_end).collect()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

/// Number of windows of `window` observations, advancing by `step`, that
/// fit in `n_obs` observations.
pub fn window_count(n_obs: usize, window: usize, step: usize) -> usize {
    if n_obs < window || step == 0 {
        0
    } else {
        (n_obs - window) / step + 1
    }
}

/// One weighted correlation matrix per window of returns, the first ending
/// at observation `window`, then every `step` observations.
pub fn rolling_corr(rp: &ReturnPanel, step: usize, w: &WeightScheme) -> Result<RollingCorrSeries, CorrError> {
    let window = w.window();
    if step == 0 {
        return Err(CorrError::InvalidParameter("step must be >= 1".into()));
    }
    if rp.len() < window {
        return Err(CorrError::InsufficientData { needed: window, got: rp.len() });
    }
    let count = window_count(rp.len(), window, step);
    let ts = rp.timestamps();
    let matrices = (0..count)
        .into_par_iter()
        .map(|k| {
            let start = k * step;
            window_matrix(rp.returns(), start, w, ts[start + window - 1])
        })
        .collect();
    Ok(RollingCorrSeries { assets: rp.assets().to_vec(), step, matrices })
}

/// Either one asset's average correlation with the rest of the system, or
/// the mean over all off-diagonal entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Focus {
    Market,
    Asset(String),
}

pub fn average_corr(series: &RollingCorrSeries, focus: &Focus) -> Result<Vec<f64>, CorrError> {
    let n = series.assets.len();
    match focus {
        Focus::Market => Ok(series
            .matrices
            .iter()
            .map(|m| {
                if n < 2 {
                    return 0.0;
                }
                let total: f64 = m.matrix.iter().sum::<f64>() - m.matrix.diagonal().sum();
                total / (n * (n - 1)) as f64
            })
            .collect()),
        Focus::Asset(name) => {
            let i = series
                .assets
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| CorrError::UnknownAsset(name.clone()))?;
            Ok(series
                .matrices
                .iter()
                .map(|m| {
                    if n < 2 {
                        return 0.0;
                    }
                    let row: f64 = (0..n).filter(|&j| j != i).map(|j| m.matrix[(i, j)]).sum();
                    row / (n - 1) as f64
                })
                .collect())
        }
    }
}

/// Exponential moving average: `s_1 = x_1`, `s_t = α x_t + (1 − α) s_{t−1}`.
pub fn ema(signal: &[f64], alpha: f64) -> Result<Vec<f64>, CorrError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CorrError::InvalidParameter(format!("alpha must be in (0, 1], got {alpha}")));
    }
    let mut out = Vec::with_capacity(signal.len());
    let mut prev: Option<f64> = None;
    for &x in signal {
        let s = match prev {
            None => x,
            Some(p) => alpha * x + (1.0 - alpha) * p,
        };
        out.push(s);
        prev = Some(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pearson(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx.sqrt() * syy.sqrt())
    }

    #[test]
    fn two_point_weights_closed_form() {
        // theta 0.5 of a 2-hour window gives decay 1: weights ∝ (e^-1, 1).
        let w = make_weights(2, 0.5, ThetaMode::WindowFraction).unwrap();
        let e = (-1.0f64).exp();
        assert!((w.weights()[0] - e / (1.0 + e)).abs() < 1e-15);
        assert!((w.weights()[0] - 0.26894).abs() < 1e-5);
        assert!((w.weights()[1] - 0.73106).abs() < 1e-5);
        let lit = make_weights(2, 1.0, ThetaMode::Literal).unwrap();
        assert_eq!(lit.weights(), w.weights());
    }

    #[test]
    fn weights_flatten_for_large_theta() {
        let w = make_weights(24, 1e6, ThetaMode::Literal).unwrap();
        for x in w.weights() {
            assert!((x - 1.0 / 24.0).abs() < 1e-6);
        }
    }

    #[test]
    fn literal_theta_concentrates_on_last_observation() {
        let w = make_weights(24, 0.3, ThetaMode::Literal).unwrap();
        assert!(w.weights()[23] > 0.96);
        assert!(w.weights().windows(2).all(|p| p[0] < p[1]));
        let f = make_weights(24, 0.3, ThetaMode::WindowFraction).unwrap();
        assert!((f.decay() - 7.2).abs() < 1e-12);
    }

    #[test]
    fn invalid_weight_parameters() {
        assert!(make_weights(1, 0.3, ThetaMode::WindowFraction).is_err());
        assert!(make_weights(24, 0.0, ThetaMode::WindowFraction).is_err());
        assert!(make_weights(24, f64::NAN, ThetaMode::Literal).is_err());
    }

    #[test]
    fn self_and_anti_correlation() {
        let w = make_weights(5, 0.3, ThetaMode::WindowFraction).unwrap();
        let x = [0.1, -0.3, 0.2, 0.05, -0.1];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(weighted_corr(&x, &x, &w).unwrap().rho, 1.0);
        assert_eq!(weighted_corr(&x, &neg, &w).unwrap().rho, -1.0);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let w = make_weights(4, 0.3, ThetaMode::WindowFraction).unwrap();
        let c = weighted_corr(&[0.0; 4], &[0.1, 0.2, -0.1, 0.0], &w).unwrap();
        assert_eq!(c, Corr { rho: 0.0, degenerate: true });
        assert!(matches!(weighted_corr(&[0.0; 3], &[0.0; 4], &w), Err(CorrError::LengthMismatch { .. })));
    }

    #[test]
    fn rolling_window_count() {
        let t = 25;
        let rows = vec![(0..t).map(|i| (i as f64 * 0.7).sin()).collect::<Vec<_>>(); 3];
        let rp = ReturnPanel::new((0..t as i64).collect(), vec!["A".into(), "B".into(), "C".into()], rows).unwrap();
        let w = make_weights(24, 0.3, ThetaMode::WindowFraction).unwrap();
        let rc = rolling_corr(&rp, 1, &w).unwrap();
        assert_eq!(rc.len(), 2);
        assert_eq!(rc.window_ends(), vec![23, 24]);
        for m in &rc.matrices {
            assert!(m.matrix.iter().all(|v| *v == 1.0));
        }
        assert_eq!(average_corr(&rc, &Focus::Market).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(rolling_corr(&rp, 1, &make_weights(26, 0.3, ThetaMode::Literal).unwrap()), Err(CorrError::InsufficientData { .. })));
    }

    #[test]
    fn two_asset_average_is_pairwise_value() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 1.3).cos()).collect();
        let rp = ReturnPanel::new((0..30).collect(), vec!["X".into(), "Y".into()], vec![x.clone(), y.clone()]).unwrap();
        let w = make_weights(10, 0.3, ThetaMode::WindowFraction).unwrap();
        let rc = rolling_corr(&rp, 5, &w).unwrap();
        let avg = average_corr(&rc, &Focus::Asset("X".into())).unwrap();
        for (k, v) in avg.iter().enumerate() {
            let s = k * 5;
            let direct = weighted_corr(&x[s..s + 10], &y[s..s + 10], &w).unwrap().rho;
            assert_eq!(*v, direct);
        }
        assert!(matches!(average_corr(&rc, &Focus::Asset("Z".into())), Err(CorrError::UnknownAsset(_))));
    }

    #[test]
    fn ema_examples() {
        assert_eq!(ema(&[0.0, 1.0], 0.3).unwrap(), vec![0.0, 0.3]);
        assert_eq!(ema(&[1.0, 5.0, -2.0], 1.0).unwrap(), vec![1.0, 5.0, -2.0]);
        assert_eq!(ema(&[2.5; 5], 0.3).unwrap(), vec![2.5; 5]);
        assert!(ema(&[1.0], 0.0).is_err());
        assert!(ema(&[1.0], 1.5).is_err());
        assert!(ema(&[], 0.3).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn symmetric_exactly(x in prop::collection::vec(-1.0f64..1.0, 12), y in prop::collection::vec(-1.0f64..1.0, 12)) {
            let w = make_weights(12, 0.3, ThetaMode::WindowFraction).unwrap();
            prop_assert_eq!(weighted_corr(&x, &y, &w).unwrap(), weighted_corr(&y, &x, &w).unwrap());
        }

        #[test]
        fn affine_invariance(
            x in prop::collection::vec(-1.0f64..1.0, 16),
            y in prop::collection::vec(-1.0f64..1.0, 16),
            a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
            b in -5.0f64..5.0,
        ) {
            let w = make_weights(16, 0.3, ThetaMode::WindowFraction).unwrap();
            let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let base = weighted_corr(&x, &y, &w).unwrap().rho;
            let moved = weighted_corr(&ax, &y, &w).unwrap().rho;
            prop_assert!((moved - a.signum() * base).abs() <= 1e-12);
        }

        #[test]
        fn uniform_weights_match_pearson(x in prop::collection::vec(-1.0f64..1.0, 20), y in prop::collection::vec(-1.0f64..1.0, 20)) {
            let w = WeightScheme::uniform(20).unwrap();
            let got = weighted_corr(&x, &y, &w).unwrap().rho;
            prop_assert!((got - pearson(&x, &y)).abs() <= 1e-12);
        }

        #[test]
        fn weights_normalized(window in 2usize..200, theta in 0.01f64..10.0, literal in any::<bool>()) {
            let mode = if literal { ThetaMode::Literal } else { ThetaMode::WindowFraction };
            let w = make_weights(window, theta, mode).unwrap();
            prop_assert!((w.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(w.weights().iter().all(|v| *v >= 0.0));
            prop_assert!(w.weights().windows(2).all(|p| p[0] <= p[1]));
            prop_assert!(w.weights()[window - 1] > 0.0);
        }

        #[test]
        fn ema_is_bounded(x in prop::collection::vec(-100.0f64..100.0, 1..50), alpha in 0.01f64..=1.0) {
            let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for s in ema(&x, alpha).unwrap() {
                prop_assert!(s >= lo - 1e-9 && s <= hi + 1e-9);
            }
        }
    }
}
