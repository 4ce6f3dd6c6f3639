//! Herding diagnostics from cross-sectional return dispersion.
//!
//! `CSAD_t = (1/N) Σ_i |r_{i,t} − r_{m,t}|` is regressed on the market return.
//! The symmetric form uses `[1, |r_m|, r_m²]`; the asymmetric form splits both
//! terms by the sign of `r_m` with `D = 1` when `r_m < 0`. Herding shows up as
//! a significantly negative coefficient on a squared term. Inference uses
//! Newey–West (Bartlett kernel) standard errors.

use crate::panel::{MarketReturnSeries, PanelError, ReturnPanel};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HerdingError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },
    #[error("need more observations than parameters: T = {t}, k = {k}")]
    TooFewObservations { t: usize, k: usize },
    #[error("HAC lag {lag} must be smaller than T = {t}")]
    LagTooLarge { lag: usize, t: usize },
    #[error("need at least {needed} observations for the rolling window, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("excluding {excluded} assets would leave {remaining} (need at least 2)")]
    TooFewAssetsRemain { excluded: usize, remaining: usize },
    #[error("unknown asset `{0}`")]
    UnknownAsset(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl From<PanelError> for HerdingError {
    fn from(e: PanelError) -> Self {
        HerdingError::InvalidParameter(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsadSeries {
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
}

pub fn csad(rp: &ReturnPanel, m: &MarketReturnSeries) -> Result<CsadSeries, HerdingError> {
    if rp.len() != m.values.len() {
        return Err(HerdingError::LengthMismatch { left: rp.len(), right: m.values.len() });
    }
    let n = rp.n_assets() as f64;
    let values = m.values.iter().enumerate().map(|(t, &rm)| mean_abs_deviation(rp.cross_section(t), rm, n)).collect();
    Ok(CsadSeries { timestamps: rp.timestamps().to_vec(), values })
}

/// `a + b` as an unevaluated pair `(sum, error)` with no rounding loss.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Mean of `|r - rm|` rounded once at the end. Each deviation and the running
/// sum are carried in double-double, so e.g. two assets give exactly
/// `|r1 - r2| / 2`.
fn mean_abs_deviation(returns: impl Iterator<Item = f64>, rm: f64, n: f64) -> f64 {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for r in returns {
        let (d, e) = two_sum(r, -rm);
        let (d, e) = if d < 0.0 || (d == 0.0 && e < 0.0) { (-d, -e) } else { (d, e) };
        let (s, err) = two_sum(hi, d);
        hi = s;
        lo += err + e;
    }
    let (hi, lo) = two_sum(hi, lo);
    let q = hi / n;
    q + (q.mul_add(-n, hi) + lo) / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionForm {
    Symmetric,
    Asymmetric,
}

impl RegressionForm {
    pub fn name(self) -> &'static str {
        match self {
            RegressionForm::Symmetric => "symmetric",
            RegressionForm::Asymmetric => "asymmetric",
        }
    }

    pub fn coefficient_names(self) -> &'static [&'static str] {
        match self {
            RegressionForm::Symmetric => &["alpha", "abs_rm", "rm_sq"],
            RegressionForm::Asymmetric => &["alpha", "up_abs_rm", "down_abs_rm", "up_rm_sq", "down_rm_sq"],
        }
    }

    /// Indices of the squared-return coefficients.
    pub fn squared_terms(self) -> &'static [usize] {
        match self {
            RegressionForm::Symmetric => &[2],
            RegressionForm::Asymmetric => &[3, 4],
        }
    }
}

/// Regressors built from the market return. Hours with `r_m = 0` fall in
/// the non-negative (`D = 0`) branch.
pub fn design_matrix(form: RegressionForm, market: &[f64]) -> DMatrix<f64> {
    match form {
        RegressionForm::Symmetric => DMatrix::from_fn(market.len(), 3, |t, c| {
            let r = market[t];
            match c {
                0 => 1.0,
                1 => r.abs(),
                _ => r * r,
            }
        }),
        RegressionForm::Asymmetric => DMatrix::from_fn(market.len(), 5, |t, c| {
            let r = market[t];
            let down = r < 0.0;
            match c {
                0 => 1.0,
                1 if !down => r.abs(),
                2 if down => r.abs(),
                3 if !down => r * r,
                4 if down => r * r,
                _ => 0.0,
            }
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    /// Observations.
    pub t: usize,
    /// Regressors excluding the intercept.
    pub k: usize,
    /// `(XᵀX)⁻¹`, from the triangular factor.
    pub xtx_inv: DMatrix<f64>,
}

/// Least squares via Householder QR. The first column of `x` is taken to be
/// the intercept when computing the adjusted R².
pub fn ols(x: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit, HerdingError> {
    let (t, p) = x.shape();
    if y.len() != t {
        return Err(HerdingError::LengthMismatch { left: t, right: y.len() });
    }
    if t <= p {
        return Err(HerdingError::TooFewObservations { t, k: p });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if let Some(column) = (0..p).find(|&i| r[(i, i)].abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return Err(HerdingError::RankDeficient { column });
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let rhs = qty.rows(0, p).into_owned();
    let coefficients = r.solve_upper_triangular(&rhs).ok_or(HerdingError::RankDeficient { column: p - 1 })?;
    let residuals = &yv - x * &coefficients;

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(HerdingError::RankDeficient { column: p - 1 })?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let mean = yv.mean();
    let sst: f64 = yv.iter().map(|v| (v - mean).powi(2)).sum();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    let k = p - 1;
    let adj_r2 = 1.0 - (1.0 - r2) * (t as f64 - 1.0) / (t as f64 - k as f64 - 1.0);
    Ok(OlsFit { coefficients, residuals, r2, adj_r2, t, k, xtx_inv })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HacLag {
    /// `floor(4 (T/100)^(2/9))`.
    #[default]
    Auto,
    Fixed(usize),
}

impl HacLag {
    pub fn resolve(self, t: usize) -> usize {
        match self {
            HacLag::Auto => auto_lag(t),
            HacLag::Fixed(l) => l,
        }
    }
}

pub fn auto_lag(t: usize) -> usize {
    (4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct HacCovariance {
    pub lag: usize,
    pub covariance: DMatrix<f64>,
    pub std_errors: Vec<f64>,
}

/// Newey–West covariance of OLS coefficients:
/// `T · (XᵀX)⁻¹ S (XᵀX)⁻¹` with
/// `S = Γ₀ + Σ_{l=1..L} (1 − l/(L+1)) (Γ_l + Γ_lᵀ)` and
/// `Γ_l = (1/T) Σ_t (x_t u_t)(x_{t−l} u_{t−l})ᵀ`.
pub fn newey_west(x: &DMatrix<f64>, residuals: &[f64], lag: HacLag) -> Result<HacCovariance, HerdingError> {
    let (t, p) = x.shape();
    if residuals.len() != t {
        return Err(HerdingError::LengthMismatch { left: t, right: residuals.len() });
    }
    if t <= p {
        return Err(HerdingError::TooFewObservations { t, k: p });
    }
    let lag = lag.resolve(t);
    if lag >= t {
        return Err(HerdingError::LagTooLarge { lag, t });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(HerdingError::RankDeficient { column: p - 1 })?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(newey_west_with(x, residuals, lag, &xtx_inv))
}

fn newey_west_with(x: &DMatrix<f64>, residuals: &[f64], lag: usize, xtx_inv: &DMatrix<f64>) -> HacCovariance {
    let (t, p) = x.shape();
    // scores g_t = x_t u_t, one row per observation
    let scores = DMatrix::from_fn(t, p, |i, j| x[(i, j)] * residuals[i]);
    let tf = t as f64;
    let mut s = scores.transpose() * &scores / tf;
    for l in 1..=lag {
        let lead = scores.rows(l, t - l);
        let lagged = scores.rows(0, t - l);
        let gamma = lead.transpose() * lagged / tf;
        let w = 1.0 - l as f64 / (lag as f64 + 1.0);
        s += (&gamma + gamma.transpose()) * w;
    }
    let covariance = xtx_inv * s * xtx_inv * tf;
    let std_errors = (0..p).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect();
    HacCovariance { lag, covariance, std_errors }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PValueDist {
    /// Student t with `T − k − 1` degrees of freedom.
    #[default]
    StudentT,
    Normal,
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub name: &'static str,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HerdingRegressionResult {
    pub form: RegressionForm,
    pub coefficients: Vec<Coefficient>,
    pub r2: f64,
    pub adj_r2: f64,
    pub lag: usize,
    pub t: usize,
    /// Regressors excluding the intercept.
    pub k: usize,
    /// First and last timestamp covered.
    pub span: (i64, i64),
}

impl HerdingRegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Squared-return terms that are negative with two-sided p below `level`.
    pub fn herding_terms(&self, level: f64) -> Vec<&Coefficient> {
        self.form
            .squared_terms()
            .iter()
            .map(|&i| &self.coefficients[i])
            .filter(|c| c.estimate < 0.0 && c.p_value < level)
            .collect()
    }

    pub fn herding_detected(&self, level: f64) -> bool {
        !self.herding_terms(level).is_empty()
    }
}

fn two_sided_p(t_stat: f64, dof: f64, dist: PValueDist) -> f64 {
    if !t_stat.is_finite() {
        return if t_stat.is_nan() { f64::NAN } else { 0.0 };
    }
    let tail = match dist {
        PValueDist::StudentT => {
            let d = StudentsT::new(0.0, 1.0, dof).expect("dof > 0");
            d.sf(t_stat.abs())
        }
        PValueDist::Normal => Normal::standard().sf(t_stat.abs()),
    };
    (2.0 * tail).min(1.0)
}

/// Fits the chosen form of the dispersion regression with HAC inference.
pub fn run_herding(
    csad: &CsadSeries,
    market: &MarketReturnSeries,
    form: RegressionForm,
    lag: HacLag,
    dist: PValueDist,
) -> Result<HerdingRegressionResult, HerdingError> {
    if csad.values.len() != market.values.len() {
        return Err(HerdingError::LengthMismatch { left: csad.values.len(), right: market.values.len() });
    }
    fit_span(&csad.values, &market.values, &csad.timestamps, form, lag, dist)
}

fn fit_span(
    y: &[f64],
    rm: &[f64],
    ts: &[i64],
    form: RegressionForm,
    lag: HacLag,
    dist: PValueDist,
) -> Result<HerdingRegressionResult, HerdingError> {
    let x = design_matrix(form, rm);
    let fit = ols(&x, y)?;
    let lag = lag.resolve(fit.t);
    if lag >= fit.t {
        return Err(HerdingError::LagTooLarge { lag, t: fit.t });
    }
    let hac = newey_west_with(&x, fit.residuals.as_slice(), lag, &fit.xtx_inv);
    let dof = (fit.t - fit.k - 1) as f64;
    let coefficients = form
        .coefficient_names()
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let estimate = fit.coefficients[i];
            let std_error = hac.std_errors[i];
            let t_stat = estimate / std_error;
            let p_value = two_sided_p(t_stat, dof, dist);
            Coefficient { name, estimate, std_error, t_stat, p_value, stars: stars(p_value) }
        })
        .collect();
    Ok(HerdingRegressionResult {
        form,
        coefficients,
        r2: fit.r2,
        adj_r2: fit.adj_r2,
        lag,
        t: fit.t,
        k: fit.k,
        span: (ts[0], ts[ts.len() - 1]),
    })
}

/// Asymmetric regressions over rolling windows of `window` hours.
pub fn rolling_herding(
    csad: &CsadSeries,
    market: &MarketReturnSeries,
    window: usize,
    step: usize,
    lag: HacLag,
    dist: PValueDist,
) -> Result<Vec<HerdingRegressionResult>, HerdingError> {
    let t = csad.values.len();
    if t != market.values.len() {
        return Err(HerdingError::LengthMismatch { left: t, right: market.values.len() });
    }
    if step == 0 {
        return Err(HerdingError::InvalidParameter("step must be >= 1".into()));
    }
    if t < window {
        return Err(HerdingError::InsufficientData { needed: window, got: t });
    }
    let count = (t - window) / step + 1;
    (0..count)
        .into_par_iter()
        .map(|k| {
            let s = k * step;
            let e = s + window;
            fit_span(
                &csad.values[s..e],
                &market.values[s..e],
                &csad.timestamps[s..e],
                RegressionForm::Asymmetric,
                lag,
                dist,
            )
        })
        .collect()
}

/// Drops the listed assets; market return and CSAD must be recomputed from
/// the returned panel.
pub fn exclude_assets(rp: &ReturnPanel, tickers: &[String]) -> Result<ReturnPanel, HerdingError> {
    for t in tickers {
        if rp.asset_index(t).is_none() {
            return Err(HerdingError::UnknownAsset(t.clone()));
        }
    }
    let keep: Vec<usize> = (0..rp.n_assets()).filter(|&i| !tickers.contains(&rp.assets()[i])).collect();
    if keep.len() < 2 {
        return Err(HerdingError::TooFewAssetsRemain { excluded: rp.n_assets() - keep.len(), remaining: keep.len() });
    }
    Ok(rp.select_rows(&keep))
}
